#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ksaqa/kb_store.hpp"
#include "ksaqa/rng.hpp"
#include "ksaqa/tensor.hpp"

namespace ksaqa {

enum class Norm { l1, l2 };

struct TransEConfig {
  std::size_t dim = 300;
  double margin = 1.0;
  Norm norm = Norm::l2;
  double lr = 0.01;
  std::size_t epochs = 100;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;

  void validate() const;
};

// Entity and relation vectors, one row per name. Row i of `entities` belongs
// to entity_names[i]; likewise for relations.
struct EmbeddingSet {
  Tensor entities;
  Tensor relations;
  std::vector<std::string> entity_names;
  std::vector<std::string> relation_names;

  std::size_t dim() const { return entities.cols(); }
};

// ||E[h] + R[r] - E[t]|| with rows addressed by id value.
double triple_score(const EmbeddingSet& set, EntityId h, RelationId r, EntityId t, Norm norm);

// Replaces head or tail (equal odds) with an entity from `pool`, retrying
// while the result is a KB triple. nullopt if no false triple turned up.
std::optional<Triple> corrupt_triple(const KnowledgeBase& kb, std::span<const EntityId> pool, const Triple& triple,
                                     Rng& rng);

// Entities occurring in some triple, ascending by id.
std::vector<EntityId> kb_entities(const KnowledgeBase& kb);

struct TransEResult {
  EmbeddingSet embeddings;
  std::vector<double> epoch_loss;  // summed hinge loss per epoch
};

// Margin-ranking SGD with filtered head/tail corruption. Entity rows are
// renormalized to unit length after every step; `after_step`, if set, sees
// the embeddings at that point. Rows are indexed by the KB's symbol ids.
TransEResult train_transe(const KnowledgeBase& kb, const TransEConfig& config,
                          const std::function<void(const EmbeddingSet&)>& after_step = {});

// 1 + number of KB entities scoring strictly better than t as tail of (h, r).
std::size_t tail_rank(const KnowledgeBase& kb, const EmbeddingSet& set, const Triple& triple, Norm norm);
double mean_tail_rank(const KnowledgeBase& kb, const EmbeddingSet& set, Norm norm);

// [vocab.size() x dim] rows in interner order, matched by relation name.
// Relations missing from `set` get uniform init in the embedding range.
Tensor export_relation_embeddings(const EmbeddingSet& set, const RelationInterner& vocab, Rng& rng);

// Writes `<dir>/transe.ckpt` (tensors "transe.entity", "transe.relation")
// and `<dir>/transe.names` (one "e|r<TAB>name" line per row).
void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& dir);
EmbeddingSet load_embeddings(const std::filesystem::path& dir);

}  // namespace ksaqa
