#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ksaqa/ambiguity.hpp"
#include "ksaqa/gru.hpp"
#include "ksaqa/parameters.hpp"
#include "ksaqa/qa_dataset.hpp"

namespace ksaqa {

enum class Variant { bigru, ks_bigru, ksa_bigru };

// "BiGRU", "KS-BiGRU", "KSA-BiGRU"; parsing ignores case.
std::string_view to_string(Variant v);
Variant parse_variant(std::string_view text);

struct ModelConfig {
  std::size_t d_word = 500;
  std::size_t d_rel = 300;
  std::size_t d_hidden = 300;
  std::size_t question_layers = 2;
  std::size_t attention_hidden = 650;
  double dropout = 0.1;
  double lambda = 0.5;
  std::size_t negatives = 5;
  Variant variant = Variant::ksa_bigru;
  double lr = 0.001;
  std::size_t epochs = 45;
  std::size_t batch_size = 64;  // questions per optimizer step
  std::uint64_t seed = 0;
  // Train on a fresh random order of R(s) each time a subgraph is encoded.
  bool shuffle_subgraph = false;

  void validate() const;
};

struct InterpretationScore {
  InterpretationPair pair;
  double probability = 0.0;
};

// Training targets for one candidate subject of a question.
struct CandidateTargets {
  EntityId subject;
  std::vector<RelationId> relations;
  std::vector<double> labels;  // 1 for positives, 0 for sampled negatives
};

struct QuestionTargets {
  Tokens formatted;
  std::vector<CandidateTargets> candidates;
};

// Every candidate s with at least one positive contributes its positive
// relations, each followed by `negatives` draws from negative_pool(s).
QuestionTargets build_targets(const LabeledExample& example, const KnowledgeBase& kb, std::size_t negatives,
                              Rng& rng);

class KsaModel {
 public:
  // Output index i scores relation id i; `relation_names[i]` is its text.
  KsaModel(ModelConfig config, Vocabulary vocab, std::vector<std::string> relation_names);

  const ModelConfig& config() const { return config_; }
  Variant variant() const { return config_.variant; }
  const Vocabulary& vocab() const { return vocab_; }
  const std::vector<std::string>& relation_names() const { return relation_names_; }
  std::size_t relation_count() const { return relation_names_.size(); }
  ParameterStore& params() { return *params_; }
  const ParameterStore& params() const { return *params_; }

  // Replaces the first relation_count() rows of the relation table, e.g.
  // with pretrained vectors [relation_count x d_rel].
  void set_relation_embeddings(const Tensor& rows);

  // u_KS [1 x d_hidden]; zero row for an empty list.
  Var encode_subgraph(Tape& tape, std::span<const RelationId> relations) const;

  struct QuestionEncoding {
    Var states;  // [m x 2 d_hidden], top layer
    Var final;   // [1 x 2 d_hidden], u_Q
  };
  // `rng` drives dropout and is only used when `train` is set.
  QuestionEncoding encode_question(Tape& tape, const Tokens& formatted, bool train, Rng* rng = nullptr) const;

  struct Attention {
    Var weights;  // [m x 1], sums to 1
    Var summary;  // [1 x 2 d_hidden]
  };
  Attention attend(Tape& tape, Var states, Var u_ks) const;

  // Decoder initial state [1 x d_hidden] for the configured variant.
  Var encoder_output(Tape& tape, const QuestionEncoding& q, Var u_ks) const;
  // Decoder step from <_start>, then the output layer: [1 x relation_count].
  Var decode_logits(Tape& tape, Var encoder_out) const;

  // Logits for one candidate subject given its one-hop relation list.
  Var candidate_logits(Tape& tape, const QuestionEncoding& q, std::span<const RelationId> subgraph) const;

  // Binary cross-entropy summed over every (q, s, r, y) term of the batch.
  Var loss(Tape& tape, std::span<const QuestionTargets> batch, const KnowledgeBase& kb, bool train,
           Rng* rng = nullptr) const;

  // Probabilities of every (s, r) with s in the candidates and r in R(s),
  // descending, ties by (entity id, relation id).
  std::vector<InterpretationScore> score_pairs(const Tokens& formatted, std::span<const EntityId> candidates,
                                               const KnowledgeBase& kb) const;
  // Pairs with probability strictly above lambda.
  std::vector<InterpretationPair> predict(const Tokens& formatted, std::span<const EntityId> candidates,
                                          const KnowledgeBase& kb, double lambda) const;
  std::optional<InterpretationPair> top1(const Tokens& formatted, std::span<const EntityId> candidates,
                                         const KnowledgeBase& kb) const;

  // Attention weights over the formatted tokens for subject s. Throws
  // ConfigError unless the variant is KSA-BiGRU.
  std::vector<double> attention_weights(const Tokens& formatted, EntityId s, const KnowledgeBase& kb) const;

  // `<dir>/ksa.ckpt`, `<dir>/ksa.vocab` and the manifest `<dir>/ksa.json`.
  void save(const std::filesystem::path& dir) const;
  static KsaModel load(const std::filesystem::path& dir);
  // Throws ConfigError unless the model's relation names are a prefix of
  // the symbol table's relations (equal ids mean equal relations).
  void check_relations(const Symbols& symbols) const;

 private:
  std::vector<std::size_t> relation_rows(std::span<const RelationId> relations) const;

  ModelConfig config_;
  Vocabulary vocab_;
  std::vector<std::string> relation_names_;
  std::unique_ptr<ParameterStore> params_;
  const Parameter* words_ = nullptr;
  const Parameter* relations_ = nullptr;
  std::unique_ptr<Gru> subgraph_;
  std::vector<std::unique_ptr<BiGru>> question_;
  const Parameter* att_w_ = nullptr;
  const Parameter* att_v_ = nullptr;
  const Parameter* att_b_ = nullptr;
  const Parameter* enc_w_ = nullptr;
  const Parameter* enc_b_ = nullptr;
  std::unique_ptr<Gru> decoder_;
  const Parameter* out_w_ = nullptr;
  const Parameter* out_b_ = nullptr;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;  // training loss summed over the epoch
  double valid_macro_f1 = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 1-based
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mean per-question F1 of predict() at the configured lambda, using gold
// spans and the stored candidates of each formatted example.
double macro_f1(const KsaModel& model, std::span<const LabeledExample> examples, const KnowledgeBase& kb);

// Minibatch Adam over the formatted examples of `train`. Negatives are
// resampled every epoch; the parameters of the epoch with the best
// validation macro-F1 (training macro-F1 when `valid` is empty) are kept,
// rounded to float precision. Throws DataError when nothing is trainable.
TrainResult train_model(KsaModel& model, std::span<const LabeledExample> train,
                        std::span<const LabeledExample> valid, const KnowledgeBase& kb,
                        const EpochCallback& on_epoch = {});

// Vocabulary over the formatted tokens of the given examples.
Vocabulary build_question_vocabulary(std::span<const LabeledExample> examples, std::size_t min_count = 1);

}  // namespace ksaqa
