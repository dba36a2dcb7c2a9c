#include "ksaqa/transe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ksaqa/checkpoint.hpp"
#include "ksaqa/error.hpp"
#include "ksaqa/parameters.hpp"
#include "ksaqa/text.hpp"

namespace ksaqa {

namespace {

double* row_ptr(Tensor& t, std::size_t r) { return t.data() + r * t.cols(); }
const double* row_ptr(const Tensor& t, std::size_t r) { return t.data() + r * t.cols(); }

void normalize_row(Tensor& t, std::size_t r) {
  double* x = row_ptr(t, r);
  double sq = 0.0;
  for (std::size_t k = 0; k < t.cols(); ++k) sq += x[k] * x[k];
  const double n = std::sqrt(sq);
  if (n == 0.0) return;
  for (std::size_t k = 0; k < t.cols(); ++k) x[k] /= n;
}

// d = E[h] + R[r] - E[t]
void difference(const EmbeddingSet& set, std::uint32_t h, std::uint32_t r, std::uint32_t t, std::vector<double>& d) {
  const std::size_t dim = set.dim();
  d.resize(dim);
  const double* eh = row_ptr(set.entities, h);
  const double* rr = row_ptr(set.relations, r);
  const double* et = row_ptr(set.entities, t);
  for (std::size_t k = 0; k < dim; ++k) d[k] = eh[k] + rr[k] - et[k];
}

double norm_of(const std::vector<double>& d, Norm norm) {
  double s = 0.0;
  if (norm == Norm::l1) {
    for (double v : d) s += std::abs(v);
    return s;
  }
  for (double v : d) s += v * v;
  return std::sqrt(s);
}

// Gradient of the norm with respect to d, written back into d.
void norm_gradient(std::vector<double>& d, double value, Norm norm) {
  if (norm == Norm::l1) {
    for (double& v : d) v = v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
    return;
  }
  if (value == 0.0) {
    std::fill(d.begin(), d.end(), 0.0);
    return;
  }
  for (double& v : d) v /= value;
}

struct Update {
  std::vector<std::pair<std::uint32_t, std::vector<double>>> entities;
  std::vector<std::pair<std::uint32_t, std::vector<double>>> relations;
};

void add_update(std::vector<std::pair<std::uint32_t, std::vector<double>>>& into, std::uint32_t row,
                const std::vector<double>& g, double sign) {
  std::vector<double> scaled(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) scaled[k] = sign * g[k];
  into.emplace_back(row, std::move(scaled));
}

}  // namespace

void TransEConfig::validate() const {
  if (dim == 0) throw ConfigError("transe dim must be positive");
  if (!(margin > 0)) throw ConfigError("transe margin must be positive");
  if (!(lr > 0)) throw ConfigError("transe lr must be positive");
  if (batch_size == 0) throw ConfigError("transe batch_size must be positive");
}

std::vector<EntityId> kb_entities(const KnowledgeBase& kb) {
  std::vector<EntityId> out;
  for (const auto& t : kb.triples()) {
    out.push_back(t.subject);
    out.push_back(t.object);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::optional<Triple> corrupt_triple(const KnowledgeBase& kb, std::span<const EntityId> pool, const Triple& triple,
                                     Rng& rng) {
  constexpr int kMaxTries = 64;
  if (pool.empty()) return std::nullopt;
  const bool head = rng.bernoulli(0.5);
  for (int tries = 0; tries < kMaxTries; ++tries) {
    Triple out = triple;
    (head ? out.subject : out.object) = pool[rng.below(pool.size())];
    const auto objs = kb.objects(out.subject, out.relation);
    if (!std::binary_search(objs.begin(), objs.end(), out.object)) return out;
  }
  return std::nullopt;
}

double triple_score(const EmbeddingSet& set, EntityId h, RelationId r, EntityId t, Norm norm) {
  if (h.value >= set.entities.rows() || t.value >= set.entities.rows() || r.value >= set.relations.rows())
    throw DataError("triple_score: id outside the embedding tables");
  std::vector<double> d;
  difference(set, h.value, r.value, t.value, d);
  return norm_of(d, norm);
}

TransEResult train_transe(const KnowledgeBase& kb, const TransEConfig& config,
                          const std::function<void(const EmbeddingSet&)>& after_step) {
  config.validate();
  if (kb.triple_count() == 0) throw DataError("cannot pretrain on an empty knowledge base");
  const auto& sym = kb.symbols();
  const std::size_t dim = config.dim;
  Rng rng(config.seed);
  Rng init_rng = rng.fork(1);
  Rng order_rng = rng.fork(2);
  Rng corrupt_rng = rng.fork(3);

  TransEResult result;
  EmbeddingSet& set = result.embeddings;
  set.entity_names = sym.entities.texts();
  set.relation_names = sym.relations.texts();
  set.entities = Tensor({set.entity_names.size(), dim});
  set.relations = Tensor({set.relation_names.size(), dim});
  const double bound = 6.0 / std::sqrt(static_cast<double>(dim));
  for (double& v : set.relations.values()) v = init_rng.uniform(-bound, bound);
  for (std::size_t r = 0; r < set.relations.rows(); ++r) normalize_row(set.relations, r);
  for (double& v : set.entities.values()) v = init_rng.uniform(-bound, bound);
  for (std::size_t e = 0; e < set.entities.rows(); ++e) normalize_row(set.entities, e);

  const std::vector<EntityId> pool = kb_entities(kb);

  std::vector<std::size_t> order(kb.triple_count());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<double> dp, dn;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(order, order_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      Update update;
      for (std::size_t i = start; i < stop; ++i) {
        const Triple& pos = kb.triples()[order[i]];
        const auto neg = corrupt_triple(kb, pool, pos, corrupt_rng);
        if (!neg) continue;
        const std::uint32_t h = neg->subject.value, t = neg->object.value;
        const std::uint32_t r = pos.relation.value;
        difference(set, pos.subject.value, r, pos.object.value, dp);
        difference(set, h, r, t, dn);
        const double sp = norm_of(dp, config.norm);
        const double sn = norm_of(dn, config.norm);
        const double loss = config.margin + sp - sn;
        if (loss <= 0) continue;
        epoch_loss += loss;
        norm_gradient(dp, sp, config.norm);
        norm_gradient(dn, sn, config.norm);
        add_update(update.entities, pos.subject.value, dp, 1.0);
        add_update(update.entities, pos.object.value, dp, -1.0);
        add_update(update.relations, r, dp, 1.0);
        add_update(update.entities, h, dn, -1.0);
        add_update(update.entities, t, dn, 1.0);
        add_update(update.relations, r, dn, -1.0);
      }
      // Updates are computed from the pre-step values, then applied together.
      for (const auto& [row, g] : update.relations) {
        double* x = row_ptr(set.relations, row);
        for (std::size_t k = 0; k < dim; ++k) x[k] -= config.lr * g[k];
      }
      std::vector<std::uint32_t> touched;
      for (const auto& [row, g] : update.entities) {
        double* x = row_ptr(set.entities, row);
        for (std::size_t k = 0; k < dim; ++k) x[k] -= config.lr * g[k];
        touched.push_back(row);
      }
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
      for (std::uint32_t e : touched) normalize_row(set.entities, e);
      if (!set.entities.all_finite() || !set.relations.all_finite())
        throw NumericError("non-finite TransE embeddings at epoch " + std::to_string(epoch + 1));
      if (after_step) after_step(set);
    }
    result.epoch_loss.push_back(epoch_loss);
  }
  return result;
}

std::size_t tail_rank(const KnowledgeBase& kb, const EmbeddingSet& set, const Triple& triple, Norm norm) {
  const double target = triple_score(set, triple.subject, triple.relation, triple.object, norm);
  std::size_t rank = 1;
  for (EntityId e : kb_entities(kb))
    if (triple_score(set, triple.subject, triple.relation, e, norm) < target) ++rank;
  return rank;
}

double mean_tail_rank(const KnowledgeBase& kb, const EmbeddingSet& set, Norm norm) {
  if (kb.triple_count() == 0) return 0.0;
  double total = 0.0;
  for (const auto& t : kb.triples()) total += static_cast<double>(tail_rank(kb, set, t, norm));
  return total / static_cast<double>(kb.triple_count());
}

Tensor export_relation_embeddings(const EmbeddingSet& set, const RelationInterner& vocab, Rng& rng) {
  const std::size_t dim = set.dim();
  Tensor out({vocab.size(), dim});
  std::unordered_map<std::string, std::size_t> rows;
  for (std::size_t i = 0; i < set.relation_names.size(); ++i) rows.emplace(set.relation_names[i], i);
  for (std::uint32_t i = 0; i < vocab.size(); ++i) {
    double* dst = out.data() + std::size_t{i} * dim;
    auto it = rows.find(vocab.text(RelationId{i}));
    if (it == rows.end()) {
      for (std::size_t k = 0; k < dim; ++k) dst[k] = rng.uniform(-kEmbeddingInitRange, kEmbeddingInitRange);
      continue;
    }
    std::copy_n(row_ptr(set.relations, it->second), dim, dst);
  }
  return out;
}

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_checkpoint({{"transe.entity", set.entities}, {"transe.relation", set.relations}}, dir / "transe.ckpt");
  std::ofstream out(dir / "transe.names", std::ios::binary);
  if (!out) throw Error("cannot write " + (dir / "transe.names").string());
  for (const auto& n : set.entity_names) out << "e\t" << n << '\n';
  for (const auto& n : set.relation_names) out << "r\t" << n << '\n';
}

EmbeddingSet load_embeddings(const std::filesystem::path& dir) {
  EmbeddingSet set;
  for (auto& [name, tensor] : load_checkpoint(dir / "transe.ckpt")) {
    if (name == "transe.entity") set.entities = std::move(tensor);
    else if (name == "transe.relation") set.relations = std::move(tensor);
  }
  std::ifstream in(dir / "transe.names");
  if (!in) throw Error("cannot read " + (dir / "transe.names").string());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.size() < 2 || line[1] != '\t' || (line[0] != 'e' && line[0] != 'r'))
      throw ParseError(n, "expected 'e' or 'r', a tab and a name");
    (line[0] == 'e' ? set.entity_names : set.relation_names).push_back(line.substr(2));
  }
  if (set.entities.rows() != set.entity_names.size() || set.relations.rows() != set.relation_names.size() ||
      set.entities.cols() != set.relations.cols())
    throw Error("TransE tensors do not match " + (dir / "transe.names").string());
  return set;
}

}  // namespace ksaqa
