#include "ksaqa/ksa_model.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "ksaqa/checkpoint.hpp"
#include "ksaqa/error.hpp"
#include "ksaqa/ops.hpp"

namespace ksaqa {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string vocab_text(const Vocabulary& v) {
  std::ostringstream out;
  v.write(out);
  return out.str();
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::bigru:
      return "BiGRU";
    case Variant::ks_bigru:
      return "KS-BiGRU";
    case Variant::ksa_bigru:
      return "KSA-BiGRU";
  }
  return "?";
}

Variant parse_variant(std::string_view text) {
  const std::string t = lower(text);
  if (t == "bigru") return Variant::bigru;
  if (t == "ks-bigru") return Variant::ks_bigru;
  if (t == "ksa-bigru") return Variant::ksa_bigru;
  throw ConfigError("unknown variant '" + std::string(text) + "' (expected BiGRU, KS-BiGRU or KSA-BiGRU)");
}

void ModelConfig::validate() const {
  if (d_word == 0 || d_rel == 0 || d_hidden == 0 || question_layers == 0 || attention_hidden == 0)
    throw ConfigError("model dimensions must be positive");
  if (!(lambda > 0 && lambda < 1)) throw ConfigError("lambda must lie in (0, 1)");
  if (!(dropout >= 0 && dropout < 1)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(lr > 0)) throw ConfigError("lr must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
}

QuestionTargets build_targets(const LabeledExample& example, const KnowledgeBase& kb, std::size_t negatives,
                              Rng& rng) {
  QuestionTargets out;
  if (!example.formatted) return out;
  out.formatted = example.formatted->tokens;
  for (EntityId s : example.positives.candidates) {
    const auto positives = example.positives.relations_for(s);
    if (positives.empty() || kb.subgraph_relations(s).empty()) continue;
    const auto pool = negative_pool(kb, example.positives, s);
    CandidateTargets c;
    c.subject = s;
    for (RelationId r : positives) {
      c.relations.push_back(r);
      c.labels.push_back(1.0);
      for (RelationId n : sample_negatives(pool, negatives, rng)) {
        c.relations.push_back(n);
        c.labels.push_back(0.0);
      }
    }
    out.candidates.push_back(std::move(c));
  }
  return out;
}

KsaModel::KsaModel(ModelConfig config, Vocabulary vocab, std::vector<std::string> relation_names)
    : config_(config),
      vocab_(std::move(vocab)),
      relation_names_(std::move(relation_names)),
      params_(std::make_unique<ParameterStore>()) {
  config_.validate();
  if (relation_names_.empty()) throw DataError("the model needs at least one relation");
  Rng rng(config_.seed);
  const std::size_t h = config_.d_hidden;
  const std::size_t nrel = relation_names_.size();
  ParameterStore& p = *params_;
  words_ = &p.add("ksa.word_embedding", {vocab_.size(), config_.d_word}, Init::embedding_uniform, rng);
  relations_ = &p.add("ksa.relation_embedding", {nrel + 1, config_.d_rel}, Init::embedding_uniform, rng);
  if (config_.variant != Variant::bigru) subgraph_ = std::make_unique<Gru>(p, "ksa.subgraph", config_.d_rel, h, rng);
  std::size_t width = config_.d_word;
  for (std::size_t l = 0; l < config_.question_layers; ++l) {
    question_.push_back(std::make_unique<BiGru>(p, "ksa.question.layer" + std::to_string(l + 1), width, h, rng));
    width = 2 * h;
  }
  if (config_.variant == Variant::ksa_bigru) {
    const std::size_t c = config_.attention_hidden;
    att_w_ = &p.add("ksa.attention.W", {2 * h + h, c}, Init::xavier_uniform, rng);
    att_v_ = &p.add("ksa.attention.v", {c, 1}, Init::xavier_uniform, rng);
    att_b_ = &p.add("ksa.attention.b", {c}, Init::zeros, rng);
  }
  const std::size_t enc_in = config_.variant == Variant::bigru ? 2 * h : 2 * h + h;
  enc_w_ = &p.add("ksa.encoder.W", {enc_in, h}, Init::xavier_uniform, rng);
  enc_b_ = &p.add("ksa.encoder.b", {h}, Init::zeros, rng);
  decoder_ = std::make_unique<Gru>(p, "ksa.decoder", config_.d_rel, h, rng);
  out_w_ = &p.add("ksa.output.W", {h, nrel}, Init::xavier_uniform, rng);
  out_b_ = &p.add("ksa.output.b", {nrel}, Init::zeros, rng);
  // Float-representable from the start, so checkpoints never change a model.
  round_to_float(p);
}

void KsaModel::set_relation_embeddings(const Tensor& rows) {
  Tensor& table = params_->at("ksa.relation_embedding").value;
  if (rows.rows() != relation_count() || rows.cols() != config_.d_rel)
    throw ShapeError("relation embeddings " + shape_string(rows.shape()) + " do not fit table " +
                     shape_string(table.shape()));
  std::copy_n(rows.data(), rows.size(), table.data());
  for (std::size_t i = 0; i < rows.size(); ++i) table[i] = static_cast<float>(table[i]);
}

std::vector<std::size_t> KsaModel::relation_rows(std::span<const RelationId> relations) const {
  std::vector<std::size_t> rows;
  rows.reserve(relations.size());
  for (RelationId r : relations) {
    if (r.value >= relation_count())
      throw DataError("relation id " + std::to_string(r.value) + " is outside the model's " +
                      std::to_string(relation_count()) + " relations");
    rows.push_back(r.value);
  }
  return rows;
}

Var KsaModel::encode_subgraph(Tape& tape, std::span<const RelationId> relations) const {
  if (!subgraph_) throw ConfigError("the BiGRU variant has no subgraph encoder");
  const auto rows = relation_rows(relations);
  if (rows.empty()) return subgraph_->zero_state(tape);
  Var x = ops::embedding_lookup(tape, *relations_, rows);
  Var states = subgraph_->run(tape, x, subgraph_->zero_state(tape));
  return ops::row(states, rows.size() - 1);
}

KsaModel::QuestionEncoding KsaModel::encode_question(Tape& tape, const Tokens& formatted, bool train,
                                                      Rng* rng) const {
  if (formatted.empty()) throw DataError("cannot encode an empty question");
  if (train && config_.dropout > 0 && !rng) throw Error("encode_question: training needs an Rng for dropout");
  const auto ids = vocab_.indices(formatted);
  Var x = ops::embedding_lookup(tape, *words_, ids);
  BiGru::Output out;
  for (std::size_t l = 0; l < question_.size(); ++l) {
    if (l > 0 && train && config_.dropout > 0) x = ops::dropout(x, config_.dropout, true, *rng);
    out = question_[l]->run(tape, x);
    x = out.states;
  }
  return {out.states, out.final_states};
}

KsaModel::Attention KsaModel::attend(Tape& tape, Var states, Var u_ks) const {
  using namespace ops;
  if (!att_w_) throw ConfigError(std::string(to_string(config_.variant)) + " has no attention layer");
  const std::size_t m = states.value().rows();
  if (states.value().cols() != 2 * config_.d_hidden || u_ks.value().cols() != config_.d_hidden ||
      u_ks.value().rows() != 1)
    throw ShapeError("attend: states " + shape_string(states.shape()) + " and u_KS " + shape_string(u_ks.shape()) +
                     " do not match d_hidden " + std::to_string(config_.d_hidden));
  // w_j = v^T tanh(W^T [h_j ; u_KS] + b)
  Var joined = concat({states, repeat_rows(u_ks, m)}, 1);
  Var hidden = ops::tanh(add(matmul(joined, tape.param(*att_w_)), tape.param(*att_b_)));
  Var scores = matmul(hidden, tape.param(*att_v_));
  Var alpha = softmax(scores);
  return {alpha, matmul(transpose(alpha), states)};
}

Var KsaModel::encoder_output(Tape& tape, const QuestionEncoding& q, Var u_ks) const {
  using namespace ops;
  Var in;
  switch (config_.variant) {
    case Variant::bigru:
      in = q.final;
      break;
    case Variant::ks_bigru:
      in = concat({q.final, u_ks}, 1);
      break;
    case Variant::ksa_bigru:
      in = concat({attend(tape, q.states, u_ks).summary, u_ks}, 1);
      break;
  }
  return add(matmul(in, tape.param(*enc_w_)), tape.param(*enc_b_));
}

Var KsaModel::decode_logits(Tape& tape, Var encoder_out) const {
  using namespace ops;
  const std::size_t start_row[] = {relation_count()};
  Var start = embedding_lookup(tape, *relations_, start_row);
  Var h = decoder_->cell(tape, start, encoder_out);
  return add(matmul(h, tape.param(*out_w_)), tape.param(*out_b_));
}

Var KsaModel::candidate_logits(Tape& tape, const QuestionEncoding& q, std::span<const RelationId> subgraph) const {
  Var u_ks = config_.variant == Variant::bigru ? tape.constant(Tensor({1, config_.d_hidden}))
                                               : encode_subgraph(tape, subgraph);
  return decode_logits(tape, encoder_output(tape, q, u_ks));
}

Var KsaModel::loss(Tape& tape, std::span<const QuestionTargets> batch, const KnowledgeBase& kb, bool train,
                   Rng* rng) const {
  std::vector<Var> terms;
  for (const auto& item : batch) {
    if (item.candidates.empty()) continue;
    const QuestionEncoding q = encode_question(tape, item.formatted, train, rng);
    for (const auto& c : item.candidates) {
      std::vector<RelationId> subgraph(kb.subgraph_relations(c.subject).begin(), kb.subgraph_relations(c.subject).end());
      if (train && config_.shuffle_subgraph && rng) shuffle(subgraph, *rng);
      Var logits = candidate_logits(tape, q, subgraph);
      const auto idx = relation_rows(c.relations);
      terms.push_back(ops::binary_cross_entropy(ops::gather(logits, idx), Tensor({1, c.labels.size()}, c.labels)));
    }
  }
  if (terms.empty()) return tape.constant(Tensor::scalar(0.0));
  return ops::sum(ops::concat(terms, 1));
}

std::vector<InterpretationScore> KsaModel::score_pairs(const Tokens& formatted, std::span<const EntityId> candidates,
                                                       const KnowledgeBase& kb) const {
  std::vector<EntityId> subjects(candidates.begin(), candidates.end());
  std::sort(subjects.begin(), subjects.end());
  subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
  std::vector<InterpretationScore> out;
  if (subjects.empty()) return out;
  Tape tape(Tape::Mode::inference);
  const QuestionEncoding q = encode_question(tape, formatted, false);
  Var shared;
  for (EntityId s : subjects) {
    const auto subgraph = kb.subgraph_relations(s);
    if (subgraph.empty()) continue;
    Var logits;
    if (config_.variant == Variant::bigru) {
      if (!shared.valid()) shared = candidate_logits(tape, q, subgraph);
      logits = shared;
    } else {
      logits = candidate_logits(tape, q, subgraph);
    }
    for (RelationId r : subgraph) {
      relation_rows(std::span(&r, 1));
      // Kept strictly inside (0, 1) even when the logit saturates.
      const double p = std::clamp(sigmoid(logits.value()[r.value]), DBL_MIN, std::nextafter(1.0, 0.0));
      out.push_back({{s, r}, p});
    }
  }
  std::sort(out.begin(), out.end(), [](const InterpretationScore& a, const InterpretationScore& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    return a.pair < b.pair;
  });
  return out;
}

std::vector<InterpretationPair> KsaModel::predict(const Tokens& formatted, std::span<const EntityId> candidates,
                                                  const KnowledgeBase& kb, double lambda) const {
  std::vector<InterpretationPair> out;
  for (const auto& s : score_pairs(formatted, candidates, kb))
    if (s.probability > lambda) out.push_back(s.pair);
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<InterpretationPair> KsaModel::top1(const Tokens& formatted, std::span<const EntityId> candidates,
                                                 const KnowledgeBase& kb) const {
  const auto scores = score_pairs(formatted, candidates, kb);
  if (scores.empty()) return std::nullopt;
  return scores.front().pair;
}

std::vector<double> KsaModel::attention_weights(const Tokens& formatted, EntityId s, const KnowledgeBase& kb) const {
  if (config_.variant != Variant::ksa_bigru)
    throw ConfigError("attention export needs the KSA-BiGRU variant, this model is " +
                      std::string(to_string(config_.variant)));
  Tape tape(Tape::Mode::inference);
  const QuestionEncoding q = encode_question(tape, formatted, false);
  const Attention a = attend(tape, q.states, encode_subgraph(tape, kb.subgraph_relations(s)));
  const auto v = a.weights.value().values();
  return {v.begin(), v.end()};
}

void KsaModel::check_relations(const Symbols& symbols) const {
  if (symbols.relations.size() < relation_count())
    throw ConfigError("model knows " + std::to_string(relation_count()) + " relations, the knowledge base only " +
                      std::to_string(symbols.relations.size()));
  for (std::uint32_t i = 0; i < relation_count(); ++i)
    if (symbols.relations.text(RelationId{i}) != relation_names_[i])
      throw ConfigError("relation " + std::to_string(i) + " is '" + relation_names_[i] + "' in the model but '" +
                        symbols.relations.text(RelationId{i}) + "' in the knowledge base");
}

void KsaModel::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  save_checkpoint(params_->snapshot(), dir / "ksa.ckpt");
  const std::string vocab = vocab_text(vocab_);
  std::ofstream vocab_out(dir / "ksa.vocab", std::ios::binary);
  vocab_out << vocab;
  const ModelConfig& c = config_;
  nlohmann::ordered_json j = {{"variant", to_string(c.variant)},
                              {"d_word", c.d_word},
                              {"d_rel", c.d_rel},
                              {"d_hidden", c.d_hidden},
                              {"question_layers", c.question_layers},
                              {"attention_hidden", c.attention_hidden},
                              {"dropout", c.dropout},
                              {"lambda", c.lambda},
                              {"negatives", c.negatives},
                              {"lr", c.lr},
                              {"epochs", c.epochs},
                              {"batch_size", c.batch_size},
                              {"seed", c.seed},
                              {"shuffle_subgraph", c.shuffle_subgraph},
                              {"vocab_size", vocab_.size()},
                              {"vocab_hash", hex(fnv1a(vocab))},
                              {"relations", relation_names_}};
  std::ofstream json_out(dir / "ksa.json", std::ios::binary);
  json_out << j.dump(2) << '\n';
  if (!vocab_out || !json_out) throw Error("cannot write model files under " + dir.string());
}

KsaModel KsaModel::load(const std::filesystem::path& dir) {
  std::ifstream json_in(dir / "ksa.json");
  std::ifstream vocab_in(dir / "ksa.vocab", std::ios::binary);
  if (!json_in || !vocab_in) throw CheckpointError(CheckpointError::Kind::io, 0, "missing model files in " + dir.string());
  const std::string vocab_bytes{std::istreambuf_iterator<char>(vocab_in), std::istreambuf_iterator<char>()};
  ModelConfig c;
  std::vector<std::string> relations;
  try {
    const auto j = nlohmann::json::parse(json_in);
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.d_word = j.at("d_word");
    c.d_rel = j.at("d_rel");
    c.d_hidden = j.at("d_hidden");
    c.question_layers = j.at("question_layers");
    c.attention_hidden = j.at("attention_hidden");
    c.dropout = j.at("dropout");
    c.lambda = j.at("lambda");
    c.negatives = j.at("negatives");
    c.lr = j.at("lr");
    c.epochs = j.at("epochs");
    c.batch_size = j.at("batch_size");
    c.seed = j.at("seed");
    c.shuffle_subgraph = j.at("shuffle_subgraph");
    relations = j.at("relations").get<std::vector<std::string>>();
    if (j.at("vocab_hash").get<std::string>() != hex(fnv1a(vocab_bytes)))
      throw CheckpointError(CheckpointError::Kind::io, 0, "ksa.vocab does not match the manifest hash");
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(CheckpointError::Kind::io, 0, "bad ksa.json: " + std::string(e.what()));
  }
  std::istringstream vocab_stream(vocab_bytes);
  KsaModel model(c, Vocabulary::read(vocab_stream), std::move(relations));
  model.params_->restore(load_checkpoint(dir / "ksa.ckpt"));
  return model;
}

}  // namespace ksaqa
