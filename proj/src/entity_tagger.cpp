#include "ksaqa/entity_tagger.hpp"

#include <fstream>
#include <json.hpp>

#include "ksaqa/checkpoint.hpp"
#include "ksaqa/error.hpp"
#include "ksaqa/ops.hpp"

namespace ksaqa {

void TaggerConfig::validate() const {
  if (d_word == 0 || d_hidden == 0) throw ConfigError("tagger dimensions must be positive");
  if (!(lr > 0)) throw ConfigError("tagger lr must be positive");
  if (batch_size == 0) throw ConfigError("tagger batch_size must be positive");
  if (min_count == 0) throw ConfigError("tagger min_count must be positive");
}

TagSequence gold_tags(std::size_t length, const FormattedQuestion& formatted) {
  TagSequence tags(length, 0);
  for (std::size_t i = formatted.mention_begin; i < formatted.mention_end && i < length; ++i) tags[i] = 1;
  return tags;
}

std::vector<TaggedExample> tagging_examples(std::span<const LabeledExample> examples, Split split) {
  std::vector<TaggedExample> out;
  for (const auto& ex : examples) {
    if (ex.record.split != split || !ex.formatted) continue;
    out.push_back({ex.record.tokens, gold_tags(ex.record.tokens.size(), *ex.formatted)});
  }
  return out;
}

std::optional<std::pair<std::size_t, std::size_t>> longest_run(const TagSequence& tags) {
  std::optional<std::pair<std::size_t, std::size_t>> best;
  std::size_t i = 0;
  while (i < tags.size()) {
    if (tags[i] != 1) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < tags.size() && tags[j] == 1) ++j;
    if (!best || j - i > best->second - best->first) best = {{i, j}};
    i = j;
  }
  return best;
}

EntityTagger::EntityTagger(TaggerConfig config, Vocabulary vocab)
    : config_(config), vocab_(std::move(vocab)), params_(std::make_unique<ParameterStore>()) {
  config_.validate();
  Rng rng(config_.seed);
  const std::size_t h = config_.d_hidden;
  embedding_ = &params_->add("tagger.embedding", {vocab_.size(), config_.d_word}, Init::embedding_uniform, rng);
  encoder_ = std::make_unique<BiGru>(*params_, "tagger.encoder", config_.d_word, h, rng);
  emission_w_ = &params_->add("tagger.emission.W", {2 * h, 2}, Init::xavier_uniform, rng);
  emission_b_ = &params_->add("tagger.emission.b", {2}, Init::zeros, rng);
  transitions_ = &params_->add("tagger.crf.transitions", {2, 2}, Init::zeros, rng);
  start_ = &params_->add("tagger.crf.start", {1, 2}, Init::zeros, rng);
  stop_ = &params_->add("tagger.crf.stop", {1, 2}, Init::zeros, rng);
}

Var EntityTagger::emissions(Tape& tape, const Tokens& tokens) const {
  if (tokens.empty()) throw DataError("cannot tag an empty question");
  const auto ids = vocab_.indices(tokens);
  Var x = ops::embedding_lookup(tape, *embedding_, ids);
  Var states = encoder_->run(tape, x).states;
  return ops::add(ops::matmul(states, tape.param(*emission_w_)), tape.param(*emission_b_));
}

Var EntityTagger::loss(Tape& tape, const Tokens& tokens, const TagSequence& tags) const {
  return ops::crf_nll(emissions(tape, tokens), tape.param(*transitions_), tape.param(*start_), tape.param(*stop_),
                      tags);
}

TagSequence EntityTagger::decode(const Tokens& tokens) const {
  Tape tape(Tape::Mode::inference);
  Var e = emissions(tape, tokens);
  return viterbi_decode({e.value(), transitions_->value, start_->value, stop_->value});
}

SpanPrediction EntityTagger::predict_span(const Tokens& tokens) const {
  SpanPrediction out;
  out.tags = decode(tokens);
  if (auto run = longest_run(out.tags)) out.formatted = format_span(tokens, run->first, run->second);
  return out;
}

namespace {

nlohmann::ordered_json config_json(const TaggerConfig& c) {
  return {{"d_word", c.d_word}, {"d_hidden", c.d_hidden}, {"lr", c.lr},         {"epochs", c.epochs},
          {"batch_size", c.batch_size}, {"patience", c.patience}, {"min_count", c.min_count}, {"seed", c.seed}};
}

}  // namespace

void EntityTagger::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  save_checkpoint(params_->snapshot(), dir / "tagger.ckpt");
  std::ofstream vocab_out(dir / "tagger.vocab", std::ios::binary);
  vocab_.write(vocab_out);
  std::ofstream json_out(dir / "tagger.json", std::ios::binary);
  json_out << config_json(config_).dump(2) << '\n';
  if (!vocab_out || !json_out) throw Error("cannot write tagger files under " + dir.string());
}

EntityTagger EntityTagger::load(const std::filesystem::path& dir) {
  std::ifstream json_in(dir / "tagger.json");
  std::ifstream vocab_in(dir / "tagger.vocab");
  if (!json_in || !vocab_in) throw CheckpointError(CheckpointError::Kind::io, 0, "missing tagger files in " + dir.string());
  TaggerConfig c;
  try {
    const auto j = nlohmann::json::parse(json_in);
    c.d_word = j.at("d_word");
    c.d_hidden = j.at("d_hidden");
    c.lr = j.at("lr");
    c.epochs = j.at("epochs");
    c.batch_size = j.at("batch_size");
    c.patience = j.at("patience");
    c.min_count = j.at("min_count");
    c.seed = j.at("seed");
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(CheckpointError::Kind::io, 0, "bad tagger.json: " + std::string(e.what()));
  }
  EntityTagger model(c, Vocabulary::read(vocab_in));
  model.params_->restore(load_checkpoint(dir / "tagger.ckpt"));
  return model;
}

double span_accuracy(const EntityTagger& model, std::span<const TaggedExample> examples) {
  if (examples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& ex : examples) {
    const auto predicted = longest_run(model.decode(ex.tokens));
    if (predicted && predicted == longest_run(ex.tags)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

TaggerTraining train_tagger(std::span<const TaggedExample> train, std::span<const TaggedExample> valid,
                            const TaggerConfig& config) {
  config.validate();
  if (train.empty()) throw DataError("tagger training set is empty");
  std::vector<Tokens> corpus;
  for (const auto& ex : train) corpus.push_back(ex.tokens);

  TaggerTraining out;
  out.model = std::make_unique<EntityTagger>(config, Vocabulary::build(corpus, config.min_count));
  EntityTagger& model = *out.model;
  Adam adam(AdamConfig{.lr = config.lr});
  Rng order_rng = Rng(config.seed).fork(1);
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  NamedTensors best;
  double best_accuracy = -1.0;
  std::size_t stale = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(order, order_rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      Tape tape;
      std::vector<Var> losses;
      for (std::size_t i = start; i < stop; ++i) losses.push_back(model.loss(tape, train[order[i]].tokens, train[order[i]].tags));
      Var batch = ops::scale(ops::sum(ops::concat(losses, 1)), 1.0 / static_cast<double>(losses.size()));
      total += batch.value().item() * static_cast<double>(losses.size());
      tape.backward(batch);
      model.params().zero_grad();
      model.params().accumulate(tape);
      adam.step(model.params());
    }
    TaggerEpoch record;
    record.loss = total / static_cast<double>(train.size());
    record.valid_span_accuracy = span_accuracy(model, valid.empty() ? train : valid);
    out.history.push_back(record);
    if (record.valid_span_accuracy > best_accuracy) {
      best_accuracy = record.valid_span_accuracy;
      best = model.params().snapshot();
      out.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  model.params().restore(best);
  round_to_float(model.params());
  return out;
}

}  // namespace ksaqa
