#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ksaqa/ambiguity.hpp"
#include "ksaqa/crf.hpp"
#include "ksaqa/gru.hpp"
#include "ksaqa/parameters.hpp"
#include "ksaqa/qa_dataset.hpp"

namespace ksaqa {

struct TaggerConfig {
  std::size_t d_word = 300;
  std::size_t d_hidden = 300;
  double lr = 0.001;
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  // Epochs without a better validation span accuracy before stopping.
  std::size_t patience = 3;
  std::size_t min_count = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TaggedExample {
  Tokens tokens;
  TagSequence tags;
};

// 1 on [mention_begin, mention_end) of the original tokens.
TagSequence gold_tags(std::size_t length, const FormattedQuestion& formatted);
// Examples of the given split that could be formatted.
std::vector<TaggedExample> tagging_examples(std::span<const LabeledExample> examples, Split split);

// Longest run of 1s as [begin, end), leftmost on ties; nullopt when none.
std::optional<std::pair<std::size_t, std::size_t>> longest_run(const TagSequence& tags);

struct SpanPrediction {
  TagSequence tags;
  std::optional<FormattedQuestion> formatted;  // nullopt: detection failure

  bool detected() const { return formatted.has_value(); }
};

// Embeddings -> BiGRU -> emission scores -> linear-chain CRF over {0, 1}.
class EntityTagger {
 public:
  EntityTagger(TaggerConfig config, Vocabulary vocab);

  const TaggerConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  ParameterStore& params() { return *params_; }
  const ParameterStore& params() const { return *params_; }

  // [m x 2] emission scores.
  Var emissions(Tape& tape, const Tokens& tokens) const;
  // Negative conditional log likelihood of the tags.
  Var loss(Tape& tape, const Tokens& tokens, const TagSequence& tags) const;
  TagSequence decode(const Tokens& tokens) const;
  SpanPrediction predict_span(const Tokens& tokens) const;

  // `<dir>/tagger.ckpt`, `<dir>/tagger.vocab`, `<dir>/tagger.json`.
  void save(const std::filesystem::path& dir) const;
  static EntityTagger load(const std::filesystem::path& dir);

 private:
  TaggerConfig config_;
  Vocabulary vocab_;
  std::unique_ptr<ParameterStore> params_;
  const Parameter* embedding_;
  std::unique_ptr<BiGru> encoder_;
  const Parameter* emission_w_;
  const Parameter* emission_b_;
  const Parameter* transitions_;
  const Parameter* start_;
  const Parameter* stop_;
};

struct TaggerEpoch {
  double loss = 0.0;  // mean per question
  double valid_span_accuracy = 0.0;
};

struct TaggerTraining {
  std::unique_ptr<EntityTagger> model;  // parameters of the best epoch
  std::vector<TaggerEpoch> history;
  std::size_t best_epoch = 0;           // 1-based
};

// Fraction of examples whose predicted mention span equals the gold span.
double span_accuracy(const EntityTagger& model, std::span<const TaggedExample> examples);

// Adam on the CRF likelihood; the epoch with the best validation span
// accuracy (training accuracy when `valid` is empty) is kept. Throws
// DataError on an empty training set.
TaggerTraining train_tagger(std::span<const TaggedExample> train, std::span<const TaggedExample> valid,
                            const TaggerConfig& config);

}  // namespace ksaqa
