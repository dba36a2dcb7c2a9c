#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "ksaqa/entity_tagger.hpp"
#include "ksaqa/ksa_model.hpp"
#include "ksaqa/qa_dataset.hpp"
#include "ksaqa/transe.hpp"

namespace ksaqa {

// Everything a pipeline run needs. Text form is one `key = value` per line
// with `#` comments; see config_keys() for the accepted keys.
struct PipelineConfig {
  std::filesystem::path kb;
  std::filesystem::path aliases;
  std::filesystem::path train;
  std::filesystem::path valid;
  std::filesystem::path test;
  std::filesystem::path checkpoint_dir = "checkpoints";
  std::filesystem::path output_dir = "out";

  ModelConfig model;
  TransEConfig transe;
  TaggerConfig tagger;

  std::uint64_t seed = 1;
  bool gold_spans = false;
  bool skip_detection_failures = false;
  bool transe_init = true;  // start relation embeddings from pretrain-transe
  bool full = false;        // allow inputs above the desk-scale size limit
  std::vector<Split> pattern_splits = {Split::train};
  Split eval_split = Split::test;

  // Throws ConfigError for an unknown key or a value that does not parse.
  void set(std::string_view key, std::string_view value);
  // Current value in the text form accepted by set().
  std::string get(std::string_view key) const;

  void validate() const;
  // Each non-empty input path must name an existing file.
  void check_inputs() const;
};

// Accepted keys in canonical order.
const std::vector<std::string>& config_keys();

// Applies the lines of `in` on top of `config`. `source` prefixes errors.
void read_config(std::istream& in, PipelineConfig& config, const std::string& source = "config");
void read_config_file(const std::filesystem::path& path, PipelineConfig& config);
// Every key with its current value; reading it back yields the same config.
void write_config(std::ostream& out, const PipelineConfig& config);

}  // namespace ksaqa
