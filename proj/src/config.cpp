#include "ksaqa/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>

#include "ksaqa/error.hpp"
#include "ksaqa/text.hpp"

namespace ksaqa {

namespace {

std::size_t parse_size(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size())
    throw ConfigError(std::string(key) + ": expected a non-negative integer, got '" + std::string(v) + "'");
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size())
    throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(v) + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(std::string(key) + ": expected true or false, got '" + std::string(v) + "'");
}

Split parse_split_value(std::string_view key, std::string_view v) {
  try {
    return parse_split(v);
  } catch (const Error&) {
    throw ConfigError(std::string(key) + ": unknown split '" + std::string(v) + "'");
  }
}

std::string show(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string show(bool v) { return v ? "true" : "false"; }

struct Field {
  std::function<void(PipelineConfig&, std::string_view)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

#define KSAQA_PATH(name)                                                            \
  {#name, {[](PipelineConfig& c, std::string_view v) { c.name = std::string(v); }, \
           [](const PipelineConfig& c) { return c.name.string(); }}}
#define KSAQA_SIZE(key, member)                                                                  \
  {key, {[](PipelineConfig& c, std::string_view v) { c.member = parse_size(key, v); }, \
         [](const PipelineConfig& c) { return std::to_string(c.member); }}}
#define KSAQA_DOUBLE(key, member)                                                                  \
  {key, {[](PipelineConfig& c, std::string_view v) { c.member = parse_double(key, v); }, \
         [](const PipelineConfig& c) { return show(c.member); }}}
#define KSAQA_BOOL(key, member)                                                                  \
  {key, {[](PipelineConfig& c, std::string_view v) { c.member = parse_bool(key, v); }, \
         [](const PipelineConfig& c) { return show(c.member); }}}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      KSAQA_PATH(kb),
      KSAQA_PATH(aliases),
      KSAQA_PATH(train),
      KSAQA_PATH(valid),
      KSAQA_PATH(test),
      KSAQA_PATH(checkpoint_dir),
      KSAQA_PATH(output_dir),
      {"seed",
       {[](PipelineConfig& c, std::string_view v) {
          c.seed = parse_size("seed", v);
          c.model.seed = c.transe.seed = c.tagger.seed = c.seed;
        },
        [](const PipelineConfig& c) { return std::to_string(c.seed); }}},
      {"variant",
       {[](PipelineConfig& c, std::string_view v) {
          try {
            c.model.variant = parse_variant(v);
          } catch (const Error&) {
            throw ConfigError("variant: expected BiGRU, KS-BiGRU or KSA-BiGRU, got '" + std::string(v) + "'");
          }
        },
        [](const PipelineConfig& c) { return std::string(to_string(c.model.variant)); }}},
      KSAQA_SIZE("d_word", model.d_word),
      KSAQA_SIZE("d_rel", model.d_rel),
      KSAQA_SIZE("d_hidden", model.d_hidden),
      KSAQA_SIZE("question_layers", model.question_layers),
      KSAQA_SIZE("attention_hidden", model.attention_hidden),
      KSAQA_DOUBLE("dropout", model.dropout),
      KSAQA_DOUBLE("lambda", model.lambda),
      KSAQA_SIZE("negatives", model.negatives),
      KSAQA_DOUBLE("lr", model.lr),
      KSAQA_SIZE("epochs", model.epochs),
      KSAQA_SIZE("batch_size", model.batch_size),
      KSAQA_BOOL("shuffle_augment", model.shuffle_subgraph),
      KSAQA_SIZE("transe_dim", transe.dim),
      KSAQA_DOUBLE("transe_margin", transe.margin),
      {"transe_norm",
       {[](PipelineConfig& c, std::string_view v) {
          if (v == "l1")
            c.transe.norm = Norm::l1;
          else if (v == "l2")
            c.transe.norm = Norm::l2;
          else
            throw ConfigError("transe_norm: expected l1 or l2, got '" + std::string(v) + "'");
        },
        [](const PipelineConfig& c) { return std::string(c.transe.norm == Norm::l1 ? "l1" : "l2"); }}},
      KSAQA_DOUBLE("transe_lr", transe.lr),
      KSAQA_SIZE("transe_epochs", transe.epochs),
      KSAQA_SIZE("transe_batch_size", transe.batch_size),
      KSAQA_SIZE("tagger_d_word", tagger.d_word),
      KSAQA_SIZE("tagger_d_hidden", tagger.d_hidden),
      KSAQA_DOUBLE("tagger_lr", tagger.lr),
      KSAQA_SIZE("tagger_epochs", tagger.epochs),
      KSAQA_SIZE("tagger_batch_size", tagger.batch_size),
      KSAQA_SIZE("tagger_patience", tagger.patience),
      KSAQA_SIZE("tagger_min_count", tagger.min_count),
      KSAQA_BOOL("gold_spans", gold_spans),
      KSAQA_BOOL("skip_detection_failures", skip_detection_failures),
      KSAQA_BOOL("transe_init", transe_init),
      KSAQA_BOOL("full", full),
      {"pattern_splits",
       {[](PipelineConfig& c, std::string_view v) {
          std::vector<Split> splits;
          for (auto part : split(v, ',')) {
            part = trim(part);
            if (!part.empty()) splits.push_back(parse_split_value("pattern_splits", part));
          }
          if (splits.empty()) throw ConfigError("pattern_splits: at least one split is required");
          c.pattern_splits = splits;
        },
        [](const PipelineConfig& c) {
          std::string out;
          for (Split s : c.pattern_splits) out += (out.empty() ? "" : ",") + std::string(to_string(s));
          return out;
        }}},
      {"eval_split",
       {[](PipelineConfig& c, std::string_view v) { c.eval_split = parse_split_value("eval_split", v); },
        [](const PipelineConfig& c) { return std::string(to_string(c.eval_split)); }}},
  };
  return table;
}

#undef KSAQA_PATH
#undef KSAQA_SIZE
#undef KSAQA_DOUBLE
#undef KSAQA_BOOL

const Field& field(std::string_view key) {
  for (const auto& [name, f] : fields())
    if (name == key) return f;
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

void PipelineConfig::set(std::string_view key, std::string_view value) { field(key).set(*this, trim(value)); }

std::string PipelineConfig::get(std::string_view key) const { return field(key).get(*this); }

void PipelineConfig::validate() const {
  try {
    model.validate();
    transe.validate();
    tagger.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

void PipelineConfig::check_inputs() const {
  for (const auto& [key, path] : {std::pair{"kb", &kb}, {"aliases", &aliases}, {"train", &train},
                                  {"valid", &valid}, {"test", &test}}) {
    if (!path->empty() && !std::filesystem::is_regular_file(*path))
      throw ConfigError(std::string(key) + ": no such file " + path->string());
  }
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [name, f] : fields()) out.push_back(name);
    return out;
  }();
  return keys;
}

void read_config(std::istream& in, PipelineConfig& config, const std::string& source) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view text = line;
    if (auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    const std::string where = source + ":" + std::to_string(number) + ": ";
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    const auto key = trim(text.substr(0, eq));
    try {
      config.set(key, text.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
}

void read_config_file(const std::filesystem::path& path, PipelineConfig& config) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  read_config(in, config, path.string());
}

void write_config(std::ostream& out, const PipelineConfig& config) {
  for (const auto& key : config_keys()) out << key << " = " << config.get(key) << '\n';
}

}  // namespace ksaqa
