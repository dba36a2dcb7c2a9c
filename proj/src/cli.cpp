#include "ksaqa/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "ksaqa/checkpoint.hpp"
#include "ksaqa/config.hpp"
#include "ksaqa/error.hpp"
#include "ksaqa/evaluator.hpp"
#include "ksaqa/relabel_io.hpp"

namespace ksaqa {

namespace fs = std::filesystem;

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class MissingCheckpoint : public Error {
 public:
  using Error::Error;
};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  return in;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  body(out);
  if (!out) throw InputError("write failed for " + path.string());
}

void require(const fs::path& path, std::string_view key) {
  if (path.empty()) throw ConfigError(std::string(key) + " is not set");
}

void require_checkpoint(const fs::path& file, std::string_view producer) {
  if (!fs::exists(file))
    throw MissingCheckpoint("missing checkpoint " + file.string() + " (run `ksaqa " + std::string(producer) + "`)");
}

void check_scale(const PipelineConfig& c) {
  std::uintmax_t total = 0;
  for (const fs::path* p : {&c.kb, &c.aliases, &c.train, &c.valid, &c.test})
    if (!p->empty()) total += fs::file_size(*p);
  if (total > kDeskScaleBytes && !c.full)
    throw UsageError("inputs total " + std::to_string(total) + " bytes, above the desk-scale limit of " +
                     std::to_string(kDeskScaleBytes) + "; pass --full to run at this scale");
}

// KB, aliases, then dataset splits, always interned in that order.
struct Workspace {
  std::shared_ptr<Symbols> symbols = std::make_shared<Symbols>();
  KnowledgeBase kb;
  AliasTable aliases{symbols};
  std::vector<LabeledExample> examples;
  PatternIndex index;
  std::map<Split, std::size_t> record_counts;

  std::vector<LabeledExample> split(Split s) const {
    std::vector<LabeledExample> out;
    for (const auto& ex : examples)
      if (ex.record.split == s) out.push_back(ex);
    return out;
  }
};

const fs::path& split_path(const PipelineConfig& c, Split s) {
  return s == Split::train ? c.train : (s == Split::valid ? c.valid : c.test);
}

std::unique_ptr<Workspace> load_kb(const PipelineConfig& c) {
  require(c.kb, "kb");
  auto w = std::make_unique<Workspace>();
  auto in = open_input(c.kb);
  w->kb = KnowledgeBase::ingest(in, w->symbols);
  if (!c.aliases.empty()) {
    auto alias_in = open_input(c.aliases);
    w->aliases = AliasTable::ingest(alias_in, w->symbols);
  }
  return w;
}

// Loads every configured split and relabels it; `need` must be present.
std::unique_ptr<Workspace> load_all(const PipelineConfig& c, std::initializer_list<Split> need) {
  require(c.aliases, "aliases");
  for (Split s : need) require(split_path(c, s), to_string(s));
  auto w = load_kb(c);
  std::vector<QuestionRecord> records;
  for (Split s : {Split::train, Split::valid, Split::test}) {
    const fs::path& p = split_path(c, s);
    if (p.empty()) continue;
    auto in = open_input(p);
    auto part = parse_simplequestions(in, s, *w->symbols);
    w->record_counts[s] = part.size();
    records.insert(records.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  w->examples = format_records(std::move(records), w->aliases);
  w->index = build_pattern_index(w->examples, c.pattern_splits);
  relabel(w->examples, w->kb, w->aliases, w->index);
  return w;
}

std::string entity_label(const Workspace& w, EntityId e) {
  const auto names = w.aliases.aliases(e);
  const std::string& id = w.symbols->entities.text(e);
  std::string label = names.empty() ? id : names.front() + " (" + id + ")";
  if (auto type = w.symbols->relations.find(kNotableTypeRelation)) {
    const auto objects = w.kb.objects(e, *type);
    if (!objects.empty()) {
      const auto type_names = w.aliases.aliases(objects.front());
      label += " [" + (type_names.empty() ? w.symbols->entities.text(objects.front()) : type_names.front()) + "]";
    }
  }
  return label;
}

std::unique_ptr<KsaModel> load_model(const PipelineConfig& c, Workspace& w) {
  const fs::path dir = c.checkpoint_dir / "ksa";
  require_checkpoint(dir / "ksa.ckpt", "train");
  auto model = std::make_unique<KsaModel>(KsaModel::load(dir));
  // Relations that only occurred in the training questions.
  for (const auto& name : model->relation_names()) w.symbols->relations.intern(name);
  model->check_relations(*w.symbols);
  return model;
}

std::unique_ptr<EntityTagger> load_tagger(const PipelineConfig& c) {
  const fs::path dir = c.checkpoint_dir / "tagger";
  require_checkpoint(dir / "tagger.ckpt", "train-tagger");
  return std::make_unique<EntityTagger>(EntityTagger::load(dir));
}

void print_kb_counts(std::ostream& out, const Workspace& w) {
  out << "entities   " << w.kb.entity_count() << '\n';
  out << "relations  " << w.kb.relation_count() << '\n';
  out << "triples    " << w.kb.triple_count() << '\n';
  if (w.aliases.alias_count() > 0) out << "aliases    " << w.aliases.alias_count() << '\n';
}

// ---- subcommands -----------------------------------------------------------

void cmd_ingest_kb(const PipelineConfig& c, std::ostream& out) {
  auto w = load_kb(c);
  print_kb_counts(out, *w);
  nlohmann::ordered_json j;
  j["entities"] = w->kb.entity_count();
  j["relations"] = w->kb.relation_count();
  j["triples"] = w->kb.triple_count();
  j["aliases"] = w->aliases.alias_count();
  write_file(c.output_dir / "kb_stats.json", [&](std::ostream& f) { f << j.dump(2) << '\n'; });
}

nlohmann::ordered_json dataset_summary(const Workspace& w) {
  nlohmann::ordered_json j;
  for (const auto& [split, count] : w.record_counts) {
    const auto part = w.split(split);
    std::size_t formatted = 0;
    for (const auto& ex : part) formatted += ex.formatted_ok();
    nlohmann::ordered_json s;
    s["records"] = count;
    s["formatted"] = formatted;
    s["ambiguity_rate"] = ambiguity_rate(part);
    j[std::string(to_string(split))] = s;
  }
  j["ambiguity_rate"] = ambiguity_rate(w.examples);
  return j;
}

void print_dataset_summary(std::ostream& out, const nlohmann::ordered_json& j) {
  for (const auto& [key, s] : j.items()) {
    if (!s.is_object()) continue;
    out << key << std::string(11 - std::min<std::size_t>(10, key.size()), ' ') << s["records"].get<std::size_t>()
        << " questions, " << s["formatted"].get<std::size_t>() << " formatted, "
        << fixed(100 * s["ambiguity_rate"].get<double>(), 1) << "% ambiguous\n";
  }
  out << "ambiguous  " << fixed(100 * j["ambiguity_rate"].get<double>(), 1) << "% of formatted questions\n";
}

void cmd_relabel(const PipelineConfig& c, std::ostream& out) {
  auto w = load_all(c, {Split::train});
  write_file(c.output_dir / "relabeled.jsonl", [&](std::ostream& f) { write_relabeled(f, w->examples, *w->symbols); });
  write_file(c.output_dir / "formatted.tsv", [&](std::ostream& f) {
    for (const auto& ex : w->examples)
      if (ex.formatted) write_formatted_tsv(f, ex.record, *ex.formatted, *w->symbols);
  });
  write_file(c.output_dir / "alias_report.tsv", [&](std::ostream& f) {
    write_alias_report(f, alias_report(w->examples, w->kb, w->aliases));
  });
  write_file(c.output_dir / "pattern_report.tsv",
             [&](std::ostream& f) { write_pattern_report(f, pattern_report(w->index, *w->symbols)); });
  const auto summary = dataset_summary(*w);
  write_file(c.output_dir / "relabel_summary.json", [&](std::ostream& f) { f << summary.dump(2) << '\n'; });
  print_dataset_summary(out, summary);
}

void cmd_stats(const PipelineConfig& c, std::ostream& out) {
  const bool datasets = !c.train.empty() || !c.valid.empty() || !c.test.empty();
  if (!datasets) {
    print_kb_counts(out, *load_kb(c));
    return;
  }
  auto w = load_all(c, {});
  print_kb_counts(out, *w);
  print_dataset_summary(out, dataset_summary(*w));
}

void cmd_pretrain_transe(const PipelineConfig& c, std::ostream& out) {
  auto w = load_kb(c);
  const auto result = train_transe(w->kb, c.transe);
  save_embeddings(result.embeddings, c.checkpoint_dir / "transe");
  write_file(c.output_dir / "transe_loss.tsv", [&](std::ostream& f) {
    f << "epoch\tloss\n";
    for (std::size_t i = 0; i < result.epoch_loss.size(); ++i) f << i + 1 << '\t' << fixed(result.epoch_loss[i], 6) << '\n';
  });
  out << "trained " << result.embeddings.entity_names.size() << " entity and " << result.embeddings.relation_names.size()
      << " relation vectors over " << result.epoch_loss.size() << " epochs\n";
  if (!result.epoch_loss.empty()) out << "final loss " << fixed(result.epoch_loss.back(), 6) << '\n';
  if (w->kb.triple_count() <= 10000)
    out << "mean tail rank " << fixed(mean_tail_rank(w->kb, result.embeddings, c.transe.norm), 3) << '\n';
}

void cmd_train_tagger(const PipelineConfig& c, std::ostream& out) {
  auto w = load_all(c, {Split::train});
  const auto train = tagging_examples(w->examples, Split::train);
  const auto valid = tagging_examples(w->examples, Split::valid);
  const auto result = train_tagger(train, valid, c.tagger);
  result.model->save(c.checkpoint_dir / "tagger");
  write_file(c.output_dir / "tagger_history.tsv", [&](std::ostream& f) {
    f << "epoch\tloss\tvalid_span_accuracy\n";
    for (std::size_t i = 0; i < result.history.size(); ++i)
      f << i + 1 << '\t' << fixed(result.history[i].loss, 6) << '\t' << fixed(result.history[i].valid_span_accuracy, 6)
        << '\n';
  });
  out << "best epoch " << result.best_epoch << " of " << result.history.size() << ", span accuracy "
      << fixed(100 * result.history[result.best_epoch - 1].valid_span_accuracy, 2) << "%\n";
}

void cmd_train(const PipelineConfig& c, std::ostream& out) {
  auto w = load_all(c, {Split::train});
  const auto train = w->split(Split::train);
  const auto valid = w->split(Split::valid);
  KsaModel model(c.model, build_question_vocabulary(train), w->symbols->relations.texts());
  if (c.transe_init) {
    const fs::path dir = c.checkpoint_dir / "transe";
    require_checkpoint(dir / "transe.ckpt", "pretrain-transe");
    const auto set = load_embeddings(dir);
    if (set.dim() != c.model.d_rel)
      throw ConfigError("TransE vectors have dimension " + std::to_string(set.dim()) + " but d_rel is " +
                        std::to_string(c.model.d_rel) + " (set transe_dim = d_rel)");
    Rng rng = Rng(c.seed).fork(20);
    model.set_relation_embeddings(export_relation_embeddings(set, w->symbols->relations, rng));
  }
  const auto result = train_model(model, train, valid, w->kb, [&](const EpochRecord& e) {
    out << "epoch " << e.epoch << "  loss " << fixed(e.loss, 4) << "  valid macro-F1 " << fixed(100 * e.valid_macro_f1, 2)
        << '\n';
  });
  model.save(c.checkpoint_dir / "ksa");
  write_file(c.output_dir / "train_history.tsv", [&](std::ostream& f) {
    f << "epoch\tloss\tvalid_macro_f1\n";
    for (const auto& e : result.history) f << e.epoch << '\t' << fixed(e.loss, 6) << '\t' << fixed(e.valid_macro_f1, 6) << '\n';
  });
  out << "best epoch " << result.best_epoch << '\n';
}

struct Scoring {
  std::unique_ptr<Workspace> w;
  std::unique_ptr<KsaModel> model;
  std::unique_ptr<EntityTagger> tagger;
  std::vector<LabeledExample> examples;

  SpanSource spans(bool gold) const { return gold ? SpanSource::gold() : SpanSource::tagger(*tagger, w->aliases); }
};

Scoring load_scoring(const PipelineConfig& c) {
  Scoring s;
  s.w = load_all(c, {c.eval_split});
  s.model = load_model(c, *s.w);
  if (!c.gold_spans) s.tagger = load_tagger(c);
  s.examples = s.w->split(c.eval_split);
  if (s.examples.empty()) throw DataError("no questions in the " + std::string(to_string(c.eval_split)) + " split");
  return s;
}

EvalOptions eval_options(const PipelineConfig& c) { return {c.model.lambda, c.skip_detection_failures}; }

void cmd_eval(const PipelineConfig& c, std::ostream& out) {
  const Scoring s = load_scoring(c);
  const auto result = evaluate(s.examples, model_scorer(*s.model, s.w->kb), s.spans(c.gold_spans), eval_options(c));
  Rng rng = Rng(c.seed).fork(30);
  const auto baseline = random_baseline(s.examples, s.w->kb, rng, eval_options(c));
  nlohmann::ordered_json j;
  j["split"] = to_string(c.eval_split);
  j["spans"] = c.gold_spans ? "gold" : "tagger";
  j["lambda"] = c.model.lambda;
  j["report"] = to_json(result.report);
  j["random_baseline"] = to_json(baseline.report);
  write_file(c.output_dir / "eval_report.json", [&](std::ostream& f) { f << j.dump(2) << '\n'; });
  write_file(c.output_dir / "eval_diff.jsonl",
             [&](std::ostream& f) { write_diff_report(f, s.examples, result.questions, *s.w->symbols); });
  write_table(out, result.report);
}

nlohmann::ordered_json pair_json(const Symbols& symbols, const InterpretationPair& p) {
  return {{"subject", symbols.entities.text(p.subject)}, {"relation", symbols.relations.text(p.relation)}};
}

void cmd_predict(const PipelineConfig& c, std::ostream& out) {
  const Scoring s = load_scoring(c);
  const auto spans = s.spans(c.gold_spans);
  const auto scorer = model_scorer(*s.model, s.w->kb);
  const Symbols& sym = *s.w->symbols;
  std::size_t written = 0;
  write_file(c.output_dir / "predictions.jsonl", [&](std::ostream& f) {
    for (const auto& ex : s.examples) {
      nlohmann::ordered_json j;
      j["question"] = ex.record.text;
      const auto located = spans.locate(ex);
      j["formatted"] = located ? nlohmann::ordered_json(located->formatted.key()) : nlohmann::ordered_json();
      j["predicted"] = nlohmann::ordered_json::array();
      j["top1"] = nullptr;
      if (located) {
        const auto scores = scorer(located->formatted.tokens, located->candidates);
        for (const auto& sc : scores) {
          if (sc.probability <= c.model.lambda) continue;
          auto p = pair_json(sym, sc.pair);
          p["probability"] = sc.probability;
          j["predicted"].push_back(p);
        }
        if (!scores.empty()) j["top1"] = pair_json(sym, scores.front().pair);
      }
      f << j.dump() << '\n';
      ++written;
    }
  });
  out << "wrote " << written << " predictions to " << (c.output_dir / "predictions.jsonl").string() << '\n';
}

// Question text -> formatted question and candidate subjects.
struct Asked {
  FormattedQuestion formatted;
  std::vector<EntityId> candidates;
};

Asked locate_question(const std::string& question, const std::optional<std::string>& mention,
                      const EntityTagger* tagger, const AliasTable& aliases) {
  const Tokens tokens = tokenize(question);
  std::optional<FormattedQuestion> formatted;
  if (mention) {
    const Tokens m = tokenize(*mention);
    if (m.empty()) throw DataError("empty mention");
    for (std::size_t i = 0; i + m.size() <= tokens.size() && !formatted; ++i)
      if (std::equal(m.begin(), m.end(), tokens.begin() + i)) formatted = format_span(tokens, i, i + m.size());
    if (!formatted) throw DataError("mention '" + *mention + "' does not occur in the question");
  } else {
    auto span = tagger->predict_span(tokens);
    if (!span.detected()) throw DataError("no entity mention detected in '" + question + "' (try --mention)");
    formatted = std::move(span.formatted);
  }
  const auto found = aliases.entities_for_alias(formatted->mention);
  if (found.empty()) throw DataError("no entity is named '" + formatted->mention_text() + "'");
  return {std::move(*formatted), {found.begin(), found.end()}};
}

struct Asking {
  std::unique_ptr<Workspace> w;
  std::unique_ptr<KsaModel> model;
  std::unique_ptr<EntityTagger> tagger;
  Asked asked;
};

Asking load_asking(const PipelineConfig& c, const std::string& question, const std::optional<std::string>& mention) {
  require(c.aliases, "aliases");
  Asking a;
  a.w = load_kb(c);
  a.model = load_model(c, *a.w);
  if (!mention) a.tagger = load_tagger(c);
  a.asked = locate_question(question, mention, a.tagger.get(), a.w->aliases);
  return a;
}

void cmd_tag(const PipelineConfig& c, const std::string& question, std::ostream& out) {
  const auto tagger = load_tagger(c);
  const auto span = tagger->predict_span(tokenize(question));
  if (!span.detected()) {
    out << "no entity detected\n";
    return;
  }
  out << span.formatted->key() << '\n' << "mention: " << span.formatted->mention_text() << '\n';
}

void cmd_attention(const PipelineConfig& c, const std::string& question, const std::optional<std::string>& mention,
                   std::ostream& out) {
  const Asking a = load_asking(c, question, mention);
  for (std::size_t k = 0; k < a.asked.candidates.size(); ++k) {
    const EntityId s = a.asked.candidates[k];
    const auto map = export_attention(*a.model, a.asked.formatted.tokens, s, a.w->kb);
    out << k + 1 << ". " << entity_label(*a.w, s) << '\n';
    write_attention_bars(out, map);
    write_file(c.output_dir / ("attention_" + std::to_string(k + 1) + ".tsv"),
               [&](std::ostream& f) { write_attention_tsv(f, map); });
  }
}

std::string choice_list(std::size_t n) {
  std::string s;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i > 1) s += i == n ? " or " : ", ";
    s += std::to_string(i);
  }
  return s;
}

void cmd_answer(const PipelineConfig& c, const std::string& question, const std::optional<std::string>& mention,
                bool interactive, std::istream& in, std::ostream& out) {
  const Asking a = load_asking(c, question, mention);
  const Workspace& w = *a.w;
  const auto scores = model_scorer(*a.model, w.kb)(a.asked.formatted.tokens, a.asked.candidates);
  std::vector<InterpretationScore> shown;
  for (const auto& s : scores)
    if (s.probability > c.model.lambda) shown.push_back(s);
  // Nothing above the threshold: fall back to the best guess.
  if (shown.empty() && !scores.empty()) shown.push_back(scores.front());
  if (shown.empty()) {
    out << "No interpretation found.\n";
    return;
  }
  out << "Question: " << a.asked.formatted.key() << "  (" << a.asked.formatted.mention_text() << ")\n";
  for (std::size_t i = 0; i < shown.size(); ++i)
    out << i + 1 << ". " << entity_label(w, shown[i].pair.subject) << " | " << w.symbols->relations.text(shown[i].pair.relation)
        << " | " << fixed(shown[i].probability, 3) << '\n';
  if (!interactive) return;

  std::size_t choice = 1;
  if (shown.size() >= 2) {
    out << "Which one do you mean, " << choice_list(shown.size()) << "? " << std::flush;
    std::string line;
    if (!std::getline(in, line)) throw UsageError("no choice given");
    const std::string_view t = trim(line);
    choice = 0;
    for (char ch : t) {
      if (ch < '0' || ch > '9') {
        choice = 0;
        break;
      }
      choice = choice * 10 + static_cast<std::size_t>(ch - '0');
      if (choice > shown.size()) break;
    }
    if (choice < 1 || choice > shown.size())
      throw UsageError("choice must be one of " + choice_list(shown.size()) + ", got '" + std::string(t) + "'");
    out << '\n';
  }
  const auto& pair = shown[choice - 1].pair;
  const auto objects = w.kb.objects(pair.subject, pair.relation);
  out << "Answer:";
  if (objects.empty()) out << " (no object in the knowledge base)";
  for (std::size_t i = 0; i < objects.size(); ++i) out << (i ? ", " : " ") << entity_label(w, objects[i]);
  out << '\n';
}

// ---- argument wiring -------------------------------------------------------

std::string flag_name(const std::string& key) {
  std::string s = "--" + key;
  std::replace(s.begin(), s.end(), '_', '-');
  return s;
}

bool is_bool_key(const std::string& key) {
  return key == "gold_spans" || key == "skip_detection_failures" || key == "transe_init" || key == "full" ||
         key == "shuffle_augment";
}

struct Invocation {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
  std::vector<std::string> sets;
  std::string question;
  std::optional<std::string> mention;
  bool non_interactive = false;
};

void add_config_options(CLI::App& sub, Invocation& inv) {
  sub.add_option("-c,--config", inv.config_path, "key = value config file");
  sub.add_option("--set", inv.sets, "Override any config key, as key=value");
  for (const auto& key : config_keys()) {
    if (is_bool_key(key)) {
      sub.add_flag_callback(flag_name(key), [&inv, key] { inv.overrides.emplace_back(key, "true"); },
                            "Sets " + key + " = true");
    } else {
      sub.add_option_function<std::string>(
          flag_name(key), [&inv, key](const std::string& v) { inv.overrides.emplace_back(key, v); },
          "Overrides " + key);
    }
  }
}

PipelineConfig build_config(const Invocation& inv) {
  PipelineConfig c;
  if (!inv.config_path.empty()) read_config_file(inv.config_path, c);
  for (const auto& [k, v] : inv.overrides) c.set(k, v);
  for (const auto& kv : inv.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    c.set(trim(std::string_view(kv).substr(0, eq)), std::string_view(kv).substr(eq + 1));
  }
  c.validate();
  c.check_inputs();
  check_scale(c);
  return c;
}

int code(ExitCode e) { return static_cast<int>(e); }

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"ksaqa: question answering over a knowledge base with subgraph attention"};
  app.require_subcommand(1, 1);
  Invocation inv;
  std::function<void(const PipelineConfig&)> action;

  auto sub = [&](const char* name, const char* help, auto run) {
    CLI::App* s = app.add_subcommand(name, help);
    add_config_options(*s, inv);
    s->callback([&action, run] { action = run; });
    return s;
  };
  sub("ingest-kb", "Load the triple and alias files and print their counts",
      [&](const PipelineConfig& c) { cmd_ingest_kb(c, out); });
  sub("relabel", "Format questions, build the pattern index and write the relabeled dataset",
      [&](const PipelineConfig& c) { cmd_relabel(c, out); });
  sub("stats", "Print knowledge base counts and dataset ambiguity", [&](const PipelineConfig& c) { cmd_stats(c, out); });
  sub("pretrain-transe", "Train TransE vectors on the knowledge base",
      [&](const PipelineConfig& c) { cmd_pretrain_transe(c, out); });
  sub("train-tagger", "Train the entity span tagger", [&](const PipelineConfig& c) { cmd_train_tagger(c, out); });
  sub("train", "Train the relation model", [&](const PipelineConfig& c) { cmd_train(c, out); });
  sub("eval", "Evaluate on the eval_split questions", [&](const PipelineConfig& c) { cmd_eval(c, out); });
  sub("predict", "Write predicted interpretations for the eval_split questions",
      [&](const PipelineConfig& c) { cmd_predict(c, out); });
  auto* tag = sub("tag", "Show the mention span found by the tagger",
                  [&](const PipelineConfig& c) { cmd_tag(c, inv.question, out); });
  auto* attention = sub("attention", "Print attention weights for each candidate subject", [&](const PipelineConfig& c) {
    cmd_attention(c, inv.question, inv.mention, out);
  });
  auto* answer = sub("answer", "Answer a question, asking which interpretation is meant", [&](const PipelineConfig& c) {
    cmd_answer(c, inv.question, inv.mention, !inv.non_interactive, in, out);
  });
  for (CLI::App* s : {tag, attention, answer}) s->add_option("question", inv.question, "Question text")->required();
  for (CLI::App* s : {attention, answer})
    s->add_option_function<std::string>("--mention", [&inv](const std::string& m) { inv.mention = m; },
                                        "Entity mention to use instead of the tagger");
  answer->add_flag("--non-interactive", inv.non_interactive, "List the interpretations and exit");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int status = app.exit(e, out, err);
    return status == 0 ? 0 : code(ExitCode::usage);
  }

  try {
    const PipelineConfig config = build_config(inv);
    write_file(config.output_dir / "config.used", [&](std::ostream& f) { write_config(f, config); });
    action(config);
    return code(ExitCode::ok);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return code(ExitCode::usage);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return code(ExitCode::config);
  } catch (const ParseError& e) {
    err << "input error: " << e.what() << '\n';
    return code(ExitCode::input);
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return code(ExitCode::input);
  } catch (const MissingCheckpoint& e) {
    err << "error: " << e.what() << '\n';
    return code(ExitCode::missing_checkpoint);
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << '\n';
    return code(ExitCode::corrupt_checkpoint);
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return code(ExitCode::numeric);
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return code(ExitCode::data);
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return code(ExitCode::internal);
  }
}

}  // namespace ksaqa
