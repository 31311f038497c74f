#include "crossmask/cli.h"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "crossmask/annotate.h"
#include "crossmask/corpus.h"
#include "crossmask/lossgap.h"
#include "crossmask/mask.h"
#include "crossmask/parallel.h"
#include "crossmask/promptprobe.h"
#include "crossmask/stats.h"
#include "crossmask/text.h"
#include "crossmask/tokenize.h"
#include "json.hpp"

#ifndef CROSSMASK_DATA_DIR
#define CROSSMASK_DATA_DIR "data"
#endif

namespace crossmask {

namespace {

using nlohmann::json;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Records handed to the worker pool per batch, per worker.
constexpr size_t kBatchPerWorker = 1024;

std::string data_path(const char* name) { return std::string(CROSSMASK_DATA_DIR) + "/" + name; }

// Options shared by every subcommand plus the per-command settings. Values
// are resolved flag > environment (paths only) > --config > default.
struct RunConfig {
  std::string config_path;
  size_t parallelism = 1;
  bool lenient = false;
  std::string output = "-";

  // resources and inputs
  std::string input;
  std::string captions;
  std::string annotations;
  std::string scene_graphs;
  std::string predictions;
  std::string probes;
  std::string vocab;
  std::string objects;
  std::string attributes;
  std::string relationships;
  std::string concreteness;
  std::string stopwords = data_path("stopwords.txt");
  std::string punctuation = data_path("punctuation.txt");
  std::string pos_lexicon = data_path("pos_lexicon.tsv");
  size_t max_chars = VocabTable::kDefaultMaxChars;

  // mask / stats
  std::string strategy = "uniform";
  double p = 0.15;
  std::string policy = "0.8:0.1:0.1";
  uint64_t seed = 0;
  std::string restricted_class;
  size_t trials = 1;
  std::string histogram;
  bool piece_shares = false;

  // lossgap / probe
  size_t k = 5;
  std::string classes;
  std::string group_by;
  std::string aggregate = "exp_of_mean";
  std::string tsv;
  std::string json_out;
  size_t k_max = 10;
  bool plural_fold = false;
  bool micro = false;

  ErrorPolicy error_policy() const { return lenient ? ErrorPolicy::kSkip : ErrorPolicy::kStrict; }

  StrategyConfig strategy_config() const {
    StrategyConfig cfg;
    cfg.kind = parse_strategy(strategy);
    cfg.mask_probability = p;
    cfg.policy = ReplacementPolicy::parse(policy);
    cfg.seed = seed;
    if (!restricted_class.empty()) cfg.restricted_class = parse_restricted_class(restricted_class);
    cfg.validate();
    return cfg;
  }
};

// Tracks every bound option so unset ones can fall back to env/config.
class Binder {
 public:
  template <typename T>
  CLI::Option* add(CLI::App* app, const std::string& flags, T& target, const std::string& key,
                   const std::string& help, bool is_path = false) {
    CLI::Option* opt = app->add_option(flags, target, help);
    bindings_.push_back({app, opt, key, is_path, [&target](const json& v) { target = v.get<T>(); },
                         [&target](const std::string& s) {
                           if constexpr (std::is_same_v<T, std::string>) target = s;
                         }});
    return opt;
  }

  CLI::Option* flag(CLI::App* app, const std::string& flags, bool& target, const std::string& key,
                    const std::string& help) {
    CLI::Option* opt = app->add_flag(flags, target, help);
    bindings_.push_back({app, opt, key, false, [&target](const json& v) { target = v.get<bool>(); },
                         [](const std::string&) {}});
    return opt;
  }

  void resolve(const CLI::App* active, const json& config) {
    for (const auto& b : bindings_) {
      if (b.app != active && b.app->get_parent() != nullptr) continue;
      if (b.opt->count() > 0) continue;
      if (b.is_path) {
        const std::string env = "CROSSMASK_" + upper(b.key);
        if (const char* v = std::getenv(env.c_str()); v && *v) {
          b.from_env(v);
          continue;
        }
      }
      auto it = config.find(b.key);
      if (it != config.end() && !it->is_null()) {
        try {
          b.from_json(*it);
        } catch (const json::exception&) {
          throw ConfigError("config key \"" + b.key + "\" has the wrong type");
        }
      }
    }
  }

 private:
  static std::string upper(std::string s) {
    for (char& c : s) {
      if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    }
    return s;
  }

  struct Binding {
    const CLI::App* app;
    CLI::Option* opt;
    std::string key;
    bool is_path;
    std::function<void(const json&)> from_json;
    std::function<void(const std::string&)> from_env;
  };
  std::vector<Binding> bindings_;
};

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      stream_ = &fallback;
      return;
    }
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw DataError("cannot open output file", path);
    stream_ = file_.get();
  }
  std::ostream& operator*() { return *stream_; }
  void finish() {
    stream_->flush();
    if (!*stream_) throw DataError("write failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

void require(const std::string& value, const char* name) {
  if (value.empty()) throw UsageError(std::string("missing required input --") + name);
}

void write_summary(std::ostream& err, const char* command, const LoadStats& stats) {
  err << json{{"summary", {{"command", command}, {"records", stats.records}, {"skipped", stats.skipped}}}}.dump()
      << '\n';
}

std::vector<std::string> caption_words(const CaptionRecord& c) {
  return c.words ? *c.words : pre_tokenize(c.text);
}

// Reads captions in batches and emits one output line per record, in input
// order, computing lines on the worker pool.
LoadStats stream_captions(const RunConfig& cfg, std::ostream& out,
                          const std::function<std::string(const CaptionRecord&)>& line_for) {
  LineReader reader(cfg.input);
  const size_t batch_size = kBatchPerWorker * cfg.parallelism;
  std::vector<CaptionRecord> batch;
  auto flush = [&] {
    auto lines = parallel_map<std::string>(batch.size(), cfg.parallelism,
                                           [&](size_t i) { return line_for(batch[i]); });
    for (const auto& l : lines) out << l << '\n';
    batch.clear();
  };
  LoadStats stats = for_each_caption(reader, cfg.error_policy(), [&](CaptionRecord&& r) {
    batch.push_back(std::move(r));
    if (batch.size() >= batch_size) flush();
  });
  flush();
  return stats;
}

int cmd_tokenize(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require(cfg.input, "input");
  require(cfg.vocab, "vocab");
  const VocabTable vocab = load_vocab(cfg.vocab, cfg.max_chars);
  Output o(cfg.output, out);
  const LoadStats stats = stream_captions(cfg, *o, [&](const CaptionRecord& c) {
    const auto words = caption_words(c);
    const TokenizedSentence ts = tokenize_words(words, vocab);
    json spans = json::array();
    for (const auto& s : ts.spans) spans.push_back({s.begin, s.end});
    return json{{"id", c.id}, {"words", ts.words}, {"pieces", ts.pieces}, {"spans", spans}}.dump();
  });
  o.finish();
  write_summary(err, "tokenize", stats);
  return 0;
}

int cmd_annotate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require(cfg.input, "input");
  ResourcePaths paths;
  paths.objects = cfg.objects;
  paths.attributes = cfg.attributes;
  paths.relationships = cfg.relationships;
  paths.concreteness = cfg.concreteness;
  paths.stopwords = cfg.stopwords;
  paths.punctuation = cfg.punctuation;
  const Resources res = load_resources(paths);
  const PosLexicon pos = cfg.pos_lexicon.empty() ? PosLexicon{} : load_pos_lexicon(cfg.pos_lexicon);
  SceneGraphMap graphs;
  if (!cfg.scene_graphs.empty()) graphs = load_scene_graphs(cfg.scene_graphs, cfg.error_policy());

  AnnotationContext ctx;
  ctx.pos_lexicon = &pos;
  ctx.lexicons = &res.lexicons;
  ctx.stopwords = &res.stopwords;
  ctx.concreteness = &res.concreteness;
  ctx.scene_graphs = cfg.scene_graphs.empty() ? nullptr : &graphs;

  Output o(cfg.output, out);
  const LoadStats stats = stream_captions(
      cfg, *o, [&](const CaptionRecord& c) { return to_json(annotate_caption(c, ctx)).dump(); });
  o.finish();
  write_summary(err, "annotate", stats);
  return 0;
}

// Annotations are a subsequence of the captions file (lenient annotation may
// drop records); captions are advanced until the ids line up.
class CaptionCursor {
 public:
  CaptionCursor(const std::string& path, ErrorPolicy policy) : reader_(path), policy_(policy) {}

  CaptionRecord advance_to(const std::string& id) {
    std::string line;
    while (reader_.next(line)) {
      CaptionRecord c;
      try {
        c = caption_from_json(json::parse(line));
      } catch (const std::exception& e) {
        if (policy_ == ErrorPolicy::kSkip) continue;
        throw DataError(e.what(), reader_.name(), reader_.line_number());
      }
      if (c.id == id) return c;
    }
    throw DataError("annotation \"" + id + "\" has no caption (or annotations are out of order)",
                    reader_.name());
  }

 private:
  LineReader reader_;
  ErrorPolicy policy_;
};

struct Sentence {
  TokenizedSentence ts;
  SentenceAnnotation annotation;
};

// Joins the annotations file with the captions file in order.
template <typename Sink>
LoadStats for_each_sentence(const RunConfig& cfg, const VocabTable& vocab, Sink&& sink) {
  CaptionCursor captions(cfg.captions, cfg.error_policy());
  LineReader reader(cfg.annotations);
  LoadStats stats;
  std::string line;
  while (reader.next(line)) {
    Sentence s;
    try {
      s.annotation = annotation_from_json(json::parse(line));
    } catch (const std::exception& e) {
      if (cfg.lenient) {
        ++stats.skipped;
        continue;
      }
      throw DataError(e.what(), reader.name(), reader.line_number());
    }
    const CaptionRecord caption = captions.advance_to(s.annotation.id);
    if (caption_words(caption) != s.annotation.words) {
      throw DataError("annotation words do not match caption \"" + caption.id + "\"",
                      reader.name(), reader.line_number());
    }
    s.ts = tokenize_words(s.annotation.words, vocab);
    ++stats.records;
    sink(std::move(s));
  }
  return stats;
}

int cmd_mask(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require(cfg.captions, "captions");
  require(cfg.annotations, "annotations");
  require(cfg.vocab, "vocab");
  const StrategyConfig strategy = cfg.strategy_config();
  const VocabTable vocab = load_vocab(cfg.vocab, cfg.max_chars);
  Output o(cfg.output, out);

  const size_t batch_size = kBatchPerWorker * cfg.parallelism;
  std::vector<Sentence> batch;
  auto flush = [&] {
    auto lines = parallel_map<std::string>(batch.size(), cfg.parallelism, [&](size_t i) {
      const auto& s = batch[i];
      return plan_to_json(make_plan(s.ts, s.annotation, vocab, strategy), s.ts).dump();
    });
    for (const auto& l : lines) *o << l << '\n';
    batch.clear();
  };
  const LoadStats stats = for_each_sentence(cfg, vocab, [&](Sentence&& s) {
    batch.push_back(std::move(s));
    if (batch.size() >= batch_size) flush();
  });
  flush();
  o.finish();
  write_summary(err, "mask", stats);
  return 0;
}

int cmd_stats(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require(cfg.captions, "captions");
  require(cfg.annotations, "annotations");
  require(cfg.vocab, "vocab");
  const StrategyConfig strategy = cfg.strategy_config();
  const VocabTable vocab = load_vocab(cfg.vocab, cfg.max_chars);

  std::vector<TokenizedSentence> corpus;
  std::vector<SentenceAnnotation> annotations;
  const LoadStats stats = for_each_sentence(cfg, vocab, [&](Sentence&& s) {
    corpus.push_back(std::move(s.ts));
    annotations.push_back(std::move(s.annotation));
  });

  const LengthHistogram hist = length_histogram(corpus);
  const MaskingReport report =
      masking_report(corpus, annotations, strategy, cfg.trials, cfg.parallelism);

  json doc = to_json(report, cfg.piece_shares);
  doc["lengths"] = {{"sentences", hist.sentences},
                    {"mean_words", hist.mean_words()},
                    {"mean_pieces", hist.mean_pieces()}};
  Output o(cfg.output, out);
  *o << doc.dump(2) << '\n';
  o.finish();
  if (!cfg.histogram.empty()) {
    Output h(cfg.histogram, out);
    *h << histogram_tsv(hist);
    h.finish();
  }
  write_summary(err, "stats", stats);
  return 0;
}

int cmd_lossgap(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require(cfg.predictions, "predictions");
  require(cfg.annotations, "annotations");
  if (cfg.k == 0) throw ConfigError("--k must be at least 1");
  std::vector<WordClass> classes;
  if (!cfg.classes.empty()) {
    std::vector<std::string> names;
    for (auto& n : text::split(cfg.classes, ',')) {
      std::string name(text::trim(n));
      if (!name.empty()) names.push_back(std::move(name));
    }
    classes = classes_by_name(names);
  } else if (!cfg.group_by.empty()) {
    classes = classes_for_group(cfg.group_by);
  } else {
    classes = builtin_classes();
  }
  const LossAggregation aggregation = parse_aggregation(cfg.aggregate);

  LoadStats ann_stats;
  const auto annotations = load_annotations(cfg.annotations, cfg.error_policy(), &ann_stats);
  const AnnotationIndex index(annotations);
  ClassReportBuilder builder(classes, cfg.k, aggregation);

  LineReader reader(cfg.predictions);
  LoadStats stats;
  std::string line;
  while (reader.next(line)) {
    try {
      const PredictionRecord r = prediction_from_json(json::parse(line));
      builder.add(r, index.lookup(r));
      ++stats.records;
    } catch (const std::exception& e) {
      if (cfg.lenient) {
        ++stats.skipped;
        continue;
      }
      throw DataError(e.what(), reader.name(), reader.line_number());
    }
  }
  const auto reports = builder.result();

  json doc;
  doc["k"] = cfg.k;
  doc["aggregation"] = cfg.aggregate;
  doc["records"] = stats.records;
  doc["classes"] = json::array();
  for (const auto& r : reports) doc["classes"].push_back(to_json(r));
  Output o(cfg.output, out);
  *o << doc.dump(2) << '\n';
  o.finish();
  if (!cfg.tsv.empty()) {
    Output t(cfg.tsv, out);
    *t << class_reports_tsv(reports);
    t.finish();
  }
  write_summary(err, "lossgap", stats);
  return 0;
}

int cmd_probe(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require(cfg.probes, "probes");
  require(cfg.scene_graphs, "scene-graphs");
  LoadStats stats;
  const auto records = load_probes(cfg.probes, cfg.error_policy(), &stats);
  const auto graphs = load_scene_graphs(cfg.scene_graphs, cfg.error_policy());
  ProbeOptions options;
  options.plural_fold = cfg.plural_fold;
  options.micro_average = cfg.micro;
  const auto results = evaluate_probe_by_prompt(records, graphs, cfg.k_max, options);

  Output o(cfg.output, out);
  *o << probe_curves_tsv(results);
  o.finish();
  if (!cfg.json_out.empty()) {
    json doc = json::array();
    for (const auto& [prompt, r] : results) {
      json curve = json::array();
      for (const auto& pt : r.curve) {
        curve.push_back({{"k", pt.k}, {"precision", pt.precision}, {"recall", pt.recall}});
      }
      doc.push_back({{"prompt", prompt},
                     {"images", r.images},
                     {"images_without_objects", r.images_without_objects},
                     {"curve", curve}});
    }
    Output j(cfg.json_out, out);
    *j << doc.dump(2) << '\n';
    j.finish();
  }
  write_summary(err, "probe", stats);
  return 0;
}

std::string optional_cell(const std::optional<double>& v) {
  if (!v) return "NA";
  std::ostringstream s;
  s.precision(6);
  s << *v;
  return s.str();
}

int cmd_eval_detect(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require(cfg.annotations, "annotations");
  DetectionEvaluator eval;
  LineReader reader(cfg.annotations);
  LoadStats stats;
  std::string line;
  while (reader.next(line)) {
    try {
      eval.add(annotation_from_json(json::parse(line)));
      ++stats.records;
    } catch (const std::exception& e) {
      if (cfg.lenient) {
        ++stats.skipped;
        continue;
      }
      throw DataError(e.what(), reader.name(), reader.line_number());
    }
  }
  Output o(cfg.output, out);
  *o << "class\ttrue_positives\tpredicted\tgrounded\ttokens\tprecision\trecall\ttoken_accuracy\n";
  for (const auto& c : eval.result()) {
    *o << c.name << '\t' << c.true_positives << '\t' << c.predicted << '\t' << c.grounded << '\t'
       << c.tokens << '\t' << optional_cell(c.precision) << '\t' << optional_cell(c.recall) << '\t'
       << optional_cell(c.token_accuracy) << '\n';
  }
  o.finish();
  write_summary(err, "eval-detect", stats);
  return 0;
}

void print_error(std::ostream& err, const char* type, const std::string& message,
                 const std::string& source = {}, size_t line = 0) {
  json e = {{"type", type}, {"message", message}};
  if (!source.empty()) e["source"] = source;
  if (line) e["line"] = line;
  err << json{{"error", e}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  Binder bind;

  CLI::App app{"Masking-strategy and evaluation toolkit for cross-modal masked language modeling",
               "crossmask"};
  app.require_subcommand(1);
  app.add_option("--config", cfg.config_path, "JSON document with default settings");
  bind.add(&app, "-j,--parallelism", cfg.parallelism, "parallelism", "Worker threads")
      ->check(CLI::PositiveNumber);
  bind.flag(&app, "--lenient", cfg.lenient, "lenient", "Skip malformed records instead of aborting");
  bind.add(&app, "-o,--output", cfg.output, "output", "Output path ('-' for stdout)", true);

  auto add_strategy = [&](CLI::App* sub) {
    bind.add(sub, "--strategy", cfg.strategy, "strategy", "Masking strategy");
    bind.add(sub, "--p", cfg.p, "p", "Per-word mask probability");
    bind.add(sub, "--policy", cfg.policy, "policy", "Replacement proportions mask:random:keep");
    bind.add(sub, "--seed", cfg.seed, "seed", "Global seed");
    bind.add(sub, "--class", cfg.restricted_class, "class", "stopword_punct or content");
  };
  auto add_max_chars = [&](CLI::App* sub) {
    bind.add(sub, "--max-chars", cfg.max_chars, "max_chars", "Longest word before [UNK]");
  };

  CLI::App* tok = app.add_subcommand("tokenize", "Emit word pieces and word spans as JSONL");
  bind.add(tok, "-i,--input", cfg.input, "input", "captions.jsonl", true);
  bind.add(tok, "--vocab", cfg.vocab, "vocab", "Vocabulary file", true);
  add_max_chars(tok);

  CLI::App* ann = app.add_subcommand("annotate", "Write per-word annotations as JSONL");
  bind.add(ann, "-i,--input", cfg.input, "input", "captions.jsonl", true);
  bind.add(ann, "--scene-graphs", cfg.scene_graphs, "scene_graphs", "scene_graphs.jsonl", true);
  bind.add(ann, "--objects", cfg.objects, "objects", "Objects lexicon", true);
  bind.add(ann, "--attributes", cfg.attributes, "attributes", "Attributes lexicon", true);
  bind.add(ann, "--relationships", cfg.relationships, "relationships", "Relationships lexicon",
           true);
  bind.add(ann, "--concreteness", cfg.concreteness, "concreteness", "Concreteness TSV", true);
  bind.add(ann, "--stopwords", cfg.stopwords, "stopwords", "Stop-word list", true);
  bind.add(ann, "--punctuation", cfg.punctuation, "punctuation", "Punctuation characters", true);
  bind.add(ann, "--pos-lexicon", cfg.pos_lexicon, "pos_lexicon", "word<TAB>TAG lexicon", true);

  CLI::App* mask = app.add_subcommand("mask", "Write seeded mask plans as JSONL");
  bind.add(mask, "--captions", cfg.captions, "captions", "captions.jsonl", true);
  bind.add(mask, "--annotations", cfg.annotations, "annotations", "annotations.jsonl", true);
  bind.add(mask, "--vocab", cfg.vocab, "vocab", "Vocabulary file", true);
  add_strategy(mask);
  add_max_chars(mask);

  CLI::App* st = app.add_subcommand("stats", "Length histogram and masking report");
  bind.add(st, "--captions", cfg.captions, "captions", "captions.jsonl", true);
  bind.add(st, "--annotations", cfg.annotations, "annotations", "annotations.jsonl", true);
  bind.add(st, "--vocab", cfg.vocab, "vocab", "Vocabulary file", true);
  add_strategy(st);
  add_max_chars(st);
  bind.add(st, "--trials", cfg.trials, "trials", "Passes over the corpus")->check(CLI::PositiveNumber);
  bind.add(st, "--histogram", cfg.histogram, "histogram", "Length histogram TSV path", true);
  bind.flag(st, "--piece-shares", cfg.piece_shares, "piece_shares", "Also report piece-level shares");

  CLI::App* lg = app.add_subcommand("lossgap", "Per-class LossGap and Accuracy@k");
  bind.add(lg, "--predictions", cfg.predictions, "predictions", "predictions.jsonl", true);
  bind.add(lg, "--annotations", cfg.annotations, "annotations", "annotations.jsonl", true);
  bind.add(lg, "--k", cfg.k, "k", "Accuracy@k cutoff");
  bind.add(lg, "--classes", cfg.classes, "classes", "Comma-separated class names");
  bind.add(lg, "--group-by", cfg.group_by, "group_by", "grounded, semantic or stopword");
  bind.add(lg, "--aggregate", cfg.aggregate, "aggregate", "exp_of_mean or mean_of_exp");
  bind.add(lg, "--tsv", cfg.tsv, "tsv", "Also write the reports as TSV", true);

  CLI::App* pr = app.add_subcommand("probe", "Prompt-based object detection curves");
  bind.add(pr, "--probes", cfg.probes, "probes", "probe.jsonl", true);
  bind.add(pr, "--scene-graphs", cfg.scene_graphs, "scene_graphs", "scene_graphs.jsonl", true);
  bind.add(pr, "--k-max", cfg.k_max, "k_max", "Largest k on the curve");
  bind.flag(pr, "--plural-fold", cfg.plural_fold, "plural_fold", "Fold -s/-es plurals when matching");
  bind.flag(pr, "--micro", cfg.micro, "micro", "Micro-average instead of per-image mean");
  bind.add(pr, "--json", cfg.json_out, "json", "Also write the curves as JSON", true);

  CLI::App* det = app.add_subcommand("eval-detect", "Score class heuristics against scene graphs");
  bind.add(det, "--annotations", cfg.annotations, "annotations", "annotations.jsonl", true);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    print_error(err, "usage", e.what());
    return 2;
  }

  const CLI::App* active = app.get_subcommands().front();
  try {
    json config = json::object();
    if (!cfg.config_path.empty()) {
      std::ifstream in(cfg.config_path);
      if (!in) throw DataError("cannot open config file", cfg.config_path);
      try {
        config = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
      }
      if (!config.is_object()) throw ConfigError("config must be a JSON object");
    }
    bind.resolve(active, config);
    if (cfg.parallelism == 0) throw ConfigError("parallelism must be at least 1");

    const std::string name = active->get_name();
    if (name == "tokenize") return cmd_tokenize(cfg, out, err);
    if (name == "annotate") return cmd_annotate(cfg, out, err);
    if (name == "mask") return cmd_mask(cfg, out, err);
    if (name == "stats") return cmd_stats(cfg, out, err);
    if (name == "lossgap") return cmd_lossgap(cfg, out, err);
    if (name == "probe") return cmd_probe(cfg, out, err);
    return cmd_eval_detect(cfg, out, err);
  } catch (const UsageError& e) {
    print_error(err, "usage", e.what());
    return 2;
  } catch (const ConfigError& e) {
    print_error(err, "config", e.what());
    return 2;
  } catch (const DataError& e) {
    print_error(err, "data", e.detail(), e.source(), e.line());
    return 1;
  } catch (const std::invalid_argument& e) {
    print_error(err, "config", e.what());
    return 2;
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
    return 1;
  }
}

}  // namespace crossmask
