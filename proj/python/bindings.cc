// Python extension. Structured values cross the boundary as JSON text; the
// crossmask package turns them into dicts and lists.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "crossmask/annotate.h"
#include "crossmask/cli.h"
#include "crossmask/lossgap.h"
#include "crossmask/mask.h"
#include "crossmask/promptprobe.h"
#include "crossmask/stats.h"
#include "crossmask/tokenize.h"

namespace py = pybind11;
using json = nlohmann::json;

namespace crossmask {
namespace {

std::vector<SentenceAnnotation> annotations_from(const std::string& text) {
  std::vector<SentenceAnnotation> out;
  for (const auto& j : json::parse(text)) out.push_back(annotation_from_json(j));
  return out;
}

StrategyConfig strategy_from(const std::string& strategy, double p, uint64_t seed,
                             const std::string& policy, const std::string& restricted) {
  StrategyConfig cfg;
  cfg.kind = parse_strategy(strategy);
  cfg.mask_probability = p;
  cfg.seed = seed;
  cfg.policy = ReplacementPolicy::parse(policy);
  if (!restricted.empty()) cfg.restricted_class = parse_restricted_class(restricted);
  cfg.validate();
  return cfg;
}

// Owns every resource an AnnotationContext points at.
class Annotator {
 public:
  Annotator(const std::string& pos_lexicon, const std::string& stopwords,
            const std::string& punctuation, const std::string& objects,
            const std::string& attributes, const std::string& relationships,
            const std::string& concreteness, const std::string& scene_graphs) {
    ResourcePaths paths;
    paths.objects = objects;
    paths.attributes = attributes;
    paths.relationships = relationships;
    paths.concreteness = concreteness;
    paths.stopwords = stopwords;
    paths.punctuation = punctuation;
    res_ = load_resources(paths);
    if (!pos_lexicon.empty()) pos_ = load_pos_lexicon(pos_lexicon);
    has_graphs_ = !scene_graphs.empty();
    if (has_graphs_) graphs_ = load_scene_graphs(scene_graphs);
  }

  std::string annotate(const std::string& caption) const {
    AnnotationContext ctx{&pos_, &res_.lexicons, &res_.stopwords, &res_.concreteness,
                          has_graphs_ ? &graphs_ : nullptr};
    return to_json(annotate_caption(caption_from_json(json::parse(caption)), ctx)).dump();
  }

 private:
  Resources res_;
  PosLexicon pos_;
  SceneGraphMap graphs_;
  bool has_graphs_ = false;
};

}  // namespace
}  // namespace crossmask

PYBIND11_MODULE(_core, m) {
  using namespace crossmask;
  m.doc() = "Native core of the crossmask toolkit";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<VocabTable>(m, "Vocab")
      .def(py::init([](const std::string& path, size_t max_chars) {
             return load_vocab(path, max_chars);
           }),
           py::arg("path"), py::arg("max_chars") = VocabTable::kDefaultMaxChars)
      .def("__len__", &VocabTable::size)
      .def("__contains__", &VocabTable::contains)
      .def("wordpiece", [](const VocabTable& v, const std::string& word) { return wordpiece(word, v); })
      .def("tokenize", [](const VocabTable& v, const std::string& text) {
        const auto ts = wordpiece_tokenize(text, v);
        json spans = json::array();
        for (const auto& s : ts.spans) spans.push_back({s.begin, s.end});
        return json{{"words", ts.words}, {"pieces", ts.pieces}, {"spans", spans}}.dump();
      });

  m.def("pre_tokenize", &pre_tokenize, py::arg("text"));
  m.def("derive_seed", &derive_seed, py::arg("seed"), py::arg("sentence_id"));

  py::class_<Annotator>(m, "Annotator")
      .def(py::init<const std::string&, const std::string&, const std::string&,
                    const std::string&, const std::string&, const std::string&,
                    const std::string&, const std::string&>(),
           py::arg("pos_lexicon"), py::arg("stopwords"), py::arg("punctuation"),
           py::arg("objects"), py::arg("attributes"), py::arg("relationships"),
           py::arg("concreteness"), py::arg("scene_graphs"))
      .def("annotate", &Annotator::annotate, py::arg("caption"));

  m.def(
      "plan",
      [](const std::string& annotation, const VocabTable& vocab, const std::string& strategy,
         double p, uint64_t seed, const std::string& policy, const std::string& restricted) {
        const auto a = annotation_from_json(json::parse(annotation));
        const auto cfg = strategy_from(strategy, p, seed, policy, restricted);
        const auto ts = tokenize_words(a.words, vocab);
        return plan_to_json(make_plan(ts, a, vocab, cfg), ts).dump();
      },
      py::arg("annotation"), py::arg("vocab"), py::arg("strategy"), py::arg("p"), py::arg("seed"),
      py::arg("policy"), py::arg("restricted_class"));

  m.def(
      "masking_report",
      [](const std::string& annotations, const VocabTable& vocab, const std::string& strategy,
         double p, uint64_t seed, const std::string& policy, const std::string& restricted,
         size_t trials, size_t parallelism, bool piece_shares) {
        const auto anns = annotations_from(annotations);
        std::vector<TokenizedSentence> corpus;
        for (const auto& a : anns) corpus.push_back(tokenize_words(a.words, vocab));
        const auto cfg = strategy_from(strategy, p, seed, policy, restricted);
        py::gil_scoped_release release;
        return to_json(masking_report(corpus, anns, cfg, trials, parallelism), piece_shares).dump();
      },
      py::arg("annotations"), py::arg("vocab"), py::arg("strategy"), py::arg("p"), py::arg("seed"),
      py::arg("policy"), py::arg("restricted_class"), py::arg("trials"), py::arg("parallelism"),
      py::arg("piece_shares"));

  m.def(
      "class_report",
      [](const std::string& records, const std::string& annotations, const std::string& group,
         size_t k, const std::string& aggregation) {
        std::vector<PredictionRecord> recs;
        for (const auto& j : json::parse(records)) recs.push_back(prediction_from_json(j));
        const auto anns = annotations_from(annotations);
        auto classes = group.empty() ? builtin_classes() : classes_for_group(group);
        json out = json::array();
        for (const auto& r : class_report(recs, anns, classes, k, parse_aggregation(aggregation))) {
          out.push_back(to_json(r));
        }
        return out.dump();
      },
      py::arg("records"), py::arg("annotations"), py::arg("group"), py::arg("k"),
      py::arg("aggregation"));

  m.def(
      "evaluate_probe",
      [](const std::string& records, const std::string& graphs, size_t max_k, bool plural_fold,
         bool micro) {
        std::vector<ProbeRecord> recs;
        for (const auto& j : json::parse(records)) recs.push_back(probe_from_json(j));
        SceneGraphMap map;
        for (const auto& j : json::parse(graphs)) {
          auto g = scene_graph_from_json(j);
          map[g.image_id] = std::move(g);
        }
        json out = json::object();
        for (const auto& [prompt, result] :
             evaluate_probe_by_prompt(recs, map, max_k, {plural_fold, micro})) {
          json curve = json::array();
          for (const auto& pt : result.curve) {
            curve.push_back({{"k", pt.k}, {"precision", pt.precision}, {"recall", pt.recall}});
          }
          out[prompt] = curve;
        }
        return out.dump();
      },
      py::arg("records"), py::arg("graphs"), py::arg("max_k"), py::arg("plural_fold"),
      py::arg("micro"));

  m.def(
      "run",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
