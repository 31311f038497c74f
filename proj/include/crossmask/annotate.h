// Per-word annotation: part of speech, stop-word/punctuation/content status,
// object/attribute/relationship classes, concreteness and scene-graph
// grounding. Also scores the class heuristics against grounded labels.

#ifndef CROSSMASK_ANNOTATE_H_
#define CROSSMASK_ANNOTATE_H_

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "crossmask/corpus.h"
#include "json.hpp"

namespace crossmask {

enum class PosTag { kNoun, kVerb, kAdj, kAdp, kOther };

std::string_view to_string(PosTag tag);
// NOUN/VERB/ADJ/ADP (any case) map to themselves; every other tag is OTHER.
PosTag parse_pos_tag(std::string_view tag);

// Most-frequent-tag lookup table, `word<TAB>TAG` per line.
class PosLexicon {
 public:
  PosLexicon() = default;

  void insert(std::string word, PosTag tag);
  std::optional<PosTag> find(std::string_view word) const;
  size_t size() const { return tags_.size(); }

 private:
  std::unordered_map<std::string, PosTag> tags_;
};

PosLexicon load_pos_lexicon(const std::string& path);

// Built-in rule for a single word: lexicon, then suffix rules, else NOUN.
PosTag tag_word(std::string_view word, const PosLexicon& lexicon);

// Supplied tags pass through (mapped onto the five-tag set); a supplied list
// of the wrong length throws DataError.
std::vector<PosTag> pos_tag(std::span<const std::string> words, const PosLexicon& lexicon,
                            const std::vector<std::string>* supplied = nullptr);

struct ClassFlags {
  bool object = false;
  bool attribute = false;
  bool relationship = false;

  bool operator==(const ClassFlags&) const = default;
};

struct StopFlags {
  bool stopword = false;
  bool punct = false;
  bool content = false;

  bool operator==(const StopFlags&) const = default;
};

std::vector<ClassFlags> classify_semantic(std::span<const std::string> words,
                                          std::span<const PosTag> tags,
                                          const LexiconSet& lexicons);
std::vector<StopFlags> mark_stopwords(std::span<const std::string> words,
                                      const StopwordSet& stops);

// Lowercased lemma lookup, retrying with plural and -ing/-ed stripped.
std::optional<double> concreteness_of(std::string_view word, const ConcretenessTable& table);
std::vector<std::optional<double>> score_concreteness(std::span<const std::string> words,
                                                      const ConcretenessTable& table);

// Exact, case-insensitive membership in the graph's name sets.
std::vector<ClassFlags> ground(std::span<const std::string> words, const SceneGraph& graph);

struct TokenAnnotation {
  PosTag pos = PosTag::kOther;
  StopFlags stop;
  ClassFlags classes;
  std::optional<double> concreteness;
  // Absent when the image has no scene graph.
  std::optional<ClassFlags> grounded;

  bool operator==(const TokenAnnotation&) const = default;
};

struct SentenceAnnotation {
  std::string id;
  std::string image_id;
  std::vector<std::string> words;
  std::vector<TokenAnnotation> tokens;
  bool has_scene_graph = false;

  bool operator==(const SentenceAnnotation&) const = default;
};

struct AnnotationContext {
  const PosLexicon* pos_lexicon = nullptr;
  const LexiconSet* lexicons = nullptr;
  const StopwordSet* stopwords = nullptr;
  const ConcretenessTable* concreteness = nullptr;
  const SceneGraphMap* scene_graphs = nullptr;  // may be null
};

SentenceAnnotation annotate_words(std::string id, std::string image_id,
                                  std::vector<std::string> words,
                                  const std::vector<std::string>* supplied_tags,
                                  const AnnotationContext& ctx);
// Uses the record's own words and tags when present, otherwise pre-tokenizes.
SentenceAnnotation annotate_caption(const CaptionRecord& record, const AnnotationContext& ctx);

// Column-oriented record: one array per flag, aligned with "words".
nlohmann::json to_json(const SentenceAnnotation& annotation);
SentenceAnnotation annotation_from_json(const nlohmann::json& j);
std::vector<SentenceAnnotation> load_annotations(const std::string& path,
                                                 ErrorPolicy policy = ErrorPolicy::kStrict,
                                                 LoadStats* stats = nullptr);

// Predicted class flags scored against grounded flags, over sentences that
// have a scene graph.
struct DetectionCounts {
  std::string name;
  size_t true_positives = 0;
  size_t predicted = 0;
  size_t grounded = 0;
  size_t tokens = 0;
  // TP / predicted; absent when nothing was predicted.
  std::optional<double> precision;
  // TP / grounded; absent when nothing is grounded.
  std::optional<double> recall;
  // (TP + TN) / tokens, the alternative reading of "accuracy".
  std::optional<double> token_accuracy;
};

class DetectionEvaluator {
 public:
  void add(const SentenceAnnotation& annotation);
  // Objects, attributes, relationships, in that order.
  std::array<DetectionCounts, 3> result() const;
  size_t sentences() const { return sentences_; }
  size_t sentences_without_graph() const { return without_graph_; }

 private:
  struct Tally {
    size_t tp = 0, predicted = 0, grounded = 0, tokens = 0;
  };
  std::array<Tally, 3> tallies_{};
  size_t sentences_ = 0;
  size_t without_graph_ = 0;
};

std::array<DetectionCounts, 3> evaluate_detection(std::span<const SentenceAnnotation> corpus);

}  // namespace crossmask

#endif  // CROSSMASK_ANNOTATE_H_
