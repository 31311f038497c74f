// Seeded mask-plan generation for every masking strategy.
//
// A plan is a pure function of (sentence, annotation, config): the random
// stream for a sentence is seeded from the global seed and the sentence id
// alone, so output does not depend on processing order or thread count.
//
// Selection always operates on whole words. Once a word is selected, one
// replacement action is drawn for the word and applied to all of its pieces.

#ifndef CROSSMASK_MASK_H_
#define CROSSMASK_MASK_H_

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "crossmask/annotate.h"
#include "crossmask/corpus.h"
#include "crossmask/tokenize.h"
#include "json.hpp"

namespace crossmask {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class StrategyKind {
  kUniform,
  kClassRestricted,
  kOneWordRandom,
  kOneWordObject,
  kOneWordContent80,
  kOneWordTopConcrete,
  kAblationNoZero,
  kAblationNoMulti,
};

std::string_view to_string(StrategyKind kind);
// Throws ConfigError for unknown names.
StrategyKind parse_strategy(std::string_view name);
bool is_one_word(StrategyKind kind);

enum class RestrictedClass { kStopwordPunct, kContent };

std::string_view to_string(RestrictedClass c);
RestrictedClass parse_restricted_class(std::string_view name);

struct ReplacementPolicy {
  double mask = 0.8;
  double random = 0.1;
  double keep = 0.1;

  // Each proportion in [0, 1], summing to 1 within 1e-9.
  void validate() const;
  // "m:r:k", e.g. "0.8:0.1:0.1".
  static ReplacementPolicy parse(std::string_view spec);
};

struct StrategyConfig {
  StrategyKind kind = StrategyKind::kUniform;
  double mask_probability = 0.15;
  std::optional<RestrictedClass> restricted_class;
  ReplacementPolicy policy;
  uint64_t seed = 0;

  void validate() const;
};

// Probability of drawing from the content pool under one_word_content80.
inline constexpr double kContentProbability = 0.8;
// Rank weights for the three most concrete words under one_word_top_concrete.
inline constexpr double kTopConcreteWeights[3] = {0.55, 0.30, 0.15};

uint64_t derive_seed(uint64_t global_seed, std::string_view sentence_id);

// Thin wrapper over mt19937_64 with distribution code written out so draws
// are identical on every standard library.
class SeededRng {
 public:
  explicit SeededRng(uint64_t seed) : engine_(seed) {}

  uint64_t next() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on {0, ..., n - 1}; n must be positive.
  size_t below(size_t n);
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

enum class PieceAction { kMaskToken, kRandomToken, kKeepOriginal };

std::string_view to_string(PieceAction action);

struct PieceAssignment {
  size_t position = 0;
  PieceAction action = PieceAction::kMaskToken;
  std::string token;  // what the trainer sees at `position`

  bool operator==(const PieceAssignment&) const = default;
};

struct MaskPlan {
  std::string sentence_id;
  uint64_t seed = 0;
  std::vector<size_t> selected_words;  // sorted, unique
  bool fallback_used = false;
  std::vector<PieceAssignment> actions;  // empty until a policy is applied

  bool operator==(const MaskPlan&) const = default;
};

// Selection only; `actions` are left empty. The sentence seed is derived from
// cfg.seed and annotation.id. Throws ConfigError when cfg.kind does not belong
// to the called planner and DataError when a one-word kind meets an empty
// sentence.
MaskPlan plan_uniform(const TokenizedSentence& ts, const SentenceAnnotation& annotation,
                      const StrategyConfig& cfg);
MaskPlan plan_class_restricted(const TokenizedSentence& ts, const SentenceAnnotation& annotation,
                               const StrategyConfig& cfg);
MaskPlan plan_one_word(const TokenizedSentence& ts, const SentenceAnnotation& annotation,
                       const StrategyConfig& cfg);
MaskPlan plan_ablation(const TokenizedSentence& ts, const SentenceAnnotation& annotation,
                       const StrategyConfig& cfg);
// Dispatches on cfg.kind.
MaskPlan plan_selection(const TokenizedSentence& ts, const SentenceAnnotation& annotation,
                        const StrategyConfig& cfg);

// Draws one action per selected word and fills `actions` for every piece of
// it, in position order.
MaskPlan apply_replacement_policy(MaskPlan plan, const TokenizedSentence& ts,
                                  const VocabTable& vocab, const StrategyConfig& cfg);

// Selection followed by the replacement policy.
MaskPlan make_plan(const TokenizedSentence& ts, const SentenceAnnotation& annotation,
                   const VocabTable& vocab, const StrategyConfig& cfg);

struct MaskLabel {
  size_t position = 0;
  std::string gold;

  bool operator==(const MaskLabel&) const = default;
};

struct RenderedSentence {
  std::vector<std::string> pieces;
  std::vector<MaskLabel> labels;

  std::string text() const;
};

RenderedSentence render(const TokenizedSentence& ts, const MaskPlan& plan);

// One plans.jsonl record.
nlohmann::json plan_to_json(const MaskPlan& plan, const TokenizedSentence& ts);

}  // namespace crossmask

#endif  // CROSSMASK_MASK_H_
