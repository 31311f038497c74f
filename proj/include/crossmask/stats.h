// Corpus length statistics and strategy-level masking reports: how often a
// strategy masks nothing, and which word classes the masked words fall in.

#ifndef CROSSMASK_STATS_H_
#define CROSSMASK_STATS_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "crossmask/annotate.h"
#include "crossmask/mask.h"
#include "crossmask/tokenize.h"
#include "json.hpp"

namespace crossmask {

struct LengthHistogram {
  size_t sentences = 0;
  size_t total_words = 0;
  size_t total_pieces = 0;
  std::map<size_t, size_t> words;   // length -> sentence count
  std::map<size_t, size_t> pieces;

  void add(const TokenizedSentence& ts);
  double mean_words() const;
  double mean_pieces() const;
};

LengthHistogram length_histogram(std::span<const TokenizedSentence> corpus);

// length, word-count sentences, piece-count sentences
std::string histogram_tsv(const LengthHistogram& h);

// Classes tracked in every report, in output order.
inline constexpr const char* kReportClasses[] = {"stopword_punct", "content",      "object",
                                                 "attribute",      "relationship", "grounded_object"};

struct MaskingReport {
  std::string strategy;
  uint64_t seed = 0;
  size_t trials = 0;
  size_t sentences = 0;  // per trial
  size_t plans = 0;      // sentences * trials
  size_t empty_plans = 0;
  size_t selected_words = 0;
  size_t selected_pieces = 0;
  double empty_plan_rate = 0.0;
  double mean_selected_per_sentence = 0.0;
  // Fraction of selected words (pieces) in each class.
  std::map<std::string, double> masked_class_shares;
  std::map<std::string, double> masked_piece_shares;
  // Fraction of all corpus words (pieces) in each class.
  std::map<std::string, double> corpus_class_rates;
  std::map<std::string, double> corpus_piece_rates;
};

// Trial 0 uses cfg.seed itself, so a one-trial report describes exactly the
// plans the `mask` command writes; later trials use seeds derived from it.
// Integer tallies make the result independent of `parallelism`. Throws
// ConfigError when trials is 0 and DataError when the inputs are misaligned.
MaskingReport masking_report(std::span<const TokenizedSentence> corpus,
                             std::span<const SentenceAnnotation> annotations,
                             const StrategyConfig& cfg, size_t trials, size_t parallelism = 1);

uint64_t trial_seed(uint64_t global_seed, size_t trial);

nlohmann::json to_json(const MaskingReport& report, bool include_pieces = false);

}  // namespace crossmask

#endif  // CROSSMASK_STATS_H_
