#include "crossmask/stats.h"

#include <array>
#include <sstream>

#include "crossmask/parallel.h"

namespace crossmask {

namespace {

constexpr size_t kNumClasses = std::size(kReportClasses);

using ClassMembership = std::array<bool, kNumClasses>;

ClassMembership membership(const TokenAnnotation& t) {
  return {!t.stop.content,
          t.stop.content,
          t.classes.object,
          t.classes.attribute,
          t.classes.relationship,
          t.grounded && t.grounded->object};
}

struct Tally {
  size_t plans = 0;
  size_t empty = 0;
  size_t words = 0;
  size_t pieces = 0;
  std::array<size_t, kNumClasses> class_words{};
  std::array<size_t, kNumClasses> class_pieces{};

  void merge(const Tally& o) {
    plans += o.plans;
    empty += o.empty;
    words += o.words;
    pieces += o.pieces;
    for (size_t c = 0; c < kNumClasses; ++c) {
      class_words[c] += o.class_words[c];
      class_pieces[c] += o.class_pieces[c];
    }
  }
};

double ratio(size_t num, size_t den) {
  return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

}  // namespace

void LengthHistogram::add(const TokenizedSentence& ts) {
  ++sentences;
  total_words += ts.words.size();
  total_pieces += ts.pieces.size();
  ++words[ts.words.size()];
  ++pieces[ts.pieces.size()];
}

double LengthHistogram::mean_words() const { return ratio(total_words, sentences); }
double LengthHistogram::mean_pieces() const { return ratio(total_pieces, sentences); }

LengthHistogram length_histogram(std::span<const TokenizedSentence> corpus) {
  LengthHistogram h;
  for (const auto& ts : corpus) h.add(ts);
  return h;
}

std::string histogram_tsv(const LengthHistogram& h) {
  std::map<size_t, std::pair<size_t, size_t>> rows;
  for (const auto& [len, n] : h.words) rows[len].first = n;
  for (const auto& [len, n] : h.pieces) rows[len].second = n;
  std::ostringstream out;
  out << "length\tsentences_by_words\tsentences_by_pieces\n";
  for (const auto& [len, counts] : rows) {
    out << len << '\t' << counts.first << '\t' << counts.second << '\n';
  }
  return out.str();
}

uint64_t trial_seed(uint64_t global_seed, size_t trial) {
  if (trial == 0) return global_seed;
  return derive_seed(global_seed, "trial:" + std::to_string(trial));
}

MaskingReport masking_report(std::span<const TokenizedSentence> corpus,
                             std::span<const SentenceAnnotation> annotations,
                             const StrategyConfig& cfg, size_t trials, size_t parallelism) {
  if (trials == 0) throw ConfigError("masking report needs at least one trial");
  if (corpus.size() != annotations.size()) {
    throw DataError("corpus has " + std::to_string(corpus.size()) + " sentences but " +
                    std::to_string(annotations.size()) + " annotations");
  }
  cfg.validate();

  const size_t n = corpus.size();
  const size_t total = n * trials;
  const size_t workers = std::max<size_t>(1, std::min(parallelism, total));
  const size_t chunk = workers ? (total + workers - 1) / workers : 0;

  auto tallies = parallel_map<Tally>(workers, workers, [&](size_t w) {
    Tally t;
    StrategyConfig trial_cfg = cfg;
    size_t current_trial = static_cast<size_t>(-1);
    const size_t end = std::min(total, (w + 1) * chunk);
    for (size_t k = w * chunk; k < end; ++k) {
      const size_t trial = k / n;
      const size_t s = k % n;
      if (trial != current_trial) {
        trial_cfg.seed = trial_seed(cfg.seed, trial);
        current_trial = trial;
      }
      const auto& ts = corpus[s];
      const auto& ann = annotations[s];
      if (ann.tokens.empty() && (is_one_word(cfg.kind) || cfg.kind == StrategyKind::kAblationNoZero ||
                                 cfg.kind == StrategyKind::kAblationNoMulti)) {
        // Nothing to select from; counts as an empty plan.
        ++t.plans;
        ++t.empty;
        continue;
      }
      const MaskPlan plan = plan_selection(ts, ann, trial_cfg);
      ++t.plans;
      if (plan.selected_words.empty()) ++t.empty;
      for (size_t wi : plan.selected_words) {
        const size_t width = ts.spans[wi].width();
        ++t.words;
        t.pieces += width;
        const auto m = membership(ann.tokens[wi]);
        for (size_t c = 0; c < kNumClasses; ++c) {
          if (m[c]) {
            ++t.class_words[c];
            t.class_pieces[c] += width;
          }
        }
      }
    }
    return t;
  });

  Tally sum;
  for (const auto& t : tallies) sum.merge(t);

  Tally corpus_sum;
  for (size_t s = 0; s < n; ++s) {
    const auto& ann = annotations[s];
    for (size_t wi = 0; wi < ann.tokens.size(); ++wi) {
      const size_t width = corpus[s].spans[wi].width();
      ++corpus_sum.words;
      corpus_sum.pieces += width;
      const auto m = membership(ann.tokens[wi]);
      for (size_t c = 0; c < kNumClasses; ++c) {
        if (m[c]) {
          ++corpus_sum.class_words[c];
          corpus_sum.class_pieces[c] += width;
        }
      }
    }
  }

  MaskingReport r;
  r.strategy = std::string(to_string(cfg.kind));
  r.seed = cfg.seed;
  r.trials = trials;
  r.sentences = n;
  r.plans = sum.plans;
  r.empty_plans = sum.empty;
  r.selected_words = sum.words;
  r.selected_pieces = sum.pieces;
  r.empty_plan_rate = ratio(sum.empty, sum.plans);
  r.mean_selected_per_sentence = ratio(sum.words, sum.plans);
  for (size_t c = 0; c < kNumClasses; ++c) {
    r.masked_class_shares[kReportClasses[c]] = ratio(sum.class_words[c], sum.words);
    r.masked_piece_shares[kReportClasses[c]] = ratio(sum.class_pieces[c], sum.pieces);
    r.corpus_class_rates[kReportClasses[c]] = ratio(corpus_sum.class_words[c], corpus_sum.words);
    r.corpus_piece_rates[kReportClasses[c]] = ratio(corpus_sum.class_pieces[c], corpus_sum.pieces);
  }
  return r;
}

nlohmann::json to_json(const MaskingReport& r, bool include_pieces) {
  nlohmann::json j;
  j["strategy"] = r.strategy;
  j["seed"] = r.seed;
  j["trials"] = r.trials;
  j["sentences"] = r.sentences;
  j["plans"] = r.plans;
  j["empty_plans"] = r.empty_plans;
  j["selected_words"] = r.selected_words;
  j["empty_plan_rate"] = r.empty_plan_rate;
  j["mean_selected_per_sentence"] = r.mean_selected_per_sentence;
  j["masked_class_shares"] = r.masked_class_shares;
  j["corpus_class_rates"] = r.corpus_class_rates;
  if (include_pieces) {
    j["selected_pieces"] = r.selected_pieces;
    j["masked_piece_shares"] = r.masked_piece_shares;
    j["corpus_piece_rates"] = r.corpus_piece_rates;
  }
  return j;
}

}  // namespace crossmask
