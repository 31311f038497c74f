// Image-necessity metrics over model prediction logs: per-token LossGap,
// Accuracy@k, exponentiated mean losses and per-class reports.

#ifndef CROSSMASK_LOSSGAP_H_
#define CROSSMASK_LOSSGAP_H_

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "crossmask/annotate.h"
#include "crossmask/corpus.h"
#include "json.hpp"

namespace crossmask {

struct PredictionRecord {
  std::string id;
  size_t word_index = 0;
  std::string gold;
  double loss_with = 0.0;     // nats, image visible
  double loss_without = 0.0;  // nats, image blocked
  std::vector<std::string> topk_with;
  std::vector<std::string> topk_without;
};

// Throws DataError on negative losses or empty top-k lists.
void validate(const PredictionRecord& record);
PredictionRecord prediction_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PredictionRecord& record);
std::vector<PredictionRecord> load_predictions(const std::string& path,
                                               ErrorPolicy policy = ErrorPolicy::kStrict,
                                               LoadStats* stats = nullptr);

enum class Side { kWith, kWithout };

// loss_without - loss_with; negative when the image hurts.
inline double lossgap(const PredictionRecord& r) { return r.loss_without - r.loss_with; }

// Gold found among the first k entries of the chosen list (shorter lists are
// used as-is).
bool hit_at_k(const PredictionRecord& r, size_t k, Side side);
// Throws std::invalid_argument on an empty record set or k == 0.
double accuracy_at_k(std::span<const PredictionRecord> records, size_t k, Side side);

enum class LossAggregation {
  kExpOfMean,  // exp(mean loss), perplexity style; the default
  kMeanOfExp,
};

LossAggregation parse_aggregation(std::string_view name);

double exp_mean_loss(std::span<const PredictionRecord> records, Side side,
                     LossAggregation aggregation = LossAggregation::kExpOfMean);

struct ClassReport {
  std::string name;
  size_t count = 0;
  double mean_lossgap = 0.0;
  double exp_loss_with = 0.0;
  double exp_loss_without = 0.0;
  double exp_loss_gap = 0.0;  // exp_loss_without - exp_loss_with
  double acc_at_k_with = 0.0;
  double acc_at_k_without = 0.0;
  double acc_gap = 0.0;  // acc_at_k_with - acc_at_k_without
};

// Membership test for one annotated word.
using ClassPredicate = std::function<bool(const TokenAnnotation&)>;

struct WordClass {
  std::string name;
  ClassPredicate contains;
};

// Every named class: all, stopword_punct, content, object, attribute,
// relationship and grounded_/non_grounded_ variants of the last three.
const std::vector<WordClass>& builtin_classes();
// "grounded", "semantic" or "stopword"; throws std::invalid_argument otherwise.
std::vector<WordClass> classes_for_group(std::string_view group);
std::vector<WordClass> classes_by_name(std::span<const std::string> names);

// Index of annotations by sentence id for joining prediction records.
class AnnotationIndex {
 public:
  explicit AnnotationIndex(std::span<const SentenceAnnotation> annotations);
  // Throws DataError when the record cannot be joined.
  const TokenAnnotation& lookup(const PredictionRecord& record) const;

 private:
  std::map<std::string, const SentenceAnnotation*, std::less<>> by_id_;
};

// Streaming per-class accumulator. Classes may overlap; a record contributes
// to every class containing its masked word.
class ClassReportBuilder {
 public:
  ClassReportBuilder(std::vector<WordClass> classes, size_t k,
                     LossAggregation aggregation = LossAggregation::kExpOfMean);

  void add(const PredictionRecord& record, const TokenAnnotation& word);
  void merge(const ClassReportBuilder& other);
  // Non-empty classes, sorted by mean LossGap descending (name breaks ties).
  std::vector<ClassReport> result() const;

 private:
  struct Acc {
    size_t count = 0;
    double gap = 0.0;
    double with = 0.0;
    double without = 0.0;
    double exp_with = 0.0;
    double exp_without = 0.0;
    size_t hits_with = 0;
    size_t hits_without = 0;
  };
  std::vector<WordClass> classes_;
  size_t k_;
  LossAggregation aggregation_;
  std::vector<Acc> acc_;
};

std::vector<ClassReport> class_report(std::span<const PredictionRecord> records,
                                      std::span<const SentenceAnnotation> annotations,
                                      std::vector<WordClass> classes, size_t k,
                                      LossAggregation aggregation = LossAggregation::kExpOfMean);

nlohmann::json to_json(const ClassReport& report);
std::string class_reports_tsv(std::span<const ClassReport> reports);

}  // namespace crossmask

#endif  // CROSSMASK_LOSSGAP_H_
