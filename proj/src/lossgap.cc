#include "crossmask/lossgap.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace crossmask {

namespace {

std::vector<std::string> string_list(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) throw DataError(std::string("missing key \"") + key + "\"");
  if (!it->is_array()) throw DataError(std::string("\"") + key + "\" must be an array");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) throw DataError(std::string("\"") + key + "\" must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

double number(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) throw DataError(std::string("missing key \"") + key + "\"");
  if (!it->is_number()) throw DataError(std::string("\"") + key + "\" must be a number");
  return it->get<double>();
}

bool grounded(const TokenAnnotation& t, bool ClassFlags::*member) {
  return t.grounded && (*t.grounded).*member;
}

bool non_grounded(const TokenAnnotation& t, bool ClassFlags::*member) {
  return t.classes.*member && t.grounded && !((*t.grounded).*member);
}

}  // namespace

void validate(const PredictionRecord& r) {
  if (r.id.empty()) throw DataError("prediction id is empty");
  if (!(r.loss_with >= 0.0) || !std::isfinite(r.loss_with)) {
    throw DataError("loss_with must be a finite non-negative number");
  }
  if (!(r.loss_without >= 0.0) || !std::isfinite(r.loss_without)) {
    throw DataError("loss_without must be a finite non-negative number");
  }
  if (r.topk_with.empty() || r.topk_without.empty()) {
    throw DataError("top-k prediction lists must be non-empty");
  }
}

PredictionRecord prediction_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("record is not a JSON object");
  PredictionRecord r;
  auto id = j.find("id");
  if (id == j.end() || !id->is_string()) throw DataError("\"id\" must be a string");
  r.id = id->get<std::string>();
  auto wi = j.find("word_index");
  if (wi == j.end() || !wi->is_number_unsigned()) {
    throw DataError("\"word_index\" must be a non-negative integer");
  }
  r.word_index = wi->get<size_t>();
  auto gold = j.find("gold");
  if (gold == j.end() || !gold->is_string()) throw DataError("\"gold\" must be a string");
  r.gold = gold->get<std::string>();
  r.loss_with = number(j, "loss_with");
  r.loss_without = number(j, "loss_without");
  r.topk_with = string_list(j, "topk_with");
  r.topk_without = string_list(j, "topk_without");
  validate(r);
  return r;
}

nlohmann::json to_json(const PredictionRecord& r) {
  return {{"id", r.id},
          {"word_index", r.word_index},
          {"gold", r.gold},
          {"loss_with", r.loss_with},
          {"loss_without", r.loss_without},
          {"topk_with", r.topk_with},
          {"topk_without", r.topk_without}};
}

std::vector<PredictionRecord> load_predictions(const std::string& path, ErrorPolicy policy,
                                               LoadStats* stats) {
  LineReader reader(path);
  std::vector<PredictionRecord> out;
  LoadStats s;
  std::string line;
  while (reader.next(line)) {
    try {
      out.push_back(prediction_from_json(nlohmann::json::parse(line)));
      ++s.records;
    } catch (const std::exception& e) {
      if (policy == ErrorPolicy::kSkip) {
        ++s.skipped;
        continue;
      }
      throw DataError(e.what(), reader.name(), reader.line_number());
    }
  }
  if (stats) *stats = s;
  return out;
}

bool hit_at_k(const PredictionRecord& r, size_t k, Side side) {
  const auto& list = side == Side::kWith ? r.topk_with : r.topk_without;
  const size_t n = std::min(k, list.size());
  return std::find(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(n), r.gold) !=
         list.begin() + static_cast<std::ptrdiff_t>(n);
}

double accuracy_at_k(std::span<const PredictionRecord> records, size_t k, Side side) {
  if (records.empty()) throw std::invalid_argument("accuracy_at_k needs at least one record");
  if (k == 0) throw std::invalid_argument("k must be at least 1");
  size_t hits = 0;
  for (const auto& r : records) hits += hit_at_k(r, k, side) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

LossAggregation parse_aggregation(std::string_view name) {
  if (name == "exp_of_mean") return LossAggregation::kExpOfMean;
  if (name == "mean_of_exp") return LossAggregation::kMeanOfExp;
  throw std::invalid_argument("unknown aggregation \"" + std::string(name) +
                              "\" (expected exp_of_mean or mean_of_exp)");
}

double exp_mean_loss(std::span<const PredictionRecord> records, Side side,
                     LossAggregation aggregation) {
  if (records.empty()) throw std::invalid_argument("exp_mean_loss needs at least one record");
  double sum = 0.0;
  for (const auto& r : records) {
    const double loss = side == Side::kWith ? r.loss_with : r.loss_without;
    sum += aggregation == LossAggregation::kExpOfMean ? loss : std::exp(loss);
  }
  const double mean = sum / static_cast<double>(records.size());
  return aggregation == LossAggregation::kExpOfMean ? std::exp(mean) : mean;
}

const std::vector<WordClass>& builtin_classes() {
  static const std::vector<WordClass> kClasses = {
      {"all", [](const TokenAnnotation&) { return true; }},
      {"stopword_punct", [](const TokenAnnotation& t) { return !t.stop.content; }},
      {"content", [](const TokenAnnotation& t) { return t.stop.content; }},
      {"object", [](const TokenAnnotation& t) { return t.classes.object; }},
      {"attribute", [](const TokenAnnotation& t) { return t.classes.attribute; }},
      {"relationship", [](const TokenAnnotation& t) { return t.classes.relationship; }},
      {"grounded_object", [](const TokenAnnotation& t) { return grounded(t, &ClassFlags::object); }},
      {"non_grounded_object",
       [](const TokenAnnotation& t) { return non_grounded(t, &ClassFlags::object); }},
      {"grounded_attribute",
       [](const TokenAnnotation& t) { return grounded(t, &ClassFlags::attribute); }},
      {"non_grounded_attribute",
       [](const TokenAnnotation& t) { return non_grounded(t, &ClassFlags::attribute); }},
      {"grounded_relationship",
       [](const TokenAnnotation& t) { return grounded(t, &ClassFlags::relationship); }},
      {"non_grounded_relationship",
       [](const TokenAnnotation& t) { return non_grounded(t, &ClassFlags::relationship); }},
  };
  return kClasses;
}

std::vector<WordClass> classes_by_name(std::span<const std::string> names) {
  std::vector<WordClass> out;
  for (const auto& name : names) {
    const auto& all = builtin_classes();
    auto it = std::find_if(all.begin(), all.end(), [&](const WordClass& c) { return c.name == name; });
    if (it == all.end()) throw std::invalid_argument("unknown class \"" + name + "\"");
    out.push_back(*it);
  }
  return out;
}

std::vector<WordClass> classes_for_group(std::string_view group) {
  std::vector<std::string> names;
  if (group == "grounded") {
    names = {"grounded_object",    "non_grounded_object",   "grounded_attribute",
             "non_grounded_attribute", "grounded_relationship", "non_grounded_relationship"};
  } else if (group == "semantic") {
    names = {"object", "attribute", "relationship"};
  } else if (group == "stopword") {
    names = {"stopword_punct", "content"};
  } else {
    throw std::invalid_argument("unknown group \"" + std::string(group) +
                                "\" (expected grounded, semantic or stopword)");
  }
  return classes_by_name(names);
}

AnnotationIndex::AnnotationIndex(std::span<const SentenceAnnotation> annotations) {
  for (const auto& a : annotations) {
    if (!by_id_.emplace(a.id, &a).second) {
      throw DataError("duplicate annotation for sentence \"" + a.id + "\"");
    }
  }
}

const TokenAnnotation& AnnotationIndex::lookup(const PredictionRecord& r) const {
  auto it = by_id_.find(r.id);
  if (it == by_id_.end()) {
    throw DataError("prediction for sentence \"" + r.id + "\" has no annotation");
  }
  const auto& tokens = it->second->tokens;
  if (r.word_index >= tokens.size()) {
    throw DataError("prediction for sentence \"" + r.id + "\" word " +
                    std::to_string(r.word_index) + " is out of range (" +
                    std::to_string(tokens.size()) + " words)");
  }
  return tokens[r.word_index];
}

ClassReportBuilder::ClassReportBuilder(std::vector<WordClass> classes, size_t k,
                                       LossAggregation aggregation)
    : classes_(std::move(classes)), k_(k), aggregation_(aggregation), acc_(classes_.size()) {
  if (k_ == 0) throw std::invalid_argument("k must be at least 1");
}

void ClassReportBuilder::add(const PredictionRecord& r, const TokenAnnotation& word) {
  const bool hit_with = hit_at_k(r, k_, Side::kWith);
  const bool hit_without = hit_at_k(r, k_, Side::kWithout);
  for (size_t c = 0; c < classes_.size(); ++c) {
    if (!classes_[c].contains(word)) continue;
    auto& a = acc_[c];
    ++a.count;
    a.gap += lossgap(r);
    a.with += r.loss_with;
    a.without += r.loss_without;
    a.exp_with += std::exp(r.loss_with);
    a.exp_without += std::exp(r.loss_without);
    a.hits_with += hit_with;
    a.hits_without += hit_without;
  }
}

void ClassReportBuilder::merge(const ClassReportBuilder& other) {
  if (other.acc_.size() != acc_.size()) throw std::invalid_argument("class lists differ");
  for (size_t c = 0; c < acc_.size(); ++c) {
    auto& a = acc_[c];
    const auto& b = other.acc_[c];
    a.count += b.count;
    a.gap += b.gap;
    a.with += b.with;
    a.without += b.without;
    a.exp_with += b.exp_with;
    a.exp_without += b.exp_without;
    a.hits_with += b.hits_with;
    a.hits_without += b.hits_without;
  }
}

std::vector<ClassReport> ClassReportBuilder::result() const {
  std::vector<ClassReport> out;
  for (size_t c = 0; c < classes_.size(); ++c) {
    const auto& a = acc_[c];
    if (a.count == 0) continue;
    const double n = static_cast<double>(a.count);
    ClassReport r;
    r.name = classes_[c].name;
    r.count = a.count;
    r.mean_lossgap = a.gap / n;
    if (aggregation_ == LossAggregation::kExpOfMean) {
      r.exp_loss_with = std::exp(a.with / n);
      r.exp_loss_without = std::exp(a.without / n);
    } else {
      r.exp_loss_with = a.exp_with / n;
      r.exp_loss_without = a.exp_without / n;
    }
    r.exp_loss_gap = r.exp_loss_without - r.exp_loss_with;
    r.acc_at_k_with = static_cast<double>(a.hits_with) / n;
    r.acc_at_k_without = static_cast<double>(a.hits_without) / n;
    r.acc_gap = r.acc_at_k_with - r.acc_at_k_without;
    out.push_back(std::move(r));
  }
  std::stable_sort(out.begin(), out.end(), [](const ClassReport& x, const ClassReport& y) {
    if (x.mean_lossgap != y.mean_lossgap) return x.mean_lossgap > y.mean_lossgap;
    return x.name < y.name;
  });
  return out;
}

std::vector<ClassReport> class_report(std::span<const PredictionRecord> records,
                                      std::span<const SentenceAnnotation> annotations,
                                      std::vector<WordClass> classes, size_t k,
                                      LossAggregation aggregation) {
  const AnnotationIndex index(annotations);
  ClassReportBuilder builder(std::move(classes), k, aggregation);
  for (const auto& r : records) builder.add(r, index.lookup(r));
  return builder.result();
}

nlohmann::json to_json(const ClassReport& r) {
  return {{"class", r.name},
          {"count", r.count},
          {"mean_lossgap", r.mean_lossgap},
          {"exp_loss_with", r.exp_loss_with},
          {"exp_loss_without", r.exp_loss_without},
          {"exp_loss_gap", r.exp_loss_gap},
          {"acc_at_k_with", r.acc_at_k_with},
          {"acc_at_k_without", r.acc_at_k_without},
          {"acc_gap", r.acc_gap}};
}

std::string class_reports_tsv(std::span<const ClassReport> reports) {
  std::ostringstream out;
  out.precision(6);
  out << "class\tcount\tmean_lossgap\texp_loss_with\texp_loss_without\texp_loss_gap\t"
         "acc_at_k_with\tacc_at_k_without\tacc_gap\n";
  for (const auto& r : reports) {
    out << r.name << '\t' << r.count << '\t' << r.mean_lossgap << '\t' << r.exp_loss_with << '\t'
        << r.exp_loss_without << '\t' << r.exp_loss_gap << '\t' << r.acc_at_k_with << '\t'
        << r.acc_at_k_without << '\t' << r.acc_gap << '\n';
  }
  return out.str();
}

}  // namespace crossmask
