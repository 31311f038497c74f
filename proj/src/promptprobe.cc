#include "crossmask/promptprobe.h"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "crossmask/text.h"

namespace crossmask {

namespace {

std::string normalize(std::string_view s) { return text::to_lower(text::trim(s)); }

}  // namespace

ProbeRecord probe_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("record is not a JSON object");
  ProbeRecord r;
  auto image = j.find("image_id");
  if (image == j.end() || !image->is_string()) throw DataError("\"image_id\" must be a string");
  r.image_id = image->get<std::string>();
  auto prompt = j.find("prompt");
  if (prompt == j.end() || !prompt->is_string()) throw DataError("\"prompt\" must be a string");
  r.prompt = prompt->get<std::string>();
  auto preds = j.find("predictions");
  if (preds == j.end() || !preds->is_array()) throw DataError("\"predictions\" must be an array");
  for (const auto& p : *preds) {
    if (!p.is_string()) throw DataError("\"predictions\" must hold strings");
    r.predictions.push_back(p.get<std::string>());
  }
  if (r.predictions.empty()) throw DataError("\"predictions\" is empty");
  return r;
}

std::vector<ProbeRecord> load_probes(const std::string& path, ErrorPolicy policy,
                                     LoadStats* stats) {
  LineReader reader(path);
  std::vector<ProbeRecord> out;
  LoadStats s;
  std::string line;
  while (reader.next(line)) {
    try {
      out.push_back(probe_from_json(nlohmann::json::parse(line)));
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

bool matches_object(const std::string& prediction, const std::set<std::string>& objects,
                    bool plural_fold) {
  if (objects.count(prediction)) return true;
  if (!plural_fold) return false;
  if (objects.count(prediction + "s") || objects.count(prediction + "es")) return true;
  for (std::string_view suffix : {"es", "s"}) {
    if (prediction.size() > suffix.size() + 1 && text::ends_with(prediction, suffix) &&
        objects.count(prediction.substr(0, prediction.size() - suffix.size()))) {
      return true;
    }
  }
  return false;
}

ProbeResult evaluate_probe(std::span<const ProbeRecord> records, const SceneGraphMap& graphs,
                           size_t max_k, const ProbeOptions& options) {
  if (max_k == 0) throw std::invalid_argument("K must be at least 1");

  std::vector<std::string> missing;
  size_t shortest = static_cast<size_t>(-1);
  for (const auto& r : records) {
    if (!graphs.count(r.image_id)) missing.push_back(r.image_id);
    shortest = std::min(shortest, r.predictions.size());
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    throw DataError("no scene graph for images: " + text::join(missing, ", "));
  }
  if (!records.empty() && max_k > shortest) {
    throw DataError("K = " + std::to_string(max_k) + " exceeds the shortest prediction list (" +
                    std::to_string(shortest) + ")");
  }

  // Integer tallies keep the result independent of record order. Recall
  // terms are grouped by object-set size so each group sums exactly.
  std::vector<size_t> correct_total(max_k, 0);
  std::map<size_t, std::vector<size_t>> correct_by_size;
  size_t objects_total = 0;
  ProbeResult result;

  for (const auto& r : records) {
    const SceneGraph& g = graphs.at(r.image_id);
    std::vector<size_t>* by_size = nullptr;
    if (!g.objects.empty()) {
      auto& slot = correct_by_size[g.objects.size()];
      slot.resize(max_k, 0);
      by_size = &slot;
    }
    std::unordered_set<std::string> seen;
    size_t correct = 0;
    for (size_t k = 1; k <= max_k; ++k) {
      const std::string p = normalize(r.predictions[k - 1]);
      if (!seen.insert(p).second) {
        throw DataError("image \"" + r.image_id + "\" prompt \"" + r.prompt +
                        "\" repeats prediction \"" + p + "\"");
      }
      if (matches_object(p, g.objects, options.plural_fold)) ++correct;
      correct_total[k - 1] += correct;
      if (by_size) (*by_size)[k - 1] += correct;
    }
    ++result.images;
    if (g.objects.empty()) ++result.images_without_objects;
    objects_total += g.objects.size();
  }

  const size_t with_objects = result.images - result.images_without_objects;
  result.curve.resize(max_k);
  for (size_t k = 1; k <= max_k; ++k) {
    auto& pt = result.curve[k - 1];
    pt.k = k;
    if (result.images == 0) continue;
    // Every image contributes exactly k predictions, so macro and micro
    // precision coincide.
    pt.precision =
        static_cast<double>(correct_total[k - 1]) / static_cast<double>(k * result.images);
    if (options.micro_average) {
      pt.recall = objects_total ? static_cast<double>(correct_total[k - 1]) /
                                      static_cast<double>(objects_total)
                                : 0.0;
    } else if (with_objects) {
      double sum = 0.0;
      for (const auto& [size, counts] : correct_by_size) {
        sum += static_cast<double>(counts[k - 1]) / static_cast<double>(size);
      }
      pt.recall = sum / static_cast<double>(with_objects);
    }
  }
  return result;
}

std::map<std::string, ProbeResult> evaluate_probe_by_prompt(std::span<const ProbeRecord> records,
                                                            const SceneGraphMap& graphs,
                                                            size_t max_k,
                                                            const ProbeOptions& options) {
  std::map<std::string, std::vector<ProbeRecord>> groups;
  for (const auto& r : records) groups[r.prompt].push_back(r);
  std::map<std::string, ProbeResult> out;
  for (const auto& [prompt, group] : groups) {
    out.emplace(prompt, evaluate_probe(group, graphs, max_k, options));
  }
  return out;
}

std::string probe_curves_tsv(const std::map<std::string, ProbeResult>& results) {
  std::ostringstream out;
  out.precision(6);
  out << "prompt\tk\tprecision\trecall\n";
  for (const auto& [prompt, result] : results) {
    for (const auto& pt : result.curve) {
      out << prompt << '\t' << pt.k << '\t' << pt.precision << '\t' << pt.recall << '\n';
    }
  }
  return out.str();
}

}  // namespace crossmask
