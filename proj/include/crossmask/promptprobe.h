// Prompt-based object detection scoring: a model's ranked completions for a
// cloze prompt are intersected with the image's ground-truth objects.

#ifndef CROSSMASK_PROMPTPROBE_H_
#define CROSSMASK_PROMPTPROBE_H_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "crossmask/corpus.h"
#include "json.hpp"

namespace crossmask {

struct ProbeRecord {
  std::string image_id;
  std::string prompt;
  std::vector<std::string> predictions;  // most confident first
};

ProbeRecord probe_from_json(const nlohmann::json& j);
std::vector<ProbeRecord> load_probes(const std::string& path,
                                     ErrorPolicy policy = ErrorPolicy::kStrict,
                                     LoadStats* stats = nullptr);

struct ProbeOptions {
  // Also accept a prediction when it equals an object after adding or
  // removing a trailing "s"/"es".
  bool plural_fold = false;
  // Pool counts over all images instead of averaging per image.
  bool micro_average = false;
};

struct CurvePoint {
  size_t k = 0;
  double precision = 0.0;
  double recall = 0.0;
};

struct ProbeResult {
  std::vector<CurvePoint> curve;  // k = 1..K
  size_t images = 0;
  // Images whose object set is empty; they count toward precision only.
  size_t images_without_objects = 0;

  const CurvePoint& at(size_t k) const { return curve.at(k - 1); }
};

// True when `prediction` names one of `objects` under the matching rule.
bool matches_object(const std::string& prediction, const std::set<std::string>& objects,
                    bool plural_fold);

// Records should share one prompt; the CLI groups by prompt before calling.
// Throws DataError when an image lacks a scene graph (listing every missing
// id), when a list holds duplicates after normalization, or when K exceeds
// the shortest prediction list. K must be positive.
ProbeResult evaluate_probe(std::span<const ProbeRecord> records, const SceneGraphMap& graphs,
                           size_t max_k, const ProbeOptions& options = {});

// prompt -> result, prompts in lexical order.
std::map<std::string, ProbeResult> evaluate_probe_by_prompt(std::span<const ProbeRecord> records,
                                                            const SceneGraphMap& graphs,
                                                            size_t max_k,
                                                            const ProbeOptions& options = {});

// prompt, k, precision, recall
std::string probe_curves_tsv(const std::map<std::string, ProbeResult>& results);

}  // namespace crossmask

#endif  // CROSSMASK_PROMPTPROBE_H_
