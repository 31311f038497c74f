// Ten-image probe fixture and a nested-loop intersection oracle, shared by
// the unit and acceptance suites.

#ifndef CROSSMASK_TESTS_PROBE_FIXTURE_H_
#define CROSSMASK_TESTS_PROBE_FIXTURE_H_

#include <set>
#include <string>
#include <vector>

#include "crossmask/promptprobe.h"

namespace crossmask::testing {

inline const std::string kPrompt = "A photo of a [MASK]";

inline SceneGraph graph(const std::string& id, std::set<std::string> objects) {
  SceneGraph g;
  g.image_id = id;
  g.objects = std::move(objects);
  return g;
}

// Ten images with assorted overlaps, including one with no objects.
struct TenImages {
  SceneGraphMap graphs;
  std::vector<ProbeRecord> records;

  TenImages() {
    const std::vector<std::set<std::string>> objects = {
        {"man", "dog", "frisbee"},  {"cat", "sofa"},         {"bus", "street", "man", "sign"},
        {"plate", "pizza"},         {},                      {"horse", "man", "field"},
        {"kite", "sky", "beach", "person"}, {"giraffe"},     {"car", "street"},
        {"woman", "umbrella", "rain"}};
    const std::vector<std::vector<std::string>> predictions = {
        {"dog", "man", "park", "frisbee", "tree", "ball"},
        {"room", "cat", "dog", "sofa", "tv", "bed"},
        {"street", "bus", "city", "car", "man", "sign"},
        {"pizza", "table", "food", "plate", "kitchen", "fork"},
        {"room", "wall", "window", "floor", "door", "light"},
        {"man", "horse", "cow", "field", "fence", "grass"},
        {"beach", "ocean", "kite", "sky", "sand", "people"},
        {"zebra", "tree", "elephant", "animal", "field", "grass"},
        {"street", "car", "truck", "road", "city", "bus"},
        {"umbrella", "woman", "rain", "street", "man", "city"}};
    for (size_t i = 0; i < objects.size(); ++i) {
      const std::string id = "img" + std::to_string(i);
      graphs[id] = graph(id, objects[i]);
      records.push_back({id, kPrompt, predictions[i]});
    }
  }
};

// Nested-loop intersection, returning exact per-k numerators.
struct OracleCounts {
  std::vector<size_t> correct;  // summed over images
  std::vector<std::vector<std::pair<size_t, size_t>>> recall_terms;  // (correct, |objects|)
};

inline OracleCounts nested_loop_oracle(const std::vector<ProbeRecord>& records, const SceneGraphMap& graphs,
                                size_t max_k) {
  OracleCounts o;
  o.correct.assign(max_k, 0);
  o.recall_terms.resize(max_k);
  for (const auto& r : records) {
    const auto& objects = graphs.at(r.image_id).objects;
    for (size_t k = 1; k <= max_k; ++k) {
      size_t c = 0;
      for (size_t i = 0; i < k; ++i) {
        for (const auto& obj : objects) c += r.predictions[i] == obj;
      }
      o.correct[k - 1] += c;
      if (!objects.empty()) o.recall_terms[k - 1].push_back({c, objects.size()});
    }
  }
  return o;
}

}  // namespace crossmask::testing

#endif  // CROSSMASK_TESTS_PROBE_FIXTURE_H_
