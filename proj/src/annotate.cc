#include "crossmask/annotate.h"

#include "crossmask/text.h"
#include "crossmask/tokenize.h"

namespace crossmask {

namespace {

bool stem_at_least(std::string_view word, std::string_view suffix, size_t min_stem) {
  return text::ends_with(word, suffix) && word.size() >= suffix.size() + min_stem;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

// Lookup order for the concreteness fallback.
std::vector<std::string> lemma_candidates(const std::string& w) {
  std::vector<std::string> out{w};
  auto strip = [&](std::string_view suffix) { return w.substr(0, w.size() - suffix.size()); };
  if (stem_at_least(w, "es", 2)) out.push_back(strip("es"));
  if (stem_at_least(w, "s", 2) && !text::ends_with(w, "ss")) out.push_back(strip("s"));
  for (std::string_view suffix : {"ing", "ed"}) {
    if (!stem_at_least(w, suffix, 2)) continue;
    const std::string stem = strip(suffix);
    out.push_back(stem);
    out.push_back(stem + "e");
    const size_t n = stem.size();
    if (n >= 3 && stem[n - 1] == stem[n - 2] && !is_vowel(stem[n - 1])) {
      out.push_back(stem.substr(0, n - 1));
    }
  }
  return out;
}

bool get_bool(const nlohmann::json& arr, size_t i) {
  if (!arr.is_array() || i >= arr.size() || !arr[i].is_boolean()) {
    throw DataError("flag array is malformed or misaligned with words");
  }
  return arr[i].get<bool>();
}

const nlohmann::json& field(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("missing key \"") + key + "\"");
  return *it;
}

}  // namespace

std::string_view to_string(PosTag tag) {
  switch (tag) {
    case PosTag::kNoun:
      return "NOUN";
    case PosTag::kVerb:
      return "VERB";
    case PosTag::kAdj:
      return "ADJ";
    case PosTag::kAdp:
      return "ADP";
    case PosTag::kOther:
      break;
  }
  return "OTHER";
}

PosTag parse_pos_tag(std::string_view tag) {
  std::string t(text::trim(tag));
  for (char& c : t) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  if (t == "NOUN") return PosTag::kNoun;
  if (t == "VERB") return PosTag::kVerb;
  if (t == "ADJ") return PosTag::kAdj;
  if (t == "ADP") return PosTag::kAdp;
  return PosTag::kOther;
}

void PosLexicon::insert(std::string word, PosTag tag) { tags_[text::to_lower(word)] = tag; }

std::optional<PosTag> PosLexicon::find(std::string_view word) const {
  auto it = tags_.find(text::to_lower(word));
  if (it == tags_.end()) return std::nullopt;
  return it->second;
}

PosLexicon load_pos_lexicon(const std::string& path) {
  LineReader reader(path);
  PosLexicon lex;
  std::string line;
  while (reader.next(line)) {
    if (line[0] == '#') continue;
    const auto cols = text::split(line, '\t');
    if (cols.size() != 2 || text::trim(cols[0]).empty()) {
      throw DataError("expected word<TAB>TAG", reader.name(), reader.line_number());
    }
    lex.insert(std::string(text::trim(cols[0])), parse_pos_tag(cols[1]));
  }
  return lex;
}

PosTag tag_word(std::string_view word, const PosLexicon& lexicon) {
  if (auto hit = lexicon.find(word)) return *hit;
  const std::string w = text::to_lower(word);
  if (stem_at_least(w, "ing", 3) || stem_at_least(w, "ed", 3)) return PosTag::kVerb;
  if (stem_at_least(w, "ous", 2) || stem_at_least(w, "ful", 2) || stem_at_least(w, "ish", 2)) {
    return PosTag::kAdj;
  }
  return PosTag::kNoun;
}

std::vector<PosTag> pos_tag(std::span<const std::string> words, const PosLexicon& lexicon,
                            const std::vector<std::string>* supplied) {
  std::vector<PosTag> tags;
  tags.reserve(words.size());
  if (supplied) {
    if (supplied->size() != words.size()) {
      throw DataError("supplied " + std::to_string(supplied->size()) + " tags for " +
                      std::to_string(words.size()) + " words");
    }
    for (const auto& t : *supplied) tags.push_back(parse_pos_tag(t));
    return tags;
  }
  for (const auto& w : words) tags.push_back(tag_word(w, lexicon));
  return tags;
}

std::vector<ClassFlags> classify_semantic(std::span<const std::string> words,
                                          std::span<const PosTag> tags,
                                          const LexiconSet& lexicons) {
  if (tags.size() != words.size()) throw DataError("tags are not aligned with words");
  std::vector<ClassFlags> out(words.size());
  for (size_t i = 0; i < words.size(); ++i) {
    const std::string w = text::to_lower(words[i]);
    const PosTag t = tags[i];
    out[i].object = t == PosTag::kNoun && lexicons.objects.count(w) > 0;
    out[i].attribute = t == PosTag::kAdj && lexicons.attributes.count(w) > 0;
    out[i].relationship =
        (t == PosTag::kAdp || t == PosTag::kVerb) && lexicons.relationships.count(w) > 0;
  }
  return out;
}

std::vector<StopFlags> mark_stopwords(std::span<const std::string> words,
                                      const StopwordSet& stops) {
  std::vector<StopFlags> out(words.size());
  for (size_t i = 0; i < words.size(); ++i) {
    out[i].stopword = stops.is_stopword(words[i]);
    out[i].punct = stops.is_punct(words[i]);
    out[i].content = !(out[i].stopword || out[i].punct);
  }
  return out;
}

std::optional<double> concreteness_of(std::string_view word, const ConcretenessTable& table) {
  for (const auto& candidate : lemma_candidates(text::to_lower(word))) {
    if (auto score = table.find(candidate)) return score;
  }
  return std::nullopt;
}

std::vector<std::optional<double>> score_concreteness(std::span<const std::string> words,
                                                      const ConcretenessTable& table) {
  std::vector<std::optional<double>> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(concreteness_of(w, table));
  return out;
}

std::vector<ClassFlags> ground(std::span<const std::string> words, const SceneGraph& graph) {
  std::vector<ClassFlags> out(words.size());
  for (size_t i = 0; i < words.size(); ++i) {
    const std::string w = text::to_lower(words[i]);
    out[i] = {graph.objects.count(w) > 0, graph.attributes.count(w) > 0,
              graph.relationships.count(w) > 0};
  }
  return out;
}

SentenceAnnotation annotate_words(std::string id, std::string image_id,
                                  std::vector<std::string> words,
                                  const std::vector<std::string>* supplied_tags,
                                  const AnnotationContext& ctx) {
  static const PosLexicon kEmptyPos;
  static const LexiconSet kEmptyLexicons;
  static const StopwordSet kEmptyStops;
  static const ConcretenessTable kEmptyConcreteness;

  SentenceAnnotation a;
  a.id = std::move(id);
  a.image_id = std::move(image_id);
  a.words = std::move(words);

  const auto tags = pos_tag(a.words, ctx.pos_lexicon ? *ctx.pos_lexicon : kEmptyPos, supplied_tags);
  const auto classes = classify_semantic(a.words, tags, ctx.lexicons ? *ctx.lexicons : kEmptyLexicons);
  const auto stops = mark_stopwords(a.words, ctx.stopwords ? *ctx.stopwords : kEmptyStops);
  const auto scores =
      score_concreteness(a.words, ctx.concreteness ? *ctx.concreteness : kEmptyConcreteness);

  const SceneGraph* graph = nullptr;
  if (ctx.scene_graphs) {
    auto it = ctx.scene_graphs->find(a.image_id);
    if (it != ctx.scene_graphs->end()) graph = &it->second;
  }
  std::vector<ClassFlags> grounded;
  if (graph) grounded = ground(a.words, *graph);
  a.has_scene_graph = graph != nullptr;

  a.tokens.resize(a.words.size());
  for (size_t i = 0; i < a.words.size(); ++i) {
    auto& t = a.tokens[i];
    t.pos = tags[i];
    t.stop = stops[i];
    t.classes = classes[i];
    t.concreteness = scores[i];
    if (graph) t.grounded = grounded[i];
  }
  return a;
}

SentenceAnnotation annotate_caption(const CaptionRecord& record, const AnnotationContext& ctx) {
  std::vector<std::string> words = record.words ? *record.words : pre_tokenize(record.text);
  const std::vector<std::string>* tags = record.pos ? &*record.pos : nullptr;
  return annotate_words(record.id, record.image_id, std::move(words), tags, ctx);
}

nlohmann::json to_json(const SentenceAnnotation& a) {
  using nlohmann::json;
  json pos = json::array(), stop = json::array(), punct = json::array(), content = json::array(),
       obj = json::array(), attr = json::array(), rel = json::array(), conc = json::array();
  json g_obj = json::array(), g_attr = json::array(), g_rel = json::array();
  for (const auto& t : a.tokens) {
    pos.push_back(std::string(to_string(t.pos)));
    stop.push_back(t.stop.stopword);
    punct.push_back(t.stop.punct);
    content.push_back(t.stop.content);
    obj.push_back(t.classes.object);
    attr.push_back(t.classes.attribute);
    rel.push_back(t.classes.relationship);
    conc.push_back(t.concreteness ? json(*t.concreteness) : json(nullptr));
    if (t.grounded) {
      g_obj.push_back(t.grounded->object);
      g_attr.push_back(t.grounded->attribute);
      g_rel.push_back(t.grounded->relationship);
    }
  }
  json j;
  j["id"] = a.id;
  j["image_id"] = a.image_id;
  j["words"] = a.words;
  j["pos"] = std::move(pos);
  j["is_stopword"] = std::move(stop);
  j["is_punct"] = std::move(punct);
  j["is_content"] = std::move(content);
  j["is_object"] = std::move(obj);
  j["is_attribute"] = std::move(attr);
  j["is_relationship"] = std::move(rel);
  j["concreteness"] = std::move(conc);
  j["has_scene_graph"] = a.has_scene_graph;
  j["grounded_object"] = a.has_scene_graph ? std::move(g_obj) : json(nullptr);
  j["grounded_attribute"] = a.has_scene_graph ? std::move(g_attr) : json(nullptr);
  j["grounded_relationship"] = a.has_scene_graph ? std::move(g_rel) : json(nullptr);
  return j;
}

SentenceAnnotation annotation_from_json(const nlohmann::json& j) {
  SentenceAnnotation a;
  const auto& id = field(j, "id");
  const auto& image_id = field(j, "image_id");
  if (!id.is_string() || !image_id.is_string()) throw DataError("id and image_id must be strings");
  a.id = id.get<std::string>();
  a.image_id = image_id.get<std::string>();
  const auto& words = field(j, "words");
  if (!words.is_array()) throw DataError("\"words\" must be an array");
  for (const auto& w : words) {
    if (!w.is_string()) throw DataError("\"words\" must hold only strings");
    a.words.push_back(w.get<std::string>());
  }
  const auto& pos = field(j, "pos");
  const auto& stop = field(j, "is_stopword");
  const auto& punct = field(j, "is_punct");
  const auto& content = field(j, "is_content");
  const auto& obj = field(j, "is_object");
  const auto& attr = field(j, "is_attribute");
  const auto& rel = field(j, "is_relationship");
  const auto& conc = field(j, "concreteness");
  auto graph_it = j.find("has_scene_graph");
  a.has_scene_graph = graph_it != j.end() && graph_it->is_boolean() && graph_it->get<bool>();
  const size_t n = a.words.size();
  for (const auto* arr : {&pos, &stop, &punct, &content, &obj, &attr, &rel, &conc}) {
    if (!arr->is_array() || arr->size() != n) {
      throw DataError("annotation arrays are misaligned with words");
    }
  }
  a.tokens.resize(n);
  for (size_t i = 0; i < n; ++i) {
    auto& t = a.tokens[i];
    if (!pos[i].is_string()) throw DataError("\"pos\" must hold only strings");
    t.pos = parse_pos_tag(pos[i].get<std::string>());
    t.stop = {get_bool(stop, i), get_bool(punct, i), get_bool(content, i)};
    if (t.stop.content != !(t.stop.stopword || t.stop.punct)) {
      throw DataError("is_content contradicts is_stopword/is_punct for word " + std::to_string(i));
    }
    t.classes = {get_bool(obj, i), get_bool(attr, i), get_bool(rel, i)};
    if (conc[i].is_number()) {
      const double v = conc[i].get<double>();
      if (!(v >= 1.0 && v <= 5.0)) throw DataError("concreteness outside [1, 5]");
      t.concreteness = v;
    } else if (!conc[i].is_null()) {
      throw DataError("concreteness entries must be numbers or null");
    }
    if (a.has_scene_graph) {
      t.grounded = ClassFlags{get_bool(field(j, "grounded_object"), i),
                              get_bool(field(j, "grounded_attribute"), i),
                              get_bool(field(j, "grounded_relationship"), i)};
    }
  }
  return a;
}

std::vector<SentenceAnnotation> load_annotations(const std::string& path, ErrorPolicy policy,
                                                 LoadStats* stats) {
  LineReader reader(path);
  std::vector<SentenceAnnotation> out;
  LoadStats s;
  std::string line;
  while (reader.next(line)) {
    try {
      out.push_back(annotation_from_json(nlohmann::json::parse(line)));
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

void DetectionEvaluator::add(const SentenceAnnotation& a) {
  ++sentences_;
  if (!a.has_scene_graph) {
    ++without_graph_;
    return;
  }
  for (const auto& t : a.tokens) {
    const ClassFlags g = t.grounded.value_or(ClassFlags{});
    const std::array<std::pair<bool, bool>, 3> pairs{{{t.classes.object, g.object},
                                                     {t.classes.attribute, g.attribute},
                                                     {t.classes.relationship, g.relationship}}};
    for (size_t c = 0; c < 3; ++c) {
      auto& tally = tallies_[c];
      ++tally.tokens;
      if (pairs[c].first) ++tally.predicted;
      if (pairs[c].second) ++tally.grounded;
      if (pairs[c].first && pairs[c].second) ++tally.tp;
    }
  }
}

std::array<DetectionCounts, 3> DetectionEvaluator::result() const {
  static constexpr std::array<const char*, 3> kNames{"objects", "attributes", "relationships"};
  std::array<DetectionCounts, 3> out;
  for (size_t c = 0; c < 3; ++c) {
    const auto& t = tallies_[c];
    auto& r = out[c];
    r.name = kNames[c];
    r.true_positives = t.tp;
    r.predicted = t.predicted;
    r.grounded = t.grounded;
    r.tokens = t.tokens;
    if (t.predicted) r.precision = static_cast<double>(t.tp) / static_cast<double>(t.predicted);
    if (t.grounded) r.recall = static_cast<double>(t.tp) / static_cast<double>(t.grounded);
    if (t.tokens) {
      const size_t false_pos = t.predicted - t.tp;
      const size_t false_neg = t.grounded - t.tp;
      const size_t correct = t.tokens - false_pos - false_neg;
      r.token_accuracy = static_cast<double>(correct) / static_cast<double>(t.tokens);
    }
  }
  return out;
}

std::array<DetectionCounts, 3> evaluate_detection(std::span<const SentenceAnnotation> corpus) {
  DetectionEvaluator eval;
  for (const auto& a : corpus) eval.add(a);
  return eval.result();
}

}  // namespace crossmask
