#include "crossmask/corpus.h"

#include <charconv>
#include <fstream>
#include <sstream>
#include <utility>

#include "crossmask/text.h"

namespace crossmask {

namespace {

std::string format_error(const std::string& what, const std::string& source, size_t line) {
  if (source.empty()) return what;
  if (line == 0) return source + ": " + what;
  return source + ":" + std::to_string(line) + ": " + what;
}

std::string require_string(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("missing key \"") + key + "\"");
  if (!it->is_string()) throw DataError(std::string("key \"") + key + "\" must be a string");
  return it->get<std::string>();
}

std::optional<std::vector<std::string>> optional_string_array(const nlohmann::json& j,
                                                              const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_array()) throw DataError(std::string("key \"") + key + "\" must be an array");
  std::vector<std::string> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_string()) {
      throw DataError(std::string("key \"") + key + "\" must hold only strings");
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::set<std::string> name_set(const nlohmann::json& j, const char* key) {
  std::set<std::string> out;
  auto values = optional_string_array(j, key);
  if (!values) return out;
  for (const auto& v : *values) {
    std::string name = text::to_lower(text::trim(v));
    if (!name.empty()) out.insert(std::move(name));
  }
  return out;
}

nlohmann::json parse_json_line(const std::string& line) {
  try {
    auto j = nlohmann::json::parse(line);
    if (!j.is_object()) throw DataError("record is not a JSON object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

DataError::DataError(const std::string& what, std::string source, size_t line)
    : std::runtime_error(format_error(what, source, line)),
      source_(std::move(source)),
      line_(line),
      detail_(what) {}

LineReader::LineReader(const std::string& path) : name_(path) {
  auto file = std::make_unique<std::ifstream>(path);
  if (!*file) throw DataError("cannot open file", path);
  owned_ = std::move(file);
  in_ = owned_.get();
}

LineReader::LineReader(std::istream& in, std::string name) : in_(&in), name_(std::move(name)) {}

LineReader::~LineReader() = default;

bool LineReader::next(std::string& line) {
  while (std::getline(*in_, line)) {
    ++line_number_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!text::trim(line).empty()) return true;
  }
  return false;
}

void validate(const CaptionRecord& record) {
  if (record.id.empty()) throw DataError("caption id is empty");
  if (record.text.empty()) throw DataError("caption \"" + record.id + "\" has empty text");
  if (record.pos) {
    if (!record.words) {
      throw DataError("caption \"" + record.id + "\" has pos tags without words");
    }
    if (record.pos->size() != record.words->size()) {
      throw DataError("caption \"" + record.id + "\" has " + std::to_string(record.pos->size()) +
                      " pos tags for " + std::to_string(record.words->size()) + " words");
    }
  }
  if (record.words) {
    if (record.words->empty()) throw DataError("caption \"" + record.id + "\" has no words");
    for (const auto& w : *record.words) {
      if (text::trim(w).empty()) {
        throw DataError("caption \"" + record.id + "\" contains an empty word");
      }
    }
  }
}

CaptionRecord caption_from_json(const nlohmann::json& j) {
  CaptionRecord r;
  r.id = require_string(j, "id");
  r.image_id = require_string(j, "image_id");
  r.text = require_string(j, "text");
  r.words = optional_string_array(j, "words");
  r.pos = optional_string_array(j, "pos");
  validate(r);
  return r;
}

nlohmann::json to_json(const CaptionRecord& record) {
  nlohmann::json j = {{"id", record.id}, {"image_id", record.image_id}, {"text", record.text}};
  if (record.words) j["words"] = *record.words;
  if (record.pos) j["pos"] = *record.pos;
  return j;
}

LoadStats for_each_caption(LineReader& reader, ErrorPolicy policy,
                           const std::function<void(CaptionRecord&&)>& sink) {
  LoadStats stats;
  std::unordered_set<std::string> seen;
  std::string line;
  while (reader.next(line)) {
    CaptionRecord record;
    try {
      record = caption_from_json(parse_json_line(line));
      if (!seen.insert(record.id).second) {
        throw DataError("duplicate caption id \"" + record.id + "\"");
      }
    } catch (const DataError& e) {
      if (policy == ErrorPolicy::kSkip) {
        ++stats.skipped;
        continue;
      }
      throw DataError(e.detail(), reader.name(), reader.line_number());
    }
    ++stats.records;
    sink(std::move(record));
  }
  return stats;
}

std::vector<CaptionRecord> load_captions(const std::string& path, ErrorPolicy policy,
                                         LoadStats* stats) {
  LineReader reader(path);
  std::vector<CaptionRecord> out;
  LoadStats s = for_each_caption(reader, policy,
                                 [&](CaptionRecord&& r) { out.push_back(std::move(r)); });
  if (stats) *stats = s;
  return out;
}

SceneGraph scene_graph_from_json(const nlohmann::json& j) {
  SceneGraph g;
  g.image_id = require_string(j, "image_id");
  if (g.image_id.empty()) throw DataError("scene graph image_id is empty");
  g.objects = name_set(j, "objects");
  g.attributes = name_set(j, "attributes");
  g.relationships = name_set(j, "relationships");
  return g;
}

nlohmann::json to_json(const SceneGraph& graph) {
  return {{"image_id", graph.image_id},
          {"objects", graph.objects},
          {"attributes", graph.attributes},
          {"relationships", graph.relationships}};
}

SceneGraphMap load_scene_graphs(const std::string& path, ErrorPolicy policy, LoadStats* stats) {
  LineReader reader(path);
  SceneGraphMap out;
  LoadStats s;
  std::string line;
  while (reader.next(line)) {
    SceneGraph g;
    try {
      g = scene_graph_from_json(parse_json_line(line));
    } catch (const DataError& e) {
      if (policy == ErrorPolicy::kSkip) {
        ++s.skipped;
        continue;
      }
      throw DataError(e.detail(), reader.name(), reader.line_number());
    }
    const std::string image_id = g.image_id;
    if (!out.emplace(image_id, std::move(g)).second) {
      throw DataError("duplicate scene graph for image \"" + image_id + "\"", reader.name(),
                      reader.line_number());
    }
    ++s.records;
  }
  if (stats) *stats = s;
  return out;
}

WordSet load_word_list(const std::string& path) {
  LineReader reader(path);
  WordSet out;
  std::string line;
  while (reader.next(line)) out.insert(text::to_lower(text::trim(line)));
  return out;
}

void ConcretenessTable::insert(std::string lemma, double score) {
  if (!(score >= 1.0 && score <= 5.0)) {
    throw DataError("concreteness score " + std::to_string(score) + " for \"" + lemma +
                    "\" is outside [1, 5]");
  }
  scores_[text::to_lower(lemma)] = score;
}

std::optional<double> ConcretenessTable::find(std::string_view lemma) const {
  auto it = scores_.find(std::string(lemma));
  if (it == scores_.end()) return std::nullopt;
  return it->second;
}

ConcretenessTable load_concreteness(const std::string& path) {
  LineReader reader(path);
  ConcretenessTable table;
  std::string line;
  bool first = true;
  while (reader.next(line)) {
    const auto cols = text::split(line, '\t');
    if (cols.size() < 2) {
      throw DataError("expected lemma<TAB>score", reader.name(), reader.line_number());
    }
    const std::string lemma(text::trim(cols[0]));
    const std::string_view field = text::trim(cols[1]);
    double score = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), score);
    const bool numeric = ec == std::errc() && ptr == field.data() + field.size();
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw DataError("score \"" + std::string(field) + "\" is not a number", reader.name(),
                      reader.line_number());
    }
    first = false;
    if (lemma.empty()) throw DataError("empty lemma", reader.name(), reader.line_number());
    try {
      table.insert(lemma, score);
    } catch (const DataError& e) {
      throw DataError(e.detail(), reader.name(), reader.line_number());
    }
  }
  return table;
}

VocabTable::VocabTable(std::vector<std::string> tokens, std::string unknown, std::string mask,
                       std::string continuation_prefix, size_t max_chars_per_word)
    : tokens_(std::move(tokens)),
      unknown_(std::move(unknown)),
      mask_(std::move(mask)),
      prefix_(std::move(continuation_prefix)),
      max_chars_(max_chars_per_word) {
  index_.reserve(tokens_.size());
  for (size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) {
      throw DataError("duplicate vocabulary token \"" + tokens_[i] + "\"");
    }
    const auto& t = tokens_[i];
    const bool special = t.size() >= 2 && t.front() == '[' && t.back() == ']';
    if (!special) candidates_.push_back(i);
  }
  if (!contains(unknown_)) throw DataError("vocabulary lacks unknown token " + unknown_);
  if (!contains(mask_)) throw DataError("vocabulary lacks mask token " + mask_);
  if (max_chars_ == 0) throw DataError("max characters per word must be positive");
}

bool VocabTable::contains(std::string_view token) const {
  return index_.find(std::string(token)) != index_.end();
}

VocabTable load_vocab(const std::string& path, size_t max_chars_per_word) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file", path);
  std::vector<std::string> tokens;
  std::string line;
  size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string token(text::trim(line));
    if (token.empty()) continue;
    tokens.push_back(std::move(token));
  }
  try {
    return VocabTable(std::move(tokens), std::string(VocabTable::kDefaultUnknown),
                      std::string(VocabTable::kDefaultMask), "##", max_chars_per_word);
  } catch (const DataError& e) {
    throw DataError(e.detail(), path);
  }
}

bool StopwordSet::is_stopword(std::string_view word) const {
  return words.count(text::to_lower(word)) > 0;
}

bool StopwordSet::is_punct(std::string_view word) const {
  if (word.empty()) return false;
  for (char32_t c : text::decode_utf8(word)) {
    if (!punctuation.count(c)) return false;
  }
  return true;
}

std::unordered_set<char32_t> load_punctuation(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file", path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::unordered_set<char32_t> out;
  for (char32_t c : text::decode_utf8(buf.str())) {
    if (!text::is_whitespace(c)) out.insert(c);
  }
  return out;
}

StopwordSet load_stopwords(const std::string& words_path, const std::string& punctuation_path) {
  StopwordSet s;
  s.words = load_word_list(words_path);
  if (!punctuation_path.empty()) {
    s.punctuation = load_punctuation(punctuation_path);
  } else {
    for (char32_t c = 33; c < 127; ++c) {
      if (text::is_ascii_punct(c)) s.punctuation.insert(c);
    }
  }
  return s;
}

Resources load_resources(const ResourcePaths& paths) {
  Resources r;
  if (!paths.objects.empty()) r.lexicons.objects = load_word_list(paths.objects);
  if (!paths.attributes.empty()) r.lexicons.attributes = load_word_list(paths.attributes);
  if (!paths.relationships.empty()) {
    r.lexicons.relationships = load_word_list(paths.relationships);
  }
  if (!paths.concreteness.empty()) r.concreteness = load_concreteness(paths.concreteness);
  if (!paths.vocab.empty()) r.vocab = load_vocab(paths.vocab);
  if (!paths.stopwords.empty()) r.stopwords = load_stopwords(paths.stopwords, paths.punctuation);
  return r;
}

}  // namespace crossmask
