// Loaders and validated in-memory types for every external resource:
// caption corpora, scene graphs, class lexicons, the concreteness table,
// the subword vocabulary and the stop-word/punctuation lists.
//
// All loaders throw DataError on malformed input. Record-level errors carry
// the 1-based line number of the offending line. Loaded structures are
// immutable after construction and safe for concurrent reads.

#ifndef CROSSMASK_CORPUS_H_
#define CROSSMASK_CORPUS_H_

#include <cstdint>
#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"

namespace crossmask {

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what, std::string source = {}, size_t line = 0);

  const std::string& source() const { return source_; }
  // 0 when the error is not tied to a line.
  size_t line() const { return line_; }
  const std::string& detail() const { return detail_; }

 private:
  std::string source_;
  size_t line_;
  std::string detail_;
};

// What to do with a record that fails to parse or validate.
enum class ErrorPolicy { kStrict, kSkip };

struct LoadStats {
  size_t records = 0;
  size_t skipped = 0;
};

// Reads a line-oriented file, yielding (line number, line) pairs. Blank lines
// are skipped. Opening a missing file throws DataError.
class LineReader {
 public:
  explicit LineReader(const std::string& path);
  // Reads from an existing stream; `name` is used in error messages.
  LineReader(std::istream& in, std::string name);
  ~LineReader();

  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;

  bool next(std::string& line);
  size_t line_number() const { return line_number_; }
  const std::string& name() const { return name_; }

 private:
  std::unique_ptr<std::istream> owned_;
  std::istream* in_;
  std::string name_;
  size_t line_number_ = 0;
};

struct CaptionRecord {
  std::string id;
  std::string image_id;
  std::string text;
  std::optional<std::vector<std::string>> words;
  std::optional<std::vector<std::string>> pos;

  bool operator==(const CaptionRecord&) const = default;
};

// Throws DataError on an invariant violation.
void validate(const CaptionRecord& record);
CaptionRecord caption_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CaptionRecord& record);

// Streams records in file order. Duplicate ids are record-level errors.
LoadStats for_each_caption(LineReader& reader, ErrorPolicy policy,
                           const std::function<void(CaptionRecord&&)>& sink);
std::vector<CaptionRecord> load_captions(const std::string& path,
                                         ErrorPolicy policy = ErrorPolicy::kStrict,
                                         LoadStats* stats = nullptr);

struct SceneGraph {
  std::string image_id;
  std::set<std::string> objects;
  std::set<std::string> attributes;
  std::set<std::string> relationships;

  bool operator==(const SceneGraph&) const = default;
};

using SceneGraphMap = std::unordered_map<std::string, SceneGraph>;

SceneGraph scene_graph_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SceneGraph& graph);
// Duplicate image ids are always fatal, regardless of policy.
SceneGraphMap load_scene_graphs(const std::string& path,
                                ErrorPolicy policy = ErrorPolicy::kStrict,
                                LoadStats* stats = nullptr);

using WordSet = std::unordered_set<std::string>;

struct LexiconSet {
  WordSet objects;
  WordSet attributes;
  WordSet relationships;
};

// One term per line, lowercased and trimmed.
WordSet load_word_list(const std::string& path);

class ConcretenessTable {
 public:
  ConcretenessTable() = default;

  // Throws DataError when the score lies outside [1, 5].
  void insert(std::string lemma, double score);
  std::optional<double> find(std::string_view lemma) const;
  size_t size() const { return scores_.size(); }

 private:
  std::unordered_map<std::string, double> scores_;
};

// Two-column TSV `lemma<TAB>score`. A non-numeric score on the first line is
// taken as a header and skipped.
ConcretenessTable load_concreteness(const std::string& path);

class VocabTable {
 public:
  static constexpr std::string_view kDefaultUnknown = "[UNK]";
  static constexpr std::string_view kDefaultMask = "[MASK]";
  static constexpr size_t kDefaultMaxChars = 100;

  // Throws DataError on duplicate tokens or missing special symbols.
  explicit VocabTable(std::vector<std::string> tokens,
                      std::string unknown = std::string(kDefaultUnknown),
                      std::string mask = std::string(kDefaultMask),
                      std::string continuation_prefix = "##",
                      size_t max_chars_per_word = kDefaultMaxChars);

  bool contains(std::string_view token) const;
  size_t size() const { return tokens_.size(); }
  const std::string& token(size_t index) const { return tokens_.at(index); }

  const std::string& unknown() const { return unknown_; }
  const std::string& mask() const { return mask_; }
  const std::string& continuation_prefix() const { return prefix_; }
  size_t max_chars_per_word() const { return max_chars_; }

  // Indices eligible as random replacements: every token except bracketed
  // specials such as [MASK], [UNK], [CLS].
  const std::vector<size_t>& replacement_candidates() const { return candidates_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, size_t> index_;
  std::string unknown_;
  std::string mask_;
  std::string prefix_;
  size_t max_chars_;
  std::vector<size_t> candidates_;
};

VocabTable load_vocab(const std::string& path,
                      size_t max_chars_per_word = VocabTable::kDefaultMaxChars);

struct StopwordSet {
  WordSet words;
  std::unordered_set<char32_t> punctuation;

  bool is_stopword(std::string_view word) const;
  // True iff the word is non-empty and every code point is punctuation.
  bool is_punct(std::string_view word) const;
};

// Every non-whitespace code point in the punctuation file joins the set.
std::unordered_set<char32_t> load_punctuation(const std::string& path);
StopwordSet load_stopwords(const std::string& words_path,
                           const std::string& punctuation_path);

struct ResourcePaths {
  std::string objects;
  std::string attributes;
  std::string relationships;
  std::string concreteness;
  std::string vocab;
  std::string stopwords;
  std::string punctuation;
};

struct Resources {
  LexiconSet lexicons;
  ConcretenessTable concreteness;
  std::optional<VocabTable> vocab;
  StopwordSet stopwords;
};

// Loads every resource whose path is non-empty; empty paths leave the
// corresponding member empty.
Resources load_resources(const ResourcePaths& paths);

}  // namespace crossmask

#endif  // CROSSMASK_CORPUS_H_
