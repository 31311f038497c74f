#include "crossmask/tokenize.h"

#include "crossmask/text.h"

namespace crossmask {

std::vector<std::string> pre_tokenize(std::string_view input) {
  std::vector<std::string> words;
  std::u32string current;
  auto flush = [&] {
    if (!current.empty()) {
      words.push_back(text::encode_utf8(current));
      current.clear();
    }
  };
  for (char32_t c : text::decode_utf8(input)) {
    if (text::is_whitespace(c) || c == 0 || c == 0xFFFD) {
      flush();
    } else if (text::is_punctuation(c)) {
      flush();
      words.push_back(text::encode_utf8(c));
    } else {
      current.push_back(c);
    }
  }
  flush();
  return words;
}

std::vector<std::string> wordpiece(std::string_view word, const VocabTable& vocab) {
  const std::u32string chars = text::decode_utf8(text::to_lower(word));
  if (chars.empty() || chars.size() > vocab.max_chars_per_word()) return {vocab.unknown()};

  std::vector<std::string> pieces;
  size_t start = 0;
  while (start < chars.size()) {
    size_t end = chars.size();
    std::string match;
    while (start < end) {
      std::string candidate = text::encode_utf8(std::u32string_view(chars).substr(start, end - start));
      if (start > 0) candidate = vocab.continuation_prefix() + candidate;
      if (vocab.contains(candidate)) {
        match = std::move(candidate);
        break;
      }
      --end;
    }
    if (match.empty()) return {vocab.unknown()};
    pieces.push_back(std::move(match));
    start = end;
  }
  return pieces;
}

TokenizedSentence tokenize_words(std::span<const std::string> words, const VocabTable& vocab) {
  TokenizedSentence ts;
  ts.words.assign(words.begin(), words.end());
  ts.spans.reserve(words.size());
  for (const auto& w : words) {
    const size_t begin = ts.pieces.size();
    for (auto& p : wordpiece(w, vocab)) ts.pieces.push_back(std::move(p));
    ts.spans.push_back({begin, ts.pieces.size()});
  }
  return ts;
}

TokenizedSentence wordpiece_tokenize(std::string_view text, const VocabTable& vocab) {
  const auto words = pre_tokenize(text);
  return tokenize_words(words, vocab);
}

bool has_valid_spans(const TokenizedSentence& ts) {
  if (ts.spans.size() != ts.words.size()) return false;
  size_t expected = 0;
  for (const auto& s : ts.spans) {
    if (s.begin != expected || s.end <= s.begin) return false;
    expected = s.end;
  }
  return expected == ts.pieces.size();
}

}  // namespace crossmask
