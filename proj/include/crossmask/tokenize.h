// WordPiece tokenization that keeps the word -> piece mapping, so masking can
// act on whole words.

#ifndef CROSSMASK_TOKENIZE_H_
#define CROSSMASK_TOKENIZE_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crossmask/corpus.h"

namespace crossmask {

// Half-open piece range [begin, end) covered by one word.
struct PieceSpan {
  size_t begin = 0;
  size_t end = 0;

  size_t width() const { return end - begin; }
  bool operator==(const PieceSpan&) const = default;
};

struct TokenizedSentence {
  std::vector<std::string> words;   // original casing
  std::vector<std::string> pieces;  // lowercased subword pieces
  std::vector<PieceSpan> spans;     // one per word

  bool operator==(const TokenizedSentence&) const = default;
};

// Whitespace split, then every punctuation character becomes its own word.
std::vector<std::string> pre_tokenize(std::string_view text);

// Greedy longest-prefix decomposition of one word. Words longer than the
// vocabulary's character limit, or with no full decomposition, map to the
// single unknown token.
std::vector<std::string> wordpiece(std::string_view word, const VocabTable& vocab);

TokenizedSentence wordpiece_tokenize(std::string_view text, const VocabTable& vocab);
// For records that arrive pre-split: each word is decomposed as-is.
TokenizedSentence tokenize_words(std::span<const std::string> words, const VocabTable& vocab);

inline const std::vector<PieceSpan>& word_spans(const TokenizedSentence& ts) { return ts.spans; }

// Spans contiguous, ordered, non-empty and exactly covering `pieces`.
bool has_valid_spans(const TokenizedSentence& ts);

}  // namespace crossmask

#endif  // CROSSMASK_TOKENIZE_H_
