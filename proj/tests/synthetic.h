// Builders for hand-specified and random annotated sentences, so strategy
// tests control every flag directly instead of going through the tagger.

#ifndef CROSSMASK_TESTS_SYNTHETIC_H_
#define CROSSMASK_TESTS_SYNTHETIC_H_

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "crossmask/annotate.h"
#include "crossmask/tokenize.h"

namespace crossmask::testing {

struct Word {
  std::string text;
  size_t pieces = 1;
  bool stop = false;
  bool punct = false;
  bool object = false;
  std::optional<double> concreteness;
};

struct Sentence {
  TokenizedSentence ts;
  SentenceAnnotation annotation;
};

inline Sentence make_sentence(const std::string& id, const std::vector<Word>& words) {
  Sentence s;
  s.annotation.id = id;
  s.annotation.image_id = "img-" + id;
  for (const auto& w : words) {
    const size_t begin = s.ts.pieces.size();
    s.ts.words.push_back(w.text);
    s.ts.pieces.push_back(w.text);
    for (size_t p = 1; p < w.pieces; ++p) s.ts.pieces.push_back("##p" + std::to_string(p));
    s.ts.spans.push_back({begin, s.ts.pieces.size()});

    TokenAnnotation t;
    t.pos = w.object ? PosTag::kNoun : PosTag::kOther;
    t.stop = {w.stop, w.punct, !(w.stop || w.punct)};
    t.classes.object = w.object;
    t.concreteness = w.concreteness;
    s.annotation.words.push_back(w.text);
    s.annotation.tokens.push_back(t);
  }
  return s;
}

// Plain content words w0..w{n-1}, one piece each.
inline Sentence plain_sentence(const std::string& id, size_t n) {
  std::vector<Word> words;
  for (size_t i = 0; i < n; ++i) words.push_back({"w" + std::to_string(i)});
  return make_sentence(id, words);
}

// Random length 1..max_words, 1..4 pieces per word, random flags.
inline Sentence random_sentence(const std::string& id, std::mt19937_64& gen, size_t max_words = 20) {
  std::vector<Word> words;
  const size_t n = 1 + gen() % max_words;
  for (size_t i = 0; i < n; ++i) {
    Word w;
    w.text = "r" + std::to_string(gen() % 1000);
    w.pieces = 1 + gen() % 4;
    const auto kind = gen() % 4;
    w.stop = kind == 0;
    w.punct = kind == 1;
    w.object = kind == 2;
    if (gen() % 2) w.concreteness = 1.0 + static_cast<double>(gen() % 400) / 100.0;
    words.push_back(w);
  }
  return make_sentence(id, words);
}

// Caption lengths (words -> sentence count) for a 100-sentence corpus with a
// mean of 6.86 words, shaped like short image captions. Under per-word
// Bernoulli(0.15) its expected zero-mask rate is 0.360.
inline const std::vector<std::pair<size_t, size_t>>& caption_length_histogram() {
  static const std::vector<std::pair<size_t, size_t>> h = {
      {2, 6}, {3, 7}, {4, 7}, {5, 11}, {6, 16}, {7, 12}, {8, 12},
      {9, 10}, {10, 11}, {11, 4}, {12, 3}, {14, 1}};
  return h;
}

}  // namespace crossmask::testing

#endif  // CROSSMASK_TESTS_SYNTHETIC_H_
