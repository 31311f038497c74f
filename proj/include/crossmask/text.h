// Small UTF-8 and ASCII string helpers shared by the loaders and tokenizer.

#ifndef CROSSMASK_TEXT_H_
#define CROSSMASK_TEXT_H_

#include <string>
#include <string_view>
#include <vector>

namespace crossmask::text {

// Invalid byte sequences decode to U+FFFD, one per offending byte.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(char32_t cp);
std::string encode_utf8(std::u32string_view s);

size_t count_code_points(std::string_view s);

// ASCII-only case folding; non-ASCII bytes are copied through.
std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);

bool is_whitespace(char32_t c);
// The ASCII ranges !-/ :-@ [-` {-~.
bool is_ascii_punct(char32_t c);
// ASCII punctuation plus the Latin-1, General Punctuation and CJK symbol
// ranges that subword pre-tokenizers split off.
bool is_punctuation(char32_t c);

bool ends_with(std::string_view s, std::string_view suffix);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace crossmask::text

#endif  // CROSSMASK_TEXT_H_
