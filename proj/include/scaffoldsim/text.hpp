#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace scaffoldsim::text {

enum class LengthUnit { characters, words, automatic };

const char* to_string(LengthUnit unit) noexcept;
LengthUnit parse_length_unit(std::string_view name);

/// Decodes UTF-8 leniently; malformed bytes decode as U+FFFD.
std::vector<char32_t> decode_utf8(std::string_view s);

bool is_cjk(char32_t cp) noexcept;

/// True when CJK codepoints outnumber other non-space codepoints.
bool cjk_dominant(std::string_view s);

/// Resolves `automatic` to characters or words for this particular string.
LengthUnit resolve_unit(LengthUnit unit, std::string_view s);

std::size_t count_units(std::string_view s, LengthUnit unit);

struct Truncation {
    std::string text;
    bool truncated = false;
};

/// Cuts `s` to at most `cap` units, preferring the last sentence boundary that fits.
/// Falls back to a word (or character) boundary when even the first sentence is too long.
Truncation truncate_to_units(std::string_view s, std::size_t cap, LengthUnit unit);

std::string to_lower_ascii(std::string_view s);

/// Lower-cased alphanumeric tokens; apostrophes and hyphens inside words are kept.
std::vector<std::string> tokenize(std::string_view s);

/// Tokens of length >= 4 that are not stopwords.
std::vector<std::string> content_words(std::string_view s);

bool is_stopword(std::string_view word);

/// Case-insensitive (ASCII) substring test.
bool contains_phrase(std::string_view haystack, std::string_view needle);

std::set<std::string> trigrams(const std::vector<std::string>& tokens);

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string trim(std::string_view s);

/// First sentence of `s`, stripped of its terminator, at most `max_chars` bytes (cut on a space).
std::string first_sentence(std::string_view s, std::size_t max_chars = 80);

std::string replace_all(std::string s, std::string_view from, std::string_view to);

}  // namespace scaffoldsim::text
