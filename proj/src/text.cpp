#include "scaffoldsim/text.hpp"

#include <algorithm>
#include <iterator>
#include <cctype>

#include "scaffoldsim/error.hpp"

namespace scaffoldsim::text {

const char* to_string(LengthUnit unit) noexcept {
    switch (unit) {
        case LengthUnit::characters: return "characters";
        case LengthUnit::words: return "words";
        case LengthUnit::automatic: return "auto";
    }
    return "auto";
}

LengthUnit parse_length_unit(std::string_view name) {
    if (name == "characters" || name == "chars") return LengthUnit::characters;
    if (name == "words") return LengthUnit::words;
    if (name == "auto" || name == "automatic") return LengthUnit::automatic;
    fail(ErrorKind::invalid_argument, "unknown length unit '" + std::string(name) + "'");
}

std::vector<char32_t> decode_utf8(std::string_view s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = 0;
        char32_t cp = 0;
        if (c < 0x80) {
            len = 1;
            cp = c;
        } else if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        }
        if (len == 0 || i + len > s.size()) {
            out.push_back(0xFFFD);
            ++i;
            continue;
        }
        bool ok = true;
        for (std::size_t k = 1; k < len; ++k) {
            auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xC0) != 0x80) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (cc & 0x3F);
        }
        if (!ok) {
            out.push_back(0xFFFD);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

bool is_cjk(char32_t cp) noexcept {
    return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
           (cp >= 0xF900 && cp <= 0xFAFF) || (cp >= 0x20000 && cp <= 0x2A6DF) ||
           (cp >= 0x3000 && cp <= 0x303F) || (cp >= 0xFF00 && cp <= 0xFFEF);
}

namespace {

bool is_space_cp(char32_t cp) noexcept {
    return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v' ||
           cp == 0x3000 || cp == 0xA0;
}

bool is_sentence_end(char32_t cp) noexcept {
    return cp == '.' || cp == '!' || cp == '?' || cp == 0x3002 || cp == 0xFF01 || cp == 0xFF1F;
}

std::string encode_utf8(const std::vector<char32_t>& cps, std::size_t begin, std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end; ++i) {
        char32_t cp = cps[i];
        if (cp < 0x80) {
            out += static_cast<char>(cp);
        } else if (cp < 0x800) {
            out += static_cast<char>(0xC0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else if (cp < 0x10000) {
            out += static_cast<char>(0xE0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else {
            out += static_cast<char>(0xF0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        }
    }
    return out;
}

// Units contained in cps[0, end).
std::size_t units_in_prefix(const std::vector<char32_t>& cps, std::size_t end, LengthUnit unit) {
    std::size_t n = 0;
    if (unit == LengthUnit::characters) {
        for (std::size_t i = 0; i < end; ++i)
            if (!is_space_cp(cps[i])) ++n;
        return n;
    }
    bool in_word = false;
    for (std::size_t i = 0; i < end; ++i) {
        if (is_space_cp(cps[i])) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

constexpr std::string_view kStopwords[] = {
    "about", "above", "after", "again", "against", "also", "among", "because", "been", "before",
    "being", "below", "between", "both", "could", "does", "doing", "down", "during", "each",
    "even", "every", "everyone", "from", "further", "have", "having", "here", "into", "just",
    "like", "made", "make", "many", "more", "most", "much", "must", "only", "other", "ours",
    "over", "really", "same", "shall", "should", "some", "such", "than", "that", "their",
    "them", "then", "there", "these", "they", "thing", "things", "think", "this", "those",
    "through", "under", "until", "upon", "very", "want", "were", "what", "when", "where",
    "which", "while", "will", "with", "within", "without", "would", "your", "yours", "agree",
    "point", "points", "question", "questions", "discussion", "statement", "meant", "issue",
    "next", "let's", "move", "covered", "thoughts", "please",
};

}  // namespace

bool cjk_dominant(std::string_view s) {
    std::size_t cjk = 0, other = 0;
    for (char32_t cp : decode_utf8(s)) {
        if (is_space_cp(cp)) continue;
        if (is_cjk(cp))
            ++cjk;
        else
            ++other;
    }
    return cjk > other;
}

LengthUnit resolve_unit(LengthUnit unit, std::string_view s) {
    if (unit != LengthUnit::automatic) return unit;
    return cjk_dominant(s) ? LengthUnit::characters : LengthUnit::words;
}

std::size_t count_units(std::string_view s, LengthUnit unit) {
    auto cps = decode_utf8(s);
    return units_in_prefix(cps, cps.size(), resolve_unit(unit, s));
}

Truncation truncate_to_units(std::string_view s, std::size_t cap, LengthUnit unit) {
    unit = resolve_unit(unit, s);
    auto cps = decode_utf8(s);
    if (units_in_prefix(cps, cps.size(), unit) <= cap) return {std::string(s), false};

    // Longest prefix ending at a sentence terminator that fits.
    std::size_t best = 0;
    for (std::size_t i = 0; i < cps.size(); ++i) {
        if (!is_sentence_end(cps[i])) continue;
        std::size_t end = i + 1;
        while (end < cps.size() && is_sentence_end(cps[end])) ++end;
        if (end < cps.size() && !is_space_cp(cps[end]) && cps[i] == '.') continue;  // "3.5", "e.g"
        if (units_in_prefix(cps, end, unit) > cap) break;
        best = end;
    }
    if (best == 0) {
        // No sentence fits: cut on the last unit boundary that fits.
        std::size_t end = 0;
        if (unit == LengthUnit::words) {
            for (std::size_t i = 0; i <= cps.size(); ++i) {
                bool boundary = i == cps.size() || is_space_cp(cps[i]);
                if (!boundary) continue;
                if (units_in_prefix(cps, i, unit) > cap) break;
                end = i;
            }
        } else {
            std::size_t n = 0;
            for (std::size_t i = 0; i < cps.size(); ++i) {
                if (!is_space_cp(cps[i]) && ++n > cap) break;
                end = i + 1;
            }
        }
        best = end;
    }
    return {trim(encode_utf8(cps, 0, best)), true};
}

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        while (!cur.empty() && (cur.back() == '\'' || cur.back() == '-')) cur.pop_back();
        if (!cur.empty()) tokens.push_back(std::move(cur));
        cur.clear();
    };
    for (char ch : s) {
        auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c >= 0x80) {
            cur += static_cast<char>(std::tolower(c));
        } else if ((c == '\'' || c == '-') && !cur.empty()) {
            cur += static_cast<char>(c);
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

bool is_stopword(std::string_view word) {
    return std::find(std::begin(kStopwords), std::end(kStopwords), word) != std::end(kStopwords);
}

std::vector<std::string> content_words(std::string_view s) {
    std::vector<std::string> out;
    for (auto& t : tokenize(s))
        if (t.size() >= 4 && !is_stopword(t)) out.push_back(std::move(t));
    return out;
}

bool contains_phrase(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return false;
    return to_lower_ascii(haystack).find(to_lower_ascii(needle)) != std::string::npos;
}

std::set<std::string> trigrams(const std::vector<std::string>& tokens) {
    std::set<std::string> out;
    for (std::size_t i = 0; i + 2 < tokens.size(); ++i)
        out.insert(tokens[i] + ' ' + tokens[i + 1] + ' ' + tokens[i + 2]);
    return out;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& x : a)
        if (b.count(x)) ++inter;
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string first_sentence(std::string_view s, std::size_t max_chars) {
    std::string t = trim(s);
    auto pos = t.find_first_of(".!?");
    if (pos != std::string::npos) t = t.substr(0, pos);
    if (t.size() > max_chars) {
        auto cut = t.rfind(' ', max_chars);
        t = t.substr(0, cut == std::string::npos ? max_chars : cut);
    }
    return trim(t);
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    if (from.empty()) return s;
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
    return s;
}

}  // namespace scaffoldsim::text
