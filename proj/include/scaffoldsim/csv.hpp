#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace scaffoldsim::csv {

/// Quotes a field when it holds a comma, quote, or line break (RFC 4180).
std::string escape(std::string_view field);

/// One record terminated by "\n".
std::string format_row(const std::vector<std::string>& fields);

struct Row {
    /// 1-based line on which the record starts.
    std::size_t line = 0;
    std::vector<std::string> fields;
};

/// Parses RFC 4180 text (LF or CRLF). Throws Error(format) on an unterminated quote.
std::vector<Row> parse(std::string_view text);

}  // namespace scaffoldsim::csv
