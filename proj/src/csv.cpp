#include "scaffoldsim/csv.hpp"

#include "scaffoldsim/error.hpp"

namespace scaffoldsim::csv {

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string format_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += escape(fields[i]);
    }
    return out + "\n";
}

std::vector<Row> parse(std::string_view text) {
    std::vector<Row> rows;
    Row row;
    std::string field;
    std::size_t line = 1;
    row.line = 1;
    bool in_quotes = false, any = false;

    auto end_record = [&] {
        row.fields.push_back(std::move(field));
        field.clear();
        rows.push_back(std::move(row));
        row = Row{};
        any = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        if (!any) {
            row.line = line;
            any = true;
        }
        if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            row.fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
            continue;
        } else if (c == '\n') {
            end_record();
            ++line;
        } else {
            field += c;
        }
    }
    if (in_quotes) fail(ErrorKind::format, "unterminated quoted field starting near line " + std::to_string(row.line));
    if (any) end_record();
    return rows;
}

}  // namespace scaffoldsim::csv
