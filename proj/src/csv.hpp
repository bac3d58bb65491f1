#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace crowdsched::csv {

/// Reads one record, honouring double-quoted fields (which may span lines).
/// Returns nothing at end of input.
inline auto read_record(std::istream& in, char delimiter) -> std::optional<std::vector<std::string>>
{
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool any = false;
    char c = 0;
    while (in.get(c)) {
        any = true;
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == delimiter) {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            break;
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    if (!any) {
        return std::nullopt;
    }
    fields.push_back(std::move(field));
    return fields;
}

inline auto escape(const std::string& value, char delimiter) -> std::string
{
    if (value.find_first_of(std::string{delimiter, '"', '\n', '\r'}) == std::string::npos) {
        return value;
    }
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') {
            out += "\"\"";
        } else {
            out.push_back(c);
        }
    }
    out.push_back('"');
    return out;
}

inline void write_record(std::ostream& out, const std::vector<std::string>& fields, char delimiter)
{
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) {
            out << delimiter;
        }
        out << escape(fields[i], delimiter);
    }
    out << '\n';
}

} // namespace crowdsched::csv
