#include "trendlens/csv.hpp"

namespace trendlens::csv {

std::optional<std::vector<std::string>> Reader::next() {
    malformed_ = false;
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool any = false;
    bool after_quote = false;

    int ch;
    while ((ch = in_.get()) != std::char_traits<char>::eof()) {
        any = true;
        const char c = static_cast<char>(ch);
        if (in_quotes) {
            if (c == '"') {
                if (in_.peek() == '"') {
                    in_.get();
                    field.push_back('"');
                } else {
                    in_quotes = false;
                    after_quote = true;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && field.empty() && !after_quote) {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            after_quote = false;
        } else if (c == '\n') {
            if (!field.empty() && field.back() == '\r' && !after_quote) field.pop_back();
            fields.push_back(std::move(field));
            return fields;
        } else if (c == '\r' && after_quote) {
            // CR after a closing quote belongs to the line ending
        } else {
            field.push_back(c);
        }
    }
    if (!any) return std::nullopt;
    if (in_quotes) malformed_ = true;
    fields.push_back(std::move(field));
    return fields;
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += escape(fields[i]);
    }
    out.push_back('\n');
    return out;
}

}  // namespace trendlens::csv
