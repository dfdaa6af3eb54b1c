#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trendlens::csv {

/// Streaming RFC-4180 reader. Quoted fields may contain commas, doubled
/// quotes and line breaks. A trailing CR before LF is dropped.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    /// Next record, or nullopt at end of input. Sets `malformed()` when the
    /// record had an unterminated quote.
    std::optional<std::vector<std::string>> next();

    bool malformed() const { return malformed_; }

private:
    std::istream& in_;
    bool malformed_ = false;
};

/// Quotes a field if it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);

/// Joins fields with commas, escaping each one, and appends CRLF-free "\n".
std::string row(const std::vector<std::string>& fields);

}  // namespace trendlens::csv
