#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace trendlens {

struct Date {
    int year = 0;
    int month = 0;  // 1..12
    int day = 0;    // 1..31

    auto operator<=>(const Date&) const = default;
};

bool is_valid_date(const Date& d);

/// Calendar month; arithmetic is in whole months.
class YearMonth {
public:
    constexpr YearMonth() = default;
    constexpr YearMonth(int year, int month) : index_(year * 12 + (month - 1)) {}

    static constexpr YearMonth from_index(std::int64_t index) {
        YearMonth ym;
        ym.index_ = index;
        return ym;
    }
    static YearMonth of(const Date& d) { return YearMonth(d.year, d.month); }

    /// Parses `YYYY-MM`.
    static std::optional<YearMonth> parse(std::string_view text);

    constexpr int year() const {
        return static_cast<int>(index_ >= 0 ? index_ / 12 : (index_ - 11) / 12);
    }
    constexpr int month() const { return static_cast<int>(index_ - std::int64_t{year()} * 12) + 1; }
    constexpr std::int64_t index() const { return index_; }

    constexpr YearMonth operator+(std::int64_t months) const { return from_index(index_ + months); }
    constexpr YearMonth operator-(std::int64_t months) const { return from_index(index_ - months); }
    constexpr std::int64_t operator-(const YearMonth& other) const { return index_ - other.index_; }

    constexpr auto operator<=>(const YearMonth&) const = default;

    /// `YYYY-MM`
    std::string to_string() const;

private:
    std::int64_t index_ = 0;
};

}  // namespace trendlens
