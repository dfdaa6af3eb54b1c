#include "trendlens/month.hpp"

#include <charconv>

#include <fmt/format.h>

namespace trendlens {

namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
    static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return m == 2 && is_leap(y) ? 29 : kDays[m - 1];
}

}  // namespace

bool is_valid_date(const Date& d) {
    if (d.month < 1 || d.month > 12 || d.day < 1) return false;
    return d.day <= days_in_month(d.year, d.month);
}

std::optional<YearMonth> YearMonth::parse(std::string_view text) {
    if (text.size() != 7 || text[4] != '-') return std::nullopt;
    int y = 0;
    int m = 0;
    auto r1 = std::from_chars(text.data(), text.data() + 4, y);
    auto r2 = std::from_chars(text.data() + 5, text.data() + 7, m);
    if (r1.ec != std::errc{} || r1.ptr != text.data() + 4) return std::nullopt;
    if (r2.ec != std::errc{} || r2.ptr != text.data() + 7) return std::nullopt;
    if (m < 1 || m > 12) return std::nullopt;
    return YearMonth(y, m);
}

std::string YearMonth::to_string() const { return fmt::format("{:04d}-{:02d}", year(), month()); }

}  // namespace trendlens
