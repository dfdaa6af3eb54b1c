#include "trendlens/series.hpp"

#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "trendlens/csv.hpp"
#include "trendlens/error.hpp"

namespace trendlens {

MonthlySeries::MonthlySeries(YearMonth start, std::vector<double> values, std::string label)
    : start_(start), values_(std::move(values)), label_(std::move(label)) {
    if (values_.empty()) throw DataError("monthly series must hold at least one month");
    for (double v : values_) {
        if (!std::isfinite(v)) throw DataError("monthly series values must be finite");
    }
}

std::ptrdiff_t MonthlySeries::index_of(YearMonth m) const {
    const auto d = m - start_;
    return d >= 0 && d < static_cast<std::int64_t>(values_.size()) ? static_cast<std::ptrdiff_t>(d) : -1;
}

MonthlySeries MonthlySeries::slice(std::size_t first, std::size_t count) const {
    if (first + count > values_.size() || count == 0) throw DataError("series slice out of range");
    return MonthlySeries(month_at(first), {values_.begin() + first, values_.begin() + first + count}, label_);
}

MonthlySeries MonthlySeries::with_label(std::string label) const { return MonthlySeries(start_, values_, std::move(label)); }

void MonthlySeries::write_csv(std::ostream& out) const {
    out << "month,value\n";
    for (std::size_t i = 0; i < values_.size(); ++i) {
        out << month_at(i).to_string() << ',' << fmt::format("{}", values_[i]) << '\n';
    }
}

MonthlySeries MonthlySeries::read_csv(std::istream& in, std::string label) {
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header || header->size() != 2) throw DataError("series CSV needs a two-column header");
    std::vector<double> values;
    std::optional<YearMonth> start;
    while (auto f = reader.next()) {
        if (f->size() != 2) throw DataError("series CSV row must have two columns");
        auto m = YearMonth::parse((*f)[0]);
        double v = 0.0;
        const auto& s = (*f)[1];
        auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (!m || res.ec != std::errc{}) throw DataError(fmt::format("bad series row '{},{}'", (*f)[0], s));
        if (!start) start = *m;
        if (*m - *start != static_cast<std::int64_t>(values.size())) {
            throw DataError(fmt::format("series CSV has a gap or is out of order at {}", (*f)[0]));
        }
        values.push_back(v);
    }
    if (!start) throw DataError("series CSV has no rows");
    return MonthlySeries(*start, std::move(values), std::move(label));
}

SlopeSeries::SlopeSeries(YearMonth start, std::vector<double> values) : start_(start), values_(std::move(values)) {}

EpochCut prop47_cut() { return {YearMonth(2014, 11), BoundaryOwner::Later}; }
EpochCut expo_cut() { return {YearMonth(2016, 5), BoundaryOwner::Earlier}; }

MonthlySeries aggregate_monthly(const std::vector<IncidentRecord>& records,
                                const std::function<bool(const IncidentRecord&)>& filter, YearMonth first,
                                YearMonth last, std::string label) {
    if (last < first) throw ConfigError("aggregation window is empty");
    std::vector<double> counts(static_cast<std::size_t>(last - first + 1), 0.0);
    for (const auto& r : records) {
        if (filter && !filter(r)) continue;
        const auto d = YearMonth::of(r.occurred_on) - first;
        if (d < 0 || d >= static_cast<std::int64_t>(counts.size())) continue;
        counts[static_cast<std::size_t>(d)] += 1.0;
    }
    return MonthlySeries(first, std::move(counts), std::move(label));
}

SlopeSeries slope(const MonthlySeries& series) {
    if (series.size() < 2) throw DataError("slope needs at least two months");
    std::vector<double> out(series.size() - 1);
    for (std::size_t i = 0; i + 1 < series.size(); ++i) out[i] = series[i + 1] - series[i];
    return SlopeSeries(series.start() + 1, std::move(out));
}

std::vector<MonthlySeries> split(const MonthlySeries& series, const EpochSplit& split) {
    std::vector<std::size_t> cuts;
    for (const auto& c : split.cuts) {
        const auto d = c.first_after() - series.start();
        if (d <= 0 || d >= static_cast<std::int64_t>(series.size())) {
            throw ConfigError(fmt::format("epoch cut {} is not inside the series span", c.month.to_string()));
        }
        if (!cuts.empty() && static_cast<std::size_t>(d) <= cuts.back()) {
            throw ConfigError("epoch cuts must be strictly increasing");
        }
        cuts.push_back(static_cast<std::size_t>(d));
    }
    std::vector<MonthlySeries> out;
    std::size_t begin = 0;
    for (auto c : cuts) {
        out.push_back(series.slice(begin, c - begin));
        begin = c;
    }
    out.push_back(series.slice(begin, series.size() - begin));
    return out;
}

MonthlySeries concatenate(const std::vector<MonthlySeries>& parts) {
    if (parts.empty()) throw DataError("nothing to concatenate");
    std::vector<double> values;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i && parts[i].start() != parts[i - 1].end() + 1) throw DataError("series pieces are not adjacent");
        values.insert(values.end(), parts[i].values().begin(), parts[i].values().end());
    }
    return MonthlySeries(parts.front().start(), std::move(values), parts.front().label());
}

Summary summarize(const std::vector<double>& values) {
    Summary s;
    s.n = values.size();
    if (s.n == 0) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(s.n);
    if (s.n >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
    }
    return s;
}

Summary summarize(const MonthlySeries& series) { return summarize(series.values()); }

}  // namespace trendlens
