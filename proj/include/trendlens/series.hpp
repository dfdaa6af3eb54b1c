#pragma once

#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "trendlens/ingest.hpp"
#include "trendlens/month.hpp"

namespace trendlens {

/// Gap-free month-indexed values: values[i] belongs to start + i months.
class MonthlySeries {
public:
    MonthlySeries(YearMonth start, std::vector<double> values, std::string label = {});

    YearMonth start() const { return start_; }
    YearMonth end() const { return start_ + static_cast<std::int64_t>(values_.size()) - 1; }
    YearMonth month_at(std::size_t i) const { return start_ + static_cast<std::int64_t>(i); }
    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    const std::string& label() const { return label_; }
    double operator[](std::size_t i) const { return values_[i]; }

    /// Month index relative to start, or npos-style -1 when outside.
    std::ptrdiff_t index_of(YearMonth m) const;

    MonthlySeries slice(std::size_t first, std::size_t count) const;
    MonthlySeries with_label(std::string label) const;

    /// Two-column CSV `YYYY-MM,value` with a `month,value` header.
    void write_csv(std::ostream& out) const;
    static MonthlySeries read_csv(std::istream& in, std::string label = {});

private:
    YearMonth start_;
    std::vector<double> values_;
    std::string label_;
};

/// Backward differences M(t_i) = T(t_i) - T(t_{i-1}); starts one month
/// after the source series.
class SlopeSeries {
public:
    SlopeSeries(YearMonth start, std::vector<double> values);

    YearMonth start() const { return start_; }
    YearMonth month_at(std::size_t i) const { return start_ + static_cast<std::int64_t>(i); }
    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }

private:
    YearMonth start_;
    std::vector<double> values_;
};

/// Which epoch the boundary month itself belongs to.
enum class BoundaryOwner { Later, Earlier };

struct EpochCut {
    YearMonth month;
    BoundaryOwner owner = BoundaryOwner::Later;

    /// First month of the later epoch.
    YearMonth first_after() const { return owner == BoundaryOwner::Later ? month : month + 1; }
};

struct EpochSplit {
    std::vector<EpochCut> cuts;
};

/// Prop.47 (Nov 2014, boundary month after) and Expo Line (May 2016,
/// boundary month before) cuts.
EpochCut prop47_cut();
EpochCut expo_cut();

MonthlySeries aggregate_monthly(const std::vector<IncidentRecord>& records,
                                const std::function<bool(const IncidentRecord&)>& filter,
                                YearMonth first, YearMonth last, std::string label = {});

SlopeSeries slope(const MonthlySeries& series);

std::vector<MonthlySeries> split(const MonthlySeries& series, const EpochSplit& split);

/// Inverse of split for adjacent pieces.
MonthlySeries concatenate(const std::vector<MonthlySeries>& parts);

struct Summary {
    double mean = 0.0;
    double sd = 0.0;  // n-1 denominator
    std::size_t n = 0;
};

Summary summarize(const MonthlySeries& series);
Summary summarize(const std::vector<double>& values);

}  // namespace trendlens
