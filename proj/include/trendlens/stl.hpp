#pragma once

#include <optional>
#include <ostream>
#include <vector>

#include "trendlens/series.hpp"

namespace trendlens {

/// Seasonal smoothing span: either periodic (each cycle-subseries collapses
/// to its weighted mean) or an odd number of cycles.
class SeasonalWindow {
public:
    static SeasonalWindow periodic() { return SeasonalWindow(); }
    static SeasonalWindow span(int cycles) { return SeasonalWindow(cycles); }

    bool is_periodic() const { return !span_; }
    int cycles() const { return span_.value_or(0); }

private:
    SeasonalWindow() = default;
    explicit SeasonalWindow(int cycles) : span_(cycles) {}
    std::optional<int> span_;
};

struct StlConfig {
    int period = 12;
    SeasonalWindow seasonal_window = SeasonalWindow::periodic();
    std::optional<int> trend_window;    // nullopt: auto_trend_window
    std::optional<int> lowpass_window;  // nullopt: next odd >= period
    int inner_iterations = 2;
    int outer_iterations = 0;  // 0 = non-robust

    int seasonal_degree() const { return seasonal_window.is_periodic() ? 0 : 1; }
    int resolved_trend_window() const;
    int resolved_lowpass_window() const;

    /// Throws ConfigError when a window is even or < 3, the period < 2 or an
    /// iteration count is negative.
    void validate() const;
};

struct Decomposition {
    MonthlySeries trend;
    MonthlySeries seasonal;
    MonthlySeries remainder;
    std::vector<double> robustness_weights;

    /// `month,trend,seasonal,remainder`
    void write_csv(std::ostream& out) const;
};

/// Smallest odd integer >= x.
int next_odd(double x);

/// NextOdd(Ceiling(1.5 n_p / (1 - 1.5 / s))); periodic windows use s -> inf.
int auto_trend_window(int period, SeasonalWindow seasonal_window);

/// Additive seasonal-trend decomposition by loess.
Decomposition stl_decompose(const MonthlySeries& series, const StlConfig& config);

}  // namespace trendlens
