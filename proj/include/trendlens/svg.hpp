#pragma once

#include <string>
#include <utility>
#include <vector>

namespace trendlens::svg {

/// Non-finite y values break the polyline.
struct Line {
    std::vector<double> x;
    std::vector<double> y;
    std::string stroke = "#1f77b4";
    bool dashed = false;
};

struct HLine {
    double y = 0.0;
    std::string stroke = "#d62728";
};

struct VLine {
    double x = 0.0;
    std::string stroke = "#555555";
};

struct Dot {
    double x = 0.0;
    double y = 0.0;
    std::string fill = "#d62728";
};

/// Horizontal interval drawn at height y.
struct Interval {
    double x0 = 0.0;
    double x1 = 0.0;
    double y = 0.0;
    std::string stroke = "#d62728";
};

struct Bar {
    double x0 = 0.0;
    double x1 = 0.0;
    double height = 0.0;
    std::string fill = "#1f77b4";
    double opacity = 0.5;
};

struct Panel {
    std::string title;
    std::vector<Line> lines;
    std::vector<HLine> hlines;
    std::vector<VLine> vlines;
    std::vector<Dot> dots;
    std::vector<Interval> intervals;
    std::vector<Bar> bars;
    std::vector<std::pair<double, std::string>> x_ticks;  // empty: numeric ticks
};

/// Panels stacked vertically, sharing the figure width.
std::string render(const std::vector<Panel>& panels, double width = 800.0, double panel_height = 220.0);

}  // namespace trendlens::svg
