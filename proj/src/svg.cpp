#include "trendlens/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace trendlens::svg {

namespace {

constexpr double kLeft = 60.0;
constexpr double kRight = 20.0;
constexpr double kTop = 28.0;
constexpr double kBottom = 30.0;

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void settle() {
        if (!std::isfinite(lo)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo <= 0.0) {
            const double pad = std::max(std::abs(lo) * 0.05, 0.5);
            lo -= pad;
            hi += pad;
        }
    }
};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string num(double v) { return fmt::format("{:.2f}", v); }

void render_panel(std::string& out, const Panel& p, double top, double width, double height) {
    Range xr;
    Range yr;
    for (const auto& l : p.lines) {
        for (std::size_t i = 0; i < l.x.size(); ++i) {
            if (!std::isfinite(l.y[i])) continue;
            xr.add(l.x[i]);
            yr.add(l.y[i]);
        }
    }
    for (const auto& h : p.hlines) yr.add(h.y);
    for (const auto& v : p.vlines) xr.add(v.x);
    for (const auto& d : p.dots) {
        xr.add(d.x);
        yr.add(d.y);
    }
    for (const auto& iv : p.intervals) {
        xr.add(iv.x0);
        xr.add(iv.x1);
        yr.add(iv.y);
    }
    for (const auto& b : p.bars) {
        xr.add(b.x0);
        xr.add(b.x1);
        yr.add(0.0);
        yr.add(b.height);
    }
    xr.settle();
    yr.settle();

    const double x0 = kLeft;
    const double x1 = width - kRight;
    const double y0 = top + kTop;
    const double y1 = top + height - kBottom;
    const auto sx = [&](double v) { return x0 + (v - xr.lo) / (xr.hi - xr.lo) * (x1 - x0); };
    const auto sy = [&](double v) { return y1 - (v - yr.lo) / (yr.hi - yr.lo) * (y1 - y0); };

    out += fmt::format("<g>\n<text x=\"{}\" y=\"{}\" font-size=\"13\">{}</text>\n", num(x0), num(top + 18.0),
                       escape(p.title));
    out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#000\"/>\n", num(x0),
                       num(y0), num(x1 - x0), num(y1 - y0));

    for (int k = 0; k <= 4; ++k) {
        const double v = yr.lo + (yr.hi - yr.lo) * k / 4.0;
        out += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{}</text>\n", num(x0 - 4.0),
                           num(sy(v) + 3.0), fmt::format("{:.4g}", v));
    }
    std::vector<std::pair<double, std::string>> xt = p.x_ticks;
    if (xt.empty()) {
        for (int k = 0; k <= 4; ++k) {
            const double v = xr.lo + (xr.hi - xr.lo) * k / 4.0;
            xt.emplace_back(v, fmt::format("{:.4g}", v));
        }
    }
    for (const auto& [v, label] : xt) {
        if (v < xr.lo || v > xr.hi) continue;
        out += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"middle\">{}</text>\n", num(sx(v)),
                           num(y1 + 14.0), escape(label));
    }

    for (const auto& b : p.bars) {
        const double top_y = sy(std::max(b.height, 0.0));
        const double base_y = sy(std::min(b.height, 0.0));
        out += fmt::format(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" fill-opacity=\"{}\"/>\n", num(sx(b.x0)),
            num(top_y), num(sx(b.x1) - sx(b.x0)), num(base_y - top_y), b.fill, num(b.opacity));
    }
    for (const auto& l : p.lines) {
        std::string pts;
        const auto flush = [&] {
            if (pts.empty()) return;
            out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{} points=\"{}\"/>\n",
                               l.stroke, l.dashed ? " stroke-dasharray=\"4 3\"" : "", pts);
            pts.clear();
        };
        for (std::size_t i = 0; i < l.x.size(); ++i) {
            if (!std::isfinite(l.y[i])) {
                flush();
                continue;
            }
            if (!pts.empty()) pts += ' ';
            pts += num(sx(l.x[i])) + "," + num(sy(l.y[i]));
        }
        flush();
    }
    for (const auto& h : p.hlines) {
        out += fmt::format(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-dasharray=\"6 3\"/>\n", num(x0),
            num(sy(h.y)), num(x1), num(sy(h.y)), h.stroke);
    }
    for (const auto& v : p.vlines) {
        out += fmt::format(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-dasharray=\"2 2\"/>\n", num(sx(v.x)),
            num(y0), num(sx(v.x)), num(y1), v.stroke);
    }
    for (const auto& iv : p.intervals) {
        const double y = sy(iv.y);
        out += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                           num(sx(iv.x0)), num(y), num(sx(iv.x1)), num(y), iv.stroke);
    }
    for (const auto& d : p.dots) {
        out += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"3.5\" fill=\"{}\"/>\n", num(sx(d.x)), num(sy(d.y)), d.fill);
    }
    out += "</g>\n";
}

}  // namespace

std::string render(const std::vector<Panel>& panels, double width, double panel_height) {
    const double height = panel_height * static_cast<double>(std::max<std::size_t>(panels.size(), 1));
    std::string out = fmt::format(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" "
        "viewBox=\"0 0 {} {}\" font-family=\"sans-serif\">\n"
        "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n",
        num(width), num(height), num(width), num(height));
    for (std::size_t i = 0; i < panels.size(); ++i) {
        render_panel(out, panels[i], panel_height * static_cast<double>(i), width, panel_height);
    }
    out += "</svg>\n";
    return out;
}

}  // namespace trendlens::svg
