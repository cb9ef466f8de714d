#pragma once

// Bare line charts: axes, tick labels, one polyline per series, and a legend.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

namespace segeval::report {

struct Series {
    std::string name;
    /// Absent y values break the line.
    std::vector<std::pair<double, std::optional<double>>> points;
};

struct ChartSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    double x_min = 0.0, x_max = 100.0;
    double y_min = 0.0, y_max = 1.0;
};

namespace detail {

inline std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                           "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

} // namespace detail

inline std::string line_chart_svg(const ChartSpec& spec, const std::vector<Series>& series) {
    constexpr double W = 640, H = 400, L = 60, R = 160, T = 40, B = 50;
    const double pw = W - L - R, ph = H - T - B;
    auto sx = [&](double x) { return L + (x - spec.x_min) / (spec.x_max - spec.x_min) * pw; };
    auto sy = [&](double y) { return T + ph - (y - spec.y_min) / (spec.y_max - spec.y_min) * ph; };
    using detail::fixed2;

    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
    s += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
    s += "<text x=\"" + fixed2(L + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" +
         detail::xml_escape(spec.title) + "</text>\n";
    s += "<line x1=\"" + fixed2(L) + "\" y1=\"" + fixed2(T + ph) + "\" x2=\"" + fixed2(L + pw) + "\" y2=\"" +
         fixed2(T + ph) + "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + fixed2(L) + "\" y1=\"" + fixed2(T) + "\" x2=\"" + fixed2(L) + "\" y2=\"" + fixed2(T + ph) +
         "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = spec.x_min + (spec.x_max - spec.x_min) * i / 4.0;
        const double yv = spec.y_min + (spec.y_max - spec.y_min) * i / 4.0;
        s += "<text x=\"" + fixed2(sx(xv)) + "\" y=\"" + fixed2(T + ph + 16) +
             "\" text-anchor=\"middle\" font-size=\"10\">" + fixed2(xv) + "</text>\n";
        s += "<text x=\"" + fixed2(L - 6) + "\" y=\"" + fixed2(sy(yv) + 3) + "\" text-anchor=\"end\" font-size=\"10\">" +
             fixed2(yv) + "</text>\n";
    }
    s += "<text x=\"" + fixed2(L + pw / 2) + "\" y=\"" + fixed2(H - 10) + "\" text-anchor=\"middle\" font-size=\"12\">" +
         detail::xml_escape(spec.x_label) + "</text>\n";
    s += "<text x=\"14\" y=\"" + fixed2(T + ph / 2) + "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 " +
         fixed2(T + ph / 2) + ")\">" + detail::xml_escape(spec.y_label) + "</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = detail::kPalette[i % std::size(detail::kPalette)];
        std::string pts;
        auto flush = [&] {
            if (!pts.empty())
                s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts +
                     "\"/>\n";
            pts.clear();
        };
        for (const auto& [x, y] : series[i].points) {
            if (!y) {
                flush();
                continue;
            }
            if (!pts.empty()) pts += ' ';
            pts += fixed2(sx(x)) + "," + fixed2(sy(*y));
        }
        flush();
        const double ly = T + 12 + 16.0 * static_cast<double>(i);
        s += "<line x1=\"" + fixed2(L + pw + 10) + "\" y1=\"" + fixed2(ly) + "\" x2=\"" + fixed2(L + pw + 30) + "\" y2=\"" +
             fixed2(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
        s += "<text x=\"" + fixed2(L + pw + 36) + "\" y=\"" + fixed2(ly + 4) + "\" font-size=\"11\">" +
             detail::xml_escape(series[i].name) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

} // namespace segeval::report
