#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "../errors.hpp"

namespace degen_kpp::io {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool dashed = false;
};

/// A line plot rendered to a self-contained SVG document. Points that are not
/// finite, or not positive on a log axis, break the polyline.
struct Plot {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    /// Axis ranges; NaN means fit to the data.
    double x_min = std::numeric_limits<double>::quiet_NaN();
    double x_max = std::numeric_limits<double>::quiet_NaN();
    double y_min = std::numeric_limits<double>::quiet_NaN();
    double y_max = std::numeric_limits<double>::quiet_NaN();
    std::vector<Series> series;

    std::string render(int width = 720, int height = 480) const;
};

namespace detail {

inline std::string fmt(double v, const char* spec = "%.6g") {
    char buf[32];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

/// Ticks at 1, 2, 5 times a power of ten covering [lo, hi].
inline std::vector<double> linear_ticks(double lo, double hi) {
    const double span = hi - lo;
    const double raw = span / 6.0;
    const double p = std::pow(10.0, std::floor(std::log10(raw)));
    double step = p;
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * p >= raw) {
            step = m * p;
            break;
        }
    std::vector<double> t;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step)
        t.push_back(std::abs(v) < 1e-12 * span ? 0.0 : v);
    return t;
}

/// Decades covering [lo, hi] (log10 values), thinned to at most 8.
inline std::vector<double> log_ticks(double lo, double hi) {
    const int a = int(std::ceil(lo - 1e-9)), b = int(std::floor(hi + 1e-9));
    const int stride = std::max(1, (b - a) / 8 + 1);
    std::vector<double> t;
    for (int k = a; k <= b; k += stride) t.push_back(k);
    return t;
}

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#17becf", "#bcbd22"};
    return colors[i % 10];
}

}  // namespace detail

inline std::string Plot::render(int width, int height) const {
    if (series.empty()) throw DomainError("plot has no series");
    auto tx = [&](double v) { return log_x ? (v > 0.0 ? std::log10(v) : NAN) : v; };
    auto ty = [&](double v) { return log_y ? (v > 0.0 ? std::log10(v) : NAN) : v; };
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double a = tx(s.x[i]), b = ty(s.y[i]);
            if (!std::isfinite(a) || !std::isfinite(b)) continue;
            x0 = std::min(x0, a), x1 = std::max(x1, a);
            y0 = std::min(y0, b), y1 = std::max(y1, b);
        }
    if (!std::isnan(x_min)) x0 = tx(x_min);
    if (!std::isnan(x_max)) x1 = tx(x_max);
    if (!std::isnan(y_min)) y0 = ty(y_min);
    if (!std::isnan(y_max)) y1 = ty(y_max);
    if (!(x1 > x0 && y1 > y0)) throw DomainError("plot range is empty");
    if (std::isnan(y_min) && std::isnan(y_max) && !log_y) {
        const double pad = 0.04 * (y1 - y0);
        y0 -= pad, y1 += pad;
    }

    const double left = 80, right = 190, top = 40, bottom = 60;
    const double pw = width - left - right, ph = height - top - bottom;
    auto px = [&](double a) { return left + (a - x0) / (x1 - x0) * pw; };
    auto py = [&](double b) { return top + (y1 - b) / (y1 - y0) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
       << detail::escape(title) << "</text>\n";
    os << "<defs><clipPath id=\"plot\"><rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw
       << "\" height=\"" << ph << "\"/></clipPath></defs>\n";

    auto label = [](double v, bool log) {
        return log ? "1e" + detail::fmt(v, "%.0f") : detail::fmt(v, "%.4g");
    };
    const auto xt = log_x ? detail::log_ticks(x0, x1) : detail::linear_ticks(x0, x1);
    const auto yt = log_y ? detail::log_ticks(y0, y1) : detail::linear_ticks(y0, y1);
    for (double v : xt) {
        const double p = px(v);
        os << "<line x1=\"" << detail::fmt(p) << "\" y1=\"" << top << "\" x2=\"" << detail::fmt(p)
           << "\" y2=\"" << top + ph << "\" stroke=\"#e5e5e5\"/>\n";
        os << "<text x=\"" << detail::fmt(p) << "\" y=\"" << top + ph + 16
           << "\" text-anchor=\"middle\">" << label(v, log_x) << "</text>\n";
    }
    for (double v : yt) {
        const double p = py(v);
        os << "<line x1=\"" << left << "\" y1=\"" << detail::fmt(p) << "\" x2=\"" << left + pw
           << "\" y2=\"" << detail::fmt(p) << "\" stroke=\"#e5e5e5\"/>\n";
        os << "<text x=\"" << left - 6 << "\" y=\"" << detail::fmt(p + 4)
           << "\" text-anchor=\"end\">" << label(v, log_y) << "</text>\n";
    }
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 18 << "\" text-anchor=\"middle\">"
       << detail::escape(x_label) << "</text>\n";
    os << "<text x=\"18\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
       << top + ph / 2 << ")\">" << detail::escape(y_label) << "</text>\n";

    os << "<g clip-path=\"url(#plot)\" fill=\"none\" stroke-width=\"1.6\">\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        std::string path;
        bool pen = false;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double a = tx(s.x[i]), b = ty(s.y[i]);
            if (!std::isfinite(a) || !std::isfinite(b)) {
                pen = false;
                continue;
            }
            path += (pen ? " L" : " M") + detail::fmt(px(a), "%.2f") + ',' + detail::fmt(py(b), "%.2f");
            pen = true;
        }
        os << "<path d=\"" << path << "\" stroke=\"" << detail::palette(k) << '"'
           << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
    }
    os << "</g>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const double y = top + 10 + 18.0 * double(k);
        const double x = left + pw + 12;
        os << "<line x1=\"" << x << "\" y1=\"" << y << "\" x2=\"" << x + 24 << "\" y2=\"" << y
           << "\" stroke=\"" << detail::palette(k) << "\" stroke-width=\"2\""
           << (series[k].dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
        os << "<text x=\"" << x + 30 << "\" y=\"" << y + 4 << "\">" << detail::escape(series[k].label)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace degen_kpp::io
