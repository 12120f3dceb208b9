#include "b0spec/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace b0spec::eval {

namespace {

constexpr double kWidth = 720, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 110;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string header(const std::string& title) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
           "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
           "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) +
           "</text>\n";
}

std::string y_axis(double lo, double hi, const std::string& label) {
    const double h = kHeight - kTop - kBottom;
    std::string out = "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" +
                      num(kTop + h) + "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = lo + (hi - lo) * i / 4.0;
        const double y = kTop + h - h * i / 4.0;
        out += "<line x1=\"" + num(kLeft - 4) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kLeft) + "\" y2=\"" + num(y) +
               "\" stroke=\"black\"/>\n<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(y + 4) +
               "\" text-anchor=\"end\">" + tick(v) + "</text>\n";
    }
    out += "<text transform=\"translate(16," + num(kTop + h / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
           escape(label) + "</text>\n";
    return out;
}

}  // namespace

std::string bar_chart_svg(const std::string& title, const std::string& y_label, const std::vector<Bar>& bars) {
    double hi = 0.0;
    for (const auto& b : bars) hi = std::max(hi, b.value + b.err);
    if (!(hi > 0.0)) hi = 1.0;
    hi *= 1.1;
    const double w = kWidth - kLeft - kRight, h = kHeight - kTop - kBottom;
    std::string out = header(title) + y_axis(0.0, hi, y_label);
    out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + h) + "\" x2=\"" + num(kLeft + w) + "\" y2=\"" +
           num(kTop + h) + "\" stroke=\"black\"/>\n";
    std::map<std::string, std::size_t> colours;
    const double slot = bars.empty() ? w : w / static_cast<double>(bars.size());
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const Bar& b = bars[i];
        const std::size_t c = colours.emplace(b.group, colours.size()).first->second;
        const double x = kLeft + slot * static_cast<double>(i) + slot * 0.15;
        const double bh = h * std::max(0.0, b.value) / hi;
        out += "<rect x=\"" + num(x) + "\" y=\"" + num(kTop + h - bh) + "\" width=\"" + num(slot * 0.7) +
               "\" height=\"" + num(bh) + "\" fill=\"" + kPalette[c % std::size(kPalette)] + "\"/>\n";
        if (b.err > 0.0) {
            const double cx = x + slot * 0.35;
            const double y0 = kTop + h - h * std::max(0.0, b.value - b.err) / hi;
            const double y1 = kTop + h - h * (b.value + b.err) / hi;
            out += "<line x1=\"" + num(cx) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(cx) + "\" y2=\"" + num(y1) +
                   "\" stroke=\"black\"/>\n";
        }
        const double lx = x + slot * 0.35, ly = kTop + h + 10;
        out += "<text transform=\"translate(" + num(lx) + "," + num(ly) +
               ") rotate(40)\" text-anchor=\"start\">" + escape(b.label) + "</text>\n";
    }
    return out + "</svg>\n";
}

std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<Series>& series, bool reverse_x) {
    double xlo = INFINITY, xhi = -INFINITY, ylo = INFINITY, yhi = -INFINITY;
    for (const auto& s : series) {
        for (double v : s.x) xlo = std::min(xlo, v), xhi = std::max(xhi, v);
        for (double v : s.y) ylo = std::min(ylo, v), yhi = std::max(yhi, v);
    }
    if (!(xhi > xlo)) xlo = 0.0, xhi = 1.0;
    if (!(yhi > ylo)) ylo = 0.0, yhi = 1.0;
    const double pad = 0.05 * (yhi - ylo);
    ylo -= pad;
    yhi += pad;
    const double w = kWidth - kLeft - kRight, h = kHeight - kTop - kBottom;
    auto px = [&](double x) {
        const double t = (x - xlo) / (xhi - xlo);
        return kLeft + w * (reverse_x ? 1.0 - t : t);
    };
    auto py = [&](double y) { return kTop + h - h * (y - ylo) / (yhi - ylo); };
    std::string out = header(title) + y_axis(ylo, yhi, y_label);
    out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + h) + "\" x2=\"" + num(kLeft + w) + "\" y2=\"" +
           num(kTop + h) + "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = xlo + (xhi - xlo) * i / 4.0;
        out += "<text x=\"" + num(px(v)) + "\" y=\"" + num(kTop + h + 16) + "\" text-anchor=\"middle\">" + tick(v) +
               "</text>\n";
    }
    out += "<text x=\"" + num(kLeft + w / 2) + "\" y=\"" + num(kTop + h + 36) + "\" text-anchor=\"middle\">" +
           escape(x_label) + "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* colour = kPalette[k % std::size(kPalette)];
        out += "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
            out += (i ? " " : "") + num(px(s.x[i])) + "," + num(py(s.y[i]));
        out += "\"/>\n";
        const double ly = kTop + h + 56 + 14 * static_cast<double>(k);
        out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" + num(kLeft + 20) + "\" y2=\"" +
               num(ly - 4) + "\" stroke=\"" + colour + "\" stroke-width=\"2\"/>\n<text x=\"" + num(kLeft + 26) +
               "\" y=\"" + num(ly) + "\">" + escape(s.label) + "</text>\n";
    }
    return out + "</svg>\n";
}

}  // namespace b0spec::eval
