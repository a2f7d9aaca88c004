#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "clgr/common.hpp"

namespace clgr {

/// Minimal static SVG line chart: one series over an x axis, grid ticks,
/// axis labels. Good enough for curve and reward-trace figures.
inline void write_svg_line_chart(const std::string& path, const std::string& title,
                                 const std::string& x_label, const std::vector<double>& xs,
                                 const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw ConfigError("svg chart: x/y size mismatch");
    if (xs.empty()) throw ConfigError("svg chart: no data for " + title);

    const double w = 720, h = 400, ml = 64, mr = 16, mt = 36, mb = 44;
    double xmin = xs[0], xmax = xs[0], ymin = ys[0], ymax = ys[0];
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xmin = std::min(xmin, xs[i]);
        xmax = std::max(xmax, xs[i]);
        ymin = std::min(ymin, ys[i]);
        ymax = std::max(ymax, ys[i]);
    }
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) {
        ymax += 1.0;
        ymin -= 1.0;
    }
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
    auto py = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };
    auto fmt = [](double v) {
        std::ostringstream o;
        o.precision(4);
        o << v;
        return o.str();
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"14\">" << title << "</text>\n";

    for (int i = 0; i <= 4; ++i) {
        const double fy = ymin + (ymax - ymin) * i / 4.0;
        const double yy = py(fy);
        svg << "<line x1=\"" << ml << "\" y1=\"" << yy << "\" x2=\"" << w - mr << "\" y2=\"" << yy
            << "\" stroke=\"#dddddd\"/>\n";
        svg << "<text x=\"" << ml - 6 << "\" y=\"" << yy + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(fy)
            << "</text>\n";
        const double fx = xmin + (xmax - xmin) * i / 4.0;
        const double xx = px(fx);
        svg << "<text x=\"" << xx << "\" y=\"" << h - mb + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(fx)
            << "</text>\n";
    }
    svg << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 8
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << x_label
        << "</text>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << py(ymin) << "\" x2=\"" << ml << "\" y2=\""
        << py(ymax) << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\""
        << h - mb << "\" stroke=\"black\"/>\n";

    svg << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) svg << px(xs[i]) << "," << py(ys[i]) << " ";
    svg << "\"/>\n</svg>\n";

    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot open SVG for writing: " + path);
    f << svg.str();
}

}  // namespace clgr
