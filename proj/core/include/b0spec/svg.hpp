#pragma once

#include <string>
#include <vector>

namespace b0spec::eval {

struct Bar {
    std::string label;
    double value = 0.0;
    double err = 0.0;  ///< half-length of the error whisker; 0 draws none
    std::string group;  ///< bars sharing a group share a colour
};

std::string bar_chart_svg(const std::string& title, const std::string& y_label, const std::vector<Bar>& bars);

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Overlaid polylines; `reverse_x` draws x decreasing left to right (ppm convention).
std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<Series>& series, bool reverse_x = false);

}  // namespace b0spec::eval
