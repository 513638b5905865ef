#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace sievebias {

struct SvgSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
    std::string color = "#1f6fb2";
    bool connect = true;
};

struct SvgPlotOptions {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    bool identity_line = false;  // y = x reference, for bound-vs-actual plots
};

// Small static SVG writer; byte-deterministic for identical inputs.
void write_svg_plot(const std::filesystem::path& path, const std::vector<SvgSeries>& series,
                    const SvgPlotOptions& options);

}  // namespace sievebias
