#include "sievebias/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace sievebias {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 55.0;

std::string num(double v) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.4f", v);
    return buffer;
}

std::string sci(double v) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.3g", v);
    return buffer;
}

const char* kPalette[] = {"#1f6fb2", "#c23b22", "#2e8b57", "#8b5cf6", "#b8860b", "#444444"};

}  // namespace

void write_svg_plot(const std::filesystem::path& path, const std::vector<SvgSeries>& series,
                    const SvgPlotOptions& options) {
    double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
    double y_min = x_min, y_max = -x_min;
    auto tx = [&](double x) { return options.log_x ? std::log10(x) : x; };
    auto ty = [&](double y) { return options.log_y ? std::log10(y) : y; };
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            if (options.log_x && x <= 0.0) continue;
            if (options.log_y && y <= 0.0) continue;
            x_min = std::min(x_min, tx(x));
            x_max = std::max(x_max, tx(x));
            y_min = std::min(y_min, ty(y));
            y_max = std::max(y_max, ty(y));
        }
    if (!(x_min <= x_max)) {
        x_min = 0.0;
        x_max = 1.0;
    }
    if (!(y_min <= y_max)) {
        y_min = 0.0;
        y_max = 1.0;
    }
    if (x_max - x_min < 1e-12) {
        x_min -= 0.5;
        x_max += 0.5;
    }
    if (y_max - y_min < 1e-12) {
        y_min -= 0.5;
        y_max += 0.5;
    }

    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    auto px = [&](double x) { return kMarginLeft + (tx(x) - x_min) / (x_max - x_min) * plot_w; };
    auto py = [&](double y) {
        return kHeight - kMarginBottom - (ty(y) - y_min) / (y_max - y_min) * plot_h;
    };

    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_svg_plot: cannot open " + path.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">" << options.title << "</text>\n";

    // frame and tick labels (4 ticks per axis)
    out << "<rect x=\"" << num(kMarginLeft) << "\" y=\"" << num(kMarginTop) << "\" width=\""
        << num(plot_w) << "\" height=\"" << num(plot_h)
        << "\" fill=\"none\" stroke=\"#999999\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = x_min + (x_max - x_min) * i / 4.0;
        const double fy = y_min + (y_max - y_min) * i / 4.0;
        const double label_x = options.log_x ? std::pow(10.0, fx) : fx;
        const double label_y = options.log_y ? std::pow(10.0, fy) : fy;
        const double gx = kMarginLeft + plot_w * i / 4.0;
        const double gy = kHeight - kMarginBottom - plot_h * i / 4.0;
        out << "<line x1=\"" << num(gx) << "\" y1=\"" << num(kHeight - kMarginBottom)
            << "\" x2=\"" << num(gx) << "\" y2=\"" << num(kHeight - kMarginBottom + 5)
            << "\" stroke=\"#999999\"/>\n";
        out << "<text x=\"" << num(gx) << "\" y=\"" << num(kHeight - kMarginBottom + 18)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << sci(label_x) << "</text>\n";
        out << "<line x1=\"" << num(kMarginLeft - 5) << "\" y1=\"" << num(gy) << "\" x2=\""
            << num(kMarginLeft) << "\" y2=\"" << num(gy) << "\" stroke=\"#999999\"/>\n";
        out << "<text x=\"" << num(kMarginLeft - 8) << "\" y=\"" << num(gy + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << sci(label_y) << "</text>\n";
    }
    out << "<text x=\"" << num(kMarginLeft + plot_w / 2) << "\" y=\"" << num(kHeight - 12)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << options.x_label << "</text>\n";
    out << "<text x=\"16\" y=\"" << num(kMarginTop + plot_h / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 16 " << num(kMarginTop + plot_h / 2) << ")\">"
        << options.y_label << "</text>\n";

    if (options.identity_line) {
        const double lo = std::max(x_min, y_min);
        const double hi = std::min(x_max, y_max);
        if (lo < hi) {
            const double a = options.log_x ? std::pow(10.0, lo) : lo;
            const double b = options.log_x ? std::pow(10.0, hi) : hi;
            out << "<line x1=\"" << num(px(a)) << "\" y1=\"" << num(py(a)) << "\" x2=\""
                << num(px(b)) << "\" y2=\"" << num(py(b))
                << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"5,4\"/>\n";
        }
    }

    std::size_t color_index = 0;
    double legend_y = kMarginTop + 14.0;
    for (const auto& s : series) {
        const std::string color =
            s.color.empty() ? kPalette[color_index % 6] : s.color;
        ++color_index;
        if (s.connect && s.points.size() > 1) {
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" "
                << "points=\"";
            bool first = true;
            for (const auto& [x, y] : s.points) {
                if ((options.log_x && x <= 0.0) || (options.log_y && y <= 0.0)) continue;
                if (!first) out << " ";
                out << num(px(x)) << "," << num(py(y));
                first = false;
            }
            out << "\"/>\n";
        }
        for (const auto& [x, y] : s.points) {
            if ((options.log_x && x <= 0.0) || (options.log_y && y <= 0.0)) continue;
            out << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y))
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }
        if (!s.label.empty()) {
            out << "<circle cx=\"" << num(kWidth - kMarginRight - 150) << "\" cy=\""
                << num(legend_y - 4) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
            out << "<text x=\"" << num(kWidth - kMarginRight - 140) << "\" y=\""
                << num(legend_y) << "\" font-family=\"sans-serif\" font-size=\"12\">"
                << s.label << "</text>\n";
            legend_y += 16.0;
        }
    }
    out << "</svg>\n";
}

}  // namespace sievebias
