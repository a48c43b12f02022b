#include "beliefspace/svg.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>

#include "beliefspace/csv.hpp"

namespace beliefspace {

namespace {

constexpr double kWidth = 640.0, kHeight = 480.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 40.0, kBottom = 50.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

std::string tick_label(double v) {
    std::array<char, 48> buf{};
    const auto res =
        std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 4);
    return std::string(buf.data(), res.ptr);
}

} // namespace

void emit_plot(const PlotSpec& spec, const std::filesystem::path& path) {
    size_t total_points = 0;
    for (const auto& s : spec.series) total_points += s.points.size();
    if (spec.series.empty() || total_points == 0)
        throw DataError("cannot plot an empty table");

    double xmin = spec.series[0].points[0].first, xmax = xmin;
    double ymin = spec.series[0].points[0].second, ymax = ymin;
    for (const auto& s : spec.series) {
        for (const auto& [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y))
                throw DataError("cannot plot non-finite coordinates");
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    // Degenerate ranges get a unit of headroom so the transform is invertible.
    if (xmax == xmin) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax == ymin) {
        ymin -= 0.5;
        ymax += 0.5;
    }

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    const double sx = plot_w / (xmax - xmin);
    const double sy_mag = plot_h / (ymax - ymin);
    const double tx = kLeft - xmin * sx;
    const double ty = kTop + plot_h + ymin * sy_mag;
    auto px = [&](double x) { return tx + x * sx; };
    auto py = [&](double y) { return ty - y * sy_mag; };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
           "viewBox=\"0 0 640 480\">\n";
    svg += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
    if (!spec.title.empty())
        svg += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"16\">" +
               xml_escape(spec.title) + "</text>\n";

    // Axes.
    svg += "<line x1=\"" + format_double(kLeft) + "\" y1=\"" + format_double(kTop + plot_h) +
           "\" x2=\"" + format_double(kLeft + plot_w) + "\" y2=\"" +
           format_double(kTop + plot_h) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + format_double(kLeft) + "\" y1=\"" + format_double(kTop) + "\" x2=\"" +
           format_double(kLeft) + "\" y2=\"" + format_double(kTop + plot_h) +
           "\" stroke=\"black\"/>\n";

    for (int i = 0; i <= 4; ++i) {
        const double fx = xmin + (xmax - xmin) * i / 4.0;
        const double fy = ymin + (ymax - ymin) * i / 4.0;
        const double sxp = px(fx);
        const double syp = py(fy);
        svg += "<line x1=\"" + format_double(sxp) + "\" y1=\"" + format_double(kTop + plot_h) +
               "\" x2=\"" + format_double(sxp) + "\" y2=\"" +
               format_double(kTop + plot_h + 5.0) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + format_double(sxp) + "\" y=\"" + format_double(kTop + plot_h + 18.0) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
               tick_label(fx) + "</text>\n";
        svg += "<line x1=\"" + format_double(kLeft - 5.0) + "\" y1=\"" + format_double(syp) +
               "\" x2=\"" + format_double(kLeft) + "\" y2=\"" + format_double(syp) +
               "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + format_double(kLeft - 8.0) + "\" y=\"" + format_double(syp + 4.0) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
               tick_label(fy) + "</text>\n";
    }
    if (!spec.xlabel.empty())
        svg += "<text x=\"" + format_double(kLeft + plot_w / 2.0) + "\" y=\"" +
               format_double(kHeight - 12.0) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
               xml_escape(spec.xlabel) + "</text>\n";
    if (!spec.ylabel.empty())
        svg += "<text x=\"18\" y=\"" + format_double(kTop + plot_h / 2.0) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
               "transform=\"rotate(-90 18 " +
               format_double(kTop + plot_h / 2.0) + ")\">" + xml_escape(spec.ylabel) +
               "</text>\n";

    // Data. Line series keep raw data coordinates inside a transform group so
    // the plotted values can be read back from the file.
    size_t color = 0;
    for (const auto& s : spec.series) {
        const char* stroke = kPalette[color % (sizeof(kPalette) / sizeof(kPalette[0]))];
        ++color;
        if (spec.kind == PlotKind::Line) {
            svg += "<g transform=\"translate(" + format_double(tx) + " " + format_double(ty) +
                   ") scale(" + format_double(sx) + " " + format_double(-sy_mag) + ")\">\n";
            svg += "<polyline fill=\"none\" stroke=\"" + std::string(stroke) +
                   "\" stroke-width=\"1.5\" vector-effect=\"non-scaling-stroke\" points=\"";
            for (size_t i = 0; i < s.points.size(); ++i) {
                if (i) svg.push_back(' ');
                svg += format_double(s.points[i].first) + "," + format_double(s.points[i].second);
            }
            svg += "\"/>\n</g>\n";
        } else {
            for (const auto& [x, y] : s.points) {
                svg += "<circle cx=\"" + format_double(px(x)) + "\" cy=\"" +
                       format_double(py(y)) + "\" r=\"3\" fill=\"" + std::string(stroke) +
                       "\" fill-opacity=\"0.7\" data-x=\"" + format_double(x) + "\" data-y=\"" +
                       format_double(y) + "\"/>\n";
            }
        }
    }

    if (spec.series.size() > 1) {
        double ly = kTop + 6.0;
        for (size_t i = 0; i < spec.series.size(); ++i) {
            const char* stroke = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
            svg += "<rect x=\"" + format_double(kLeft + plot_w - 130.0) + "\" y=\"" +
                   format_double(ly) + "\" width=\"12\" height=\"12\" fill=\"" +
                   std::string(stroke) + "\"/>\n";
            svg += "<text x=\"" + format_double(kLeft + plot_w - 112.0) + "\" y=\"" +
                   format_double(ly + 10.0) + "\" font-family=\"sans-serif\" font-size=\"12\">" +
                   xml_escape(spec.series[i].label) + "</text>\n";
            ly += 18.0;
        }
    }

    svg += "</svg>\n";

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(svg.data(), static_cast<std::streamsize>(svg.size()));
    out.close();
    if (out.fail()) throw DataError("write failed for " + path.string());
}

} // namespace beliefspace
