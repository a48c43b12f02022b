#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "beliefspace/errors.hpp"

namespace beliefspace {

enum class PlotKind { Line, Scatter };

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

struct PlotSpec {
    PlotKind kind = PlotKind::Line;
    std::string title;
    std::string xlabel;
    std::string ylabel;
    std::vector<Series> series;
};

// Standalone SVG with axes, tick labels and the data series: one polyline per
// line series, circles for scatter. Byte-deterministic for identical input.
// An empty table is a data error.
void emit_plot(const PlotSpec& spec, const std::filesystem::path& path);

} // namespace beliefspace
