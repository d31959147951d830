#pragma once
// Self-contained SVG emitters for line plots and contour maps with fixed
// deterministic styling: identical inputs produce byte-identical files.

#include <filesystem>
#include <string>
#include <vector>

#include "wgf/grid.hpp"

namespace wgf {

struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

void write_line_svg(const std::filesystem::path& file, const std::string& title,
                    const std::vector<SvgSeries>& series);

// Marching-squares contours of a space-time field, time on the horizontal
// axis. Levels are spaced uniformly strictly between the field extremes.
void write_contour_svg(const std::filesystem::path& file, const std::string& title,
                       const FieldGrid& field, int levels = 11);

} // namespace wgf
