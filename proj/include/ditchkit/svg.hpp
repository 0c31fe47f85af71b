#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ditchkit::svg {

struct HeatmapOptions {
    std::string title;
    std::optional<double> vmin, vmax;   ///< colour range, data range by default
    std::optional<double> mask_below;   ///< cells below this are drawn blank
    double cell = 6.0;                  ///< pixels per cell
};

/// H x W grid (row-major) as coloured rectangles with a colour bar.
void heatmap(const std::filesystem::path& path, std::span<const double> values, std::size_t H, std::size_t W,
             const HeatmapOptions& opts = {});

struct Series {
    std::string label;
    std::vector<double> y;
};

void line_plot(const std::filesystem::path& path, const std::vector<Series>& series, const std::string& title,
               const std::string& xlabel, const std::string& ylabel);

}  // namespace ditchkit::svg
