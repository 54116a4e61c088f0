#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "autocenet/volume.hpp"

namespace autocenet {

/// 8-bit grayscale raster, row-major.
struct GrayImage {
    std::size_t width = 0, height = 0;
    std::vector<std::uint8_t> pixels;
};

/// 8-bit RGB raster, row-major, interleaved.
struct RgbImage {
    std::size_t width = 0, height = 0;
    std::vector<std::uint8_t> pixels;

    RgbImage() = default;
    RgbImage(std::size_t w, std::size_t h, std::array<std::uint8_t, 3> fill = {255, 255, 255});
    void set(long x, long y, std::array<std::uint8_t, 3> color);
};

/// Axial slice z of a normalized volume; values are clamped to [0, 1].
GrayImage axial_slice(const Volume& volume, std::size_t z);
/// Axial slice z of a label: foreground white.
GrayImage axial_slice(const LabelVolume& label, std::size_t z);
/// Image slice with the label's contour drawn at full intensity.
GrayImage overlay_slice(const Volume& volume, const LabelVolume& label, std::size_t z);

std::vector<std::uint8_t> encode_pgm(const GrayImage& image);
std::vector<std::uint8_t> encode_ppm(const RgbImage& image);
void write_pgm(const GrayImage& image, const std::filesystem::path& path);
void write_ppm(const RgbImage& image, const std::filesystem::path& path);

struct PlotSeries {
    std::vector<double> x, y;
    /// Optional symmetric error bars, same length as y.
    std::vector<double> error;
    std::array<std::uint8_t, 3> color{200, 30, 30};
};

/// Line plot with markers, error bars, axes and tick marks. Axis ranges are
/// the data extent (with error bars) padded by 5%.
RgbImage render_line_plot(const std::vector<PlotSeries>& series, std::size_t width = 480, std::size_t height = 360);

}  // namespace autocenet
