#include "autocenet/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "autocenet/data.hpp"
#include "autocenet/detail/le_bytes.hpp"

namespace autocenet {

RgbImage::RgbImage(std::size_t w, std::size_t h, std::array<std::uint8_t, 3> fill) : width(w), height(h) {
    pixels.resize(w * h * 3);
    for (std::size_t i = 0; i < w * h; ++i) std::copy(fill.begin(), fill.end(), pixels.begin() + 3 * i);
}

void RgbImage::set(long x, long y, std::array<std::uint8_t, 3> color) {
    if (x < 0 || y < 0 || x >= static_cast<long>(width) || y >= static_cast<long>(height)) return;
    std::copy(color.begin(), color.end(), pixels.begin() + 3 * (static_cast<std::size_t>(y) * width + x));
}

namespace {

template <typename V, typename F>
GrayImage slice_of(const Grid<V>& grid, std::size_t z, F&& to_gray) {
    const auto& d = grid.dims();
    if (z >= d[2]) throw DimensionError("slice index " + std::to_string(z) + " outside the volume");
    GrayImage img{d[0], d[1], {}};
    img.pixels.resize(d[0] * d[1]);
    for (std::size_t y = 0; y < d[1]; ++y) {
        for (std::size_t x = 0; x < d[0]; ++x) img.pixels[y * d[0] + x] = to_gray(grid.at(x, y, z));
    }
    return img;
}

std::vector<std::uint8_t> netpbm(const char* magic, std::size_t w, std::size_t h,
                                 const std::vector<std::uint8_t>& pixels) {
    const std::string header = std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), pixels.begin(), pixels.end());
    return out;
}

void line(RgbImage& img, long x0, long y0, long x1, long y1, std::array<std::uint8_t, 3> c) {
    const long dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const long sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    long err = dx + dy;
    while (true) {
        img.set(x0, y0, c);
        if (x0 == x1 && y0 == y1) break;
        const long e2 = 2 * err;
        if (e2 >= dy) { err += dy; x0 += sx; }
        if (e2 <= dx) { err += dx; y0 += sy; }
    }
}

}  // namespace

GrayImage axial_slice(const Volume& volume, std::size_t z) {
    return slice_of(volume, z, [](float v) {
        const float c = std::clamp(std::isfinite(v) ? v : 0.0f, 0.0f, 1.0f);
        return static_cast<std::uint8_t>(std::lround(c * 255.0f));
    });
}

GrayImage axial_slice(const LabelVolume& label, std::size_t z) {
    return slice_of(label, z, [](std::uint8_t v) { return static_cast<std::uint8_t>(v ? 255 : 0); });
}

GrayImage overlay_slice(const Volume& volume, const LabelVolume& label, std::size_t z) {
    require_same_dims(volume, label, "overlay_slice");
    auto img = axial_slice(volume, z);
    const auto contour = extract_contour(label).mask;
    const auto c = axial_slice(contour, z);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        if (c.pixels[i]) img.pixels[i] = 255;
    }
    return img;
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& image) {
    if (image.pixels.size() != image.width * image.height) throw DimensionError("PGM pixel count mismatch");
    return netpbm("P5", image.width, image.height, image.pixels);
}

std::vector<std::uint8_t> encode_ppm(const RgbImage& image) {
    if (image.pixels.size() != image.width * image.height * 3) throw DimensionError("PPM pixel count mismatch");
    return netpbm("P6", image.width, image.height, image.pixels);
}

void write_pgm(const GrayImage& image, const std::filesystem::path& path) {
    detail::write_file_bytes(encode_pgm(image), path);
}

void write_ppm(const RgbImage& image, const std::filesystem::path& path) {
    detail::write_file_bytes(encode_ppm(image), path);
}

RgbImage render_line_plot(const std::vector<PlotSeries>& series, std::size_t width, std::size_t height) {
    if (width < 64 || height < 64) throw ConfigError("plot must be at least 64x64 pixels");
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size() || (!s.error.empty() && s.error.size() != s.y.size())) {
            throw DimensionError("plot series lengths differ");
        }
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double e = s.error.empty() ? 0.0 : std::abs(s.error[i]);
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i] - e);
            ymax = std::max(ymax, s.y[i] + e);
        }
    }
    if (!std::isfinite(xmin) || !std::isfinite(ymin) || !std::isfinite(xmax) || !std::isfinite(ymax)) {
        xmin = ymin = 0.0;
        xmax = ymax = 1.0;
    }
    if (xmax - xmin < 1e-12) { xmin -= 0.5; xmax += 0.5; }
    if (ymax - ymin < 1e-12) { ymin -= 0.5; ymax += 0.5; }
    const double px = 0.05 * (xmax - xmin), py = 0.05 * (ymax - ymin);
    xmin -= px; xmax += px; ymin -= py; ymax += py;

    RgbImage img(width, height);
    const long left = 40, right = static_cast<long>(width) - 15, top = 15, bottom = static_cast<long>(height) - 30;
    const auto to_px = [&](double x) { return left + std::lround((x - xmin) / (xmax - xmin) * (right - left)); };
    const auto to_py = [&](double y) { return bottom - std::lround((y - ymin) / (ymax - ymin) * (bottom - top)); };
    const std::array<std::uint8_t, 3> black{0, 0, 0}, grid{220, 220, 220};

    for (int t = 0; t <= 10; ++t) {
        const long gx = left + (right - left) * t / 10, gy = bottom - (bottom - top) * t / 10;
        line(img, gx, top, gx, bottom, grid);
        line(img, left, gy, right, gy, grid);
        line(img, gx, bottom, gx, bottom + 5, black);
        line(img, left - 5, gy, left, gy, black);
    }
    line(img, left, bottom, right, bottom, black);
    line(img, left, top, left, bottom, black);

    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const long x = to_px(s.x[i]), y = to_py(s.y[i]);
            if (i > 0) line(img, to_px(s.x[i - 1]), to_py(s.y[i - 1]), x, y, s.color);
            if (!s.error.empty()) {
                const long y0 = to_py(s.y[i] - s.error[i]), y1 = to_py(s.y[i] + s.error[i]);
                line(img, x, y0, x, y1, s.color);
                line(img, x - 3, y0, x + 3, y0, s.color);
                line(img, x - 3, y1, x + 3, y1, s.color);
            }
            for (long dy = -2; dy <= 2; ++dy) {
                for (long dx = -2; dx <= 2; ++dx) img.set(x + dx, y + dy, s.color);
            }
        }
    }
    return img;
}

}  // namespace autocenet
