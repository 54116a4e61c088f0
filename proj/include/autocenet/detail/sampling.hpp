#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "autocenet/volume.hpp"

namespace autocenet::detail {

// Positions are in voxel coordinates (voxel centres at integers). A position
// more than half a voxel outside the grid on any axis returns `outside`;
// otherwise coordinates are clamped to the valid centre range.
inline bool inside_extent(const Dims3& d, const std::array<double, 3>& p) {
    for (std::size_t a = 0; a < 3; ++a) {
        if (p[a] < -0.5 || p[a] > static_cast<double>(d[a]) - 0.5) return false;
    }
    return true;
}

template <typename V>
double sample_trilinear(const Grid<V>& g, const std::array<double, 3>& p, double outside) {
    const auto& d = g.dims();
    if (!inside_extent(d, p)) return outside;
    std::array<std::size_t, 3> i0{}, i1{};
    std::array<double, 3> f{};
    for (std::size_t a = 0; a < 3; ++a) {
        const double c = std::clamp(p[a], 0.0, static_cast<double>(d[a] - 1));
        const double fl = std::floor(c);
        i0[a] = static_cast<std::size_t>(fl);
        i1[a] = std::min(i0[a] + 1, d[a] - 1);
        f[a] = c - fl;
    }
    auto lerp = [](double a, double b, double t) { return t == 0.0 ? a : a + t * (b - a); };
    const double c00 = lerp(g.at(i0[0], i0[1], i0[2]), g.at(i1[0], i0[1], i0[2]), f[0]);
    const double c10 = lerp(g.at(i0[0], i1[1], i0[2]), g.at(i1[0], i1[1], i0[2]), f[0]);
    const double c01 = lerp(g.at(i0[0], i0[1], i1[2]), g.at(i1[0], i0[1], i1[2]), f[0]);
    const double c11 = lerp(g.at(i0[0], i1[1], i1[2]), g.at(i1[0], i1[1], i1[2]), f[0]);
    return lerp(lerp(c00, c10, f[1]), lerp(c01, c11, f[1]), f[2]);
}

template <typename V>
V sample_nearest(const Grid<V>& g, const std::array<double, 3>& p, V outside) {
    const auto& d = g.dims();
    if (!inside_extent(d, p)) return outside;
    std::array<std::size_t, 3> i{};
    for (std::size_t a = 0; a < 3; ++a) {
        const double c = std::clamp(std::floor(p[a] + 0.5), 0.0, static_cast<double>(d[a] - 1));
        i[a] = static_cast<std::size_t>(c);
    }
    return g.at(i[0], i[1], i[2]);
}

}  // namespace autocenet::detail
