#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "autocenet/volume.hpp"

namespace oracle {

struct Distances {
    double hd = 0, hd95 = 0, assd = 0;
};

/// Boundary voxels: foreground with a background (or out-of-grid) 6-neighbour.
inline std::vector<std::array<double, 3>> surface(const autocenet::LabelVolume& v) {
    std::vector<std::array<double, 3>> pts;
    const auto d = v.dims();
    const auto s = v.spacing();
    const auto fg = [&](long x, long y, long z) {
        if (x < 0 || y < 0 || z < 0 || x >= long(d[0]) || y >= long(d[1]) || z >= long(d[2])) return false;
        return v.at(x, y, z) != 0;
    };
    for (long z = 0; z < long(d[2]); ++z)
        for (long y = 0; y < long(d[1]); ++y)
            for (long x = 0; x < long(d[0]); ++x) {
                if (!fg(x, y, z)) continue;
                if (!fg(x - 1, y, z) || !fg(x + 1, y, z) || !fg(x, y - 1, z) || !fg(x, y + 1, z) ||
                    !fg(x, y, z - 1) || !fg(x, y, z + 1))
                    pts.push_back({x * s[0], y * s[1], z * s[2]});
            }
    return pts;
}

inline std::vector<double> directed(const std::vector<std::array<double, 3>>& a,
                                    const std::vector<std::array<double, 3>>& b) {
    std::vector<double> out;
    for (const auto& p : a) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : b) {
            const double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
            best = std::min(best, dx * dx + dy * dy + dz * dz);
        }
        out.push_back(std::sqrt(best));
    }
    return out;
}

/// Nearest-rank percentile by full sort.
inline double percentile(std::vector<double> v, double f) {
    std::sort(v.begin(), v.end());
    std::size_t rank = 1;
    while (static_cast<double>(rank) < f * static_cast<double>(v.size()) - 1e-9) ++rank;
    return v[std::min(rank, v.size()) - 1];
}

/// All-pairs surface distances; both surfaces must be non-empty.
inline Distances distances(const autocenet::LabelVolume& a, const autocenet::LabelVolume& b) {
    const auto sa = surface(a), sb = surface(b);
    const auto ab = directed(sa, sb), ba = directed(sb, sa);
    Distances d;
    d.hd = std::max(*std::max_element(ab.begin(), ab.end()), *std::max_element(ba.begin(), ba.end()));
    d.hd95 = std::max(percentile(ab, 0.95), percentile(ba, 0.95));
    double total = 0;
    for (double x : ab) total += x;
    for (double x : ba) total += x;
    d.assd = total / static_cast<double>(ab.size() + ba.size());
    return d;
}

}  // namespace oracle
