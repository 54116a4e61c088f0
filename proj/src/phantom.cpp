#include <cmath>
#include <numbers>

#include "autocenet/data.hpp"

namespace autocenet {

namespace {

constexpr double kLiverHu = 100.0;
constexpr double kNoiseHu = 15.0;
constexpr double kBodyHu = 20.0;
constexpr double kSpineHu = 400.0;
constexpr double kAirHu = -1000.0;

struct Harmonic {
    std::array<double, 3> axis;
    double frequency;
    double phase;
    double amplitude;
};

// Radial perturbation evaluated on the unit direction of a point.
double radial_perturbation(const std::vector<Harmonic>& hs, const std::array<double, 3>& dir) {
    double e = 0.0;
    for (const auto& h : hs) {
        const double proj = h.axis[0] * dir[0] + h.axis[1] * dir[1] + h.axis[2] * dir[2];
        e += h.amplitude * std::sin(h.frequency * proj + h.phase);
    }
    return e;
}

std::array<double, 3> random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::array<double, 3> v{};
    double len = 0.0;
    do {
        for (auto& c : v) c = n(rng);
        len = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    } while (len < 1e-6);
    for (auto& c : v) c /= len;
    return v;
}

}  // namespace

Phantom make_phantom(std::uint64_t seed, const Dims3& dims, const Spacing3& spacing) {
    for (auto d : dims) {
        if (d == 0 || d % 4 != 0) throw ConfigError("make_phantom: dims must be positive multiples of 4");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> radius(0.45, 0.6);

    // Shapes live in normalized coordinates [-1, 1]^3.
    const std::array<double, 3> centre{0.1 * u(rng), 0.1 * u(rng), 0.1 * u(rng)};
    const std::array<double, 3> radii{radius(rng), radius(rng), radius(rng)};
    std::vector<Harmonic> harmonics;
    for (int i = 0; i < 3; ++i) {
        const auto axis = random_unit(rng);
        harmonics.push_back({axis, 2.0 + 2.0 * std::abs(u(rng)), std::numbers::pi * u(rng), 0.04});
    }

    // Neighbouring organ: smaller ellipsoid centred just outside the target
    // surface so the two touch.
    std::array<double, 3> ndir = random_unit(rng);
    ndir[2] *= 0.5;
    const double nlen = std::sqrt(ndir[0] * ndir[0] + ndir[1] * ndir[1] + ndir[2] * ndir[2]);
    for (auto& c : ndir) c /= nlen;
    const double nradius = 0.18 + 0.05 * std::abs(u(rng));
    double reach = 0.0;
    for (std::size_t a = 0; a < 3; ++a) reach += (ndir[a] * radii[a]) * (ndir[a] * radii[a]);
    reach = std::sqrt(reach) * (1.0 + radial_perturbation(harmonics, ndir));
    std::array<double, 3> ncentre{};
    for (std::size_t a = 0; a < 3; ++a) ncentre[a] = centre[a] + ndir[a] * (reach + 0.6 * nradius);
    const double neighbour_hu = kLiverHu + 10.0 * u(rng);

    const std::array<double, 2> spine{0.0, -0.78};
    const double spine_radius = 0.1;

    Phantom p{Volume(dims, spacing), LabelVolume(dims, spacing), LabelVolume(dims, spacing)};
    std::normal_distribution<double> noise(0.0, kNoiseHu);
    for (std::size_t z = 0; z < dims[2]; ++z)
        for (std::size_t y = 0; y < dims[1]; ++y)
            for (std::size_t x = 0; x < dims[0]; ++x) {
                const std::array<double, 3> q{(static_cast<double>(x) + 0.5) / static_cast<double>(dims[0]) * 2 - 1,
                                              (static_cast<double>(y) + 0.5) / static_cast<double>(dims[1]) * 2 - 1,
                                              (static_cast<double>(z) + 0.5) / static_cast<double>(dims[2]) * 2 - 1};

                std::array<double, 3> rel{};
                double rho2 = 0.0, len2 = 0.0;
                for (std::size_t a = 0; a < 3; ++a) {
                    rel[a] = q[a] - centre[a];
                    rho2 += (rel[a] / radii[a]) * (rel[a] / radii[a]);
                    len2 += rel[a] * rel[a];
                }
                bool liver = false;
                if (len2 > 0.0) {
                    const double len = std::sqrt(len2);
                    const std::array<double, 3> dir{rel[0] / len, rel[1] / len, rel[2] / len};
                    liver = std::sqrt(rho2) < 1.0 + radial_perturbation(harmonics, dir);
                } else {
                    liver = true;
                }

                double n2 = 0.0;
                for (std::size_t a = 0; a < 3; ++a) n2 += (q[a] - ncentre[a]) * (q[a] - ncentre[a]);
                const bool neighbour = !liver && n2 < nradius * nradius;

                const double body = q[0] * q[0] / (0.97 * 0.97) + q[1] * q[1] / (0.92 * 0.92);
                const double sdx = q[0] - spine[0], sdy = q[1] - spine[1];
                const bool in_spine = sdx * sdx + sdy * sdy < spine_radius * spine_radius;

                double hu = kAirHu;
                if (body < 1.0) hu = kBodyHu;
                if (in_spine) hu = kSpineHu;
                if (neighbour) hu = neighbour_hu;
                if (liver) hu = kLiverHu;
                hu += noise(rng);

                p.image.at(x, y, z) = static_cast<float>(hu);
                p.label.at(x, y, z) = liver ? 1 : 0;
                p.neighbor.at(x, y, z) = neighbour ? 1 : 0;
            }
    return p;
}

}  // namespace autocenet
