#include <cmath>
#include <numbers>

#include "autocenet/data.hpp"
#include "autocenet/detail/sampling.hpp"

namespace autocenet {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 multiply(const Mat3& a, const Mat3& b) {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
    return r;
}

// R = Rz * Ry * Rx
Mat3 rotation(const std::array<double, 3>& deg) {
    const double k = std::numbers::pi / 180.0;
    const double cx = std::cos(deg[0] * k), sx = std::sin(deg[0] * k);
    const double cy = std::cos(deg[1] * k), sy = std::sin(deg[1] * k);
    const double cz = std::cos(deg[2] * k), sz = std::sin(deg[2] * k);
    const Mat3 rx{{{1, 0, 0}, {0, cx, -sx}, {0, sx, cx}}};
    const Mat3 ry{{{cy, 0, sy}, {0, 1, 0}, {-sy, 0, cy}}};
    const Mat3 rz{{{cz, -sz, 0}, {sz, cz, 0}, {0, 0, 1}}};
    return multiply(rz, multiply(ry, rx));
}

}  // namespace

AffineParams sample_affine(std::mt19937_64& rng, const Dims3& dims, const Spacing3& spacing,
                           const AffineRanges& ranges) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> scale(ranges.min_scale, ranges.max_scale);
    AffineParams p;
    for (auto& r : p.rotation_deg) r = unit(rng) * ranges.max_rotation_deg;
    p.scale = scale(rng);
    for (std::size_t a = 0; a < 3; ++a) {
        p.translation_mm[a] = unit(rng) * ranges.max_translation * static_cast<double>(dims[a]) * spacing[a];
    }
    return p;
}

Augmented apply_affine(const Volume& image, const LabelVolume& label, const AffineParams& params) {
    require_same_dims(image, label, "apply_affine");
    if (!(params.scale > 0.0)) throw ConfigError("apply_affine: scale must be positive");
    const auto& d = image.dims();
    const auto& sp = image.spacing();
    const Mat3 r = rotation(params.rotation_deg);
    std::array<double, 3> centre{};
    for (std::size_t a = 0; a < 3; ++a) centre[a] = 0.5 * static_cast<double>(d[a] - 1) * sp[a];

    Augmented out{Volume(d, sp), LabelVolume(d, label.spacing()), true, params};
    for (std::size_t z = 0; z < d[2]; ++z)
        for (std::size_t y = 0; y < d[1]; ++y)
            for (std::size_t x = 0; x < d[0]; ++x) {
                // Inverse map: source = R^T (p - c - t) / s + c, in millimetres.
                const std::array<double, 3> q{
                    static_cast<double>(x) * sp[0] - centre[0] - params.translation_mm[0],
                    static_cast<double>(y) * sp[1] - centre[1] - params.translation_mm[1],
                    static_cast<double>(z) * sp[2] - centre[2] - params.translation_mm[2]};
                std::array<double, 3> src{};
                for (std::size_t a = 0; a < 3; ++a) {
                    const double mm = (r[0][a] * q[0] + r[1][a] * q[1] + r[2][a] * q[2]) / params.scale + centre[a];
                    src[a] = mm / sp[a];
                }
                out.image.at(x, y, z) = static_cast<float>(detail::sample_trilinear(image, src, 0.0));
                out.label.at(x, y, z) = detail::sample_nearest(label, src, std::uint8_t{0});
            }
    return out;
}

Augmented random_affine(const Volume& image, const LabelVolume& label, std::mt19937_64& rng, double probability,
                        const AffineRanges& ranges) {
    require_same_dims(image, label, "random_affine");
    if (probability < 0.0 || probability > 1.0) throw ConfigError("random_affine: probability must be in [0, 1]");
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (!(coin(rng) < probability)) return Augmented{image, label, false, {}};
    return apply_affine(image, label, sample_affine(rng, image.dims(), image.spacing(), ranges));
}

}  // namespace autocenet
