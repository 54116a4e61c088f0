#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "autocenet/data.hpp"
#include "autocenet/ops.hpp"
#include "autocenet/tensor.hpp"

namespace test {

using autocenet::BasicTensor;
using autocenet::Shape;

template <typename T = float>
BasicTensor<T> random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0,
                             bool requires_grad = false) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<T> v(autocenet::numel(shape));
    for (auto& x : v) x = static_cast<T>(u(rng));
    return BasicTensor<T>(shape, std::move(v), requires_grad);
}

inline std::size_t idx5(const Shape& s, std::size_t b, std::size_t c, std::size_t x, std::size_t y, std::size_t z) {
    return (((b * s[1] + c) * s[2] + x) * s[3] + y) * s[4] + z;
}

/// Direct-summation convolution: seven nested loops over b, co, output voxel,
/// input channel of the group and kernel offsets.
inline std::vector<double> conv3d_oracle(const std::vector<double>& in, const Shape& is, const std::vector<double>& w,
                                         const Shape& ws, const std::vector<double>& bias, int stride, int groups,
                                         Shape& os) {
    const long k = static_cast<long>(ws[2]);
    const long pad = k == 3 ? 1 : 0;
    const std::size_t cout = ws[0], cin_g = ws[1], cout_g = cout / groups;
    os = {is[0], cout, is[2] / stride, is[3] / stride, is[4] / stride};
    std::vector<double> out(autocenet::numel(os), 0.0);
    for (std::size_t b = 0; b < is[0]; ++b)
        for (std::size_t co = 0; co < cout; ++co)
            for (std::size_t ox = 0; ox < os[2]; ++ox)
                for (std::size_t oy = 0; oy < os[3]; ++oy)
                    for (std::size_t oz = 0; oz < os[4]; ++oz) {
                        double acc = bias.empty() ? 0.0 : bias[co];
                        const std::size_t g = co / cout_g;
                        for (std::size_t ci = 0; ci < cin_g; ++ci)
                            for (long kx = 0; kx < k; ++kx)
                                for (long ky = 0; ky < k; ++ky)
                                    for (long kz = 0; kz < k; ++kz) {
                                        const long x = static_cast<long>(ox) * stride + kx - pad;
                                        const long y = static_cast<long>(oy) * stride + ky - pad;
                                        const long z = static_cast<long>(oz) * stride + kz - pad;
                                        if (x < 0 || y < 0 || z < 0 || x >= static_cast<long>(is[2]) ||
                                            y >= static_cast<long>(is[3]) || z >= static_cast<long>(is[4]))
                                            continue;
                                        const double wv = w[(((co * cin_g + ci) * k + kx) * k + ky) * k + kz];
                                        acc += wv * in[idx5(is, b, g * cin_g + ci, x, y, z)];
                                    }
                        out[idx5(os, b, co, ox, oy, oz)] = acc;
                    }
    return out;
}

template <typename T>
std::vector<double> doubles(const BasicTensor<T>& t) {
    const auto d = t.data();
    return {d.begin(), d.end()};
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline autocenet::LabelVolume random_blob_label(std::mt19937_64& rng, const autocenet::Dims3& dims,
                                                const autocenet::Spacing3& spacing, double density = 0.3) {
    autocenet::LabelVolume l(dims, spacing);
    std::bernoulli_distribution fill(density);
    for (auto& v : l.values()) v = fill(rng) ? 1 : 0;
    return l;
}

/// Noisy ellipsoid whose surface is never empty.
inline autocenet::LabelVolume random_pair_member(std::mt19937_64& rng, const autocenet::Dims3& d,
                                                 const autocenet::Spacing3& s) {
    std::uniform_real_distribution<double> u(0.25, 0.45), c(0.4, 0.6), flip(0, 1);
    autocenet::LabelVolume l(d, s);
    const double rx = u(rng) * d[0], ry = u(rng) * d[1], rz = u(rng) * d[2];
    const double cx = c(rng) * d[0], cy = c(rng) * d[1], cz = c(rng) * d[2];
    for (std::size_t z = 0; z < d[2]; ++z)
        for (std::size_t y = 0; y < d[1]; ++y)
            for (std::size_t x = 0; x < d[0]; ++x) {
                const double r = std::pow((x - cx) / rx, 2) + std::pow((y - cy) / ry, 2) + std::pow((z - cz) / rz, 2);
                l.at(x, y, z) = (r < 1.0) != (flip(rng) < 0.03);
            }
    l.at(d[0] / 2, d[1] / 2, d[2] / 2) = 1;
    return l;
}

}  // namespace test
