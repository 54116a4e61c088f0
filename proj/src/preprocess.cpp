#include <algorithm>
#include <cmath>

#include "autocenet/data.hpp"
#include "autocenet/detail/sampling.hpp"

namespace autocenet {

Volume window_normalize(const Volume& volume, Window window) {
    const double lo = window.level - window.width / 2.0;
    const double hi = window.level + window.width / 2.0;
    Volume out(volume.dims(), volume.spacing());
    const auto in = volume.values();
    auto o = out.values();
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double v = std::clamp<double>(in[i], lo, hi);
        o[i] = static_cast<float>((v - lo) / window.width);
    }
    return out;
}

Volume window_denormalize(const Volume& volume, Window window) {
    const double lo = window.level - window.width / 2.0;
    Volume out(volume.dims(), volume.spacing());
    const auto in = volume.values();
    auto o = out.values();
    for (std::size_t i = 0; i < in.size(); ++i) o[i] = static_cast<float>(in[i] * window.width + lo);
    return out;
}

namespace {

Spacing3 rescaled_spacing(const Dims3& from, const Spacing3& spacing, const Dims3& to) {
    Spacing3 s{};
    for (std::size_t a = 0; a < 3; ++a) s[a] = spacing[a] * static_cast<double>(from[a]) / static_cast<double>(to[a]);
    return s;
}

// Source coordinate of a target voxel centre when both grids span the same extent.
double source_coord(std::size_t target_index, std::size_t from, std::size_t to) {
    return (static_cast<double>(target_index) + 0.5) * static_cast<double>(from) / static_cast<double>(to) - 0.5;
}

void require_positive(const Dims3& target) {
    for (auto d : target) {
        if (d == 0) throw ConfigError("resample: target dims must be positive");
    }
}

}  // namespace

Volume resample(const Volume& volume, const Dims3& target) {
    require_positive(target);
    const auto& from = volume.dims();
    Volume out(target, rescaled_spacing(from, volume.spacing(), target));
    for (std::size_t z = 0; z < target[2]; ++z) {
        const double sz = source_coord(z, from[2], target[2]);
        for (std::size_t y = 0; y < target[1]; ++y) {
            const double sy = source_coord(y, from[1], target[1]);
            for (std::size_t x = 0; x < target[0]; ++x) {
                const double sx = source_coord(x, from[0], target[0]);
                out.at(x, y, z) = static_cast<float>(detail::sample_trilinear(volume, {sx, sy, sz}, 0.0));
            }
        }
    }
    return out;
}

LabelVolume resample(const LabelVolume& label, const Dims3& target) {
    require_positive(target);
    const auto& from = label.dims();
    LabelVolume out(target, rescaled_spacing(from, label.spacing(), target));
    for (std::size_t z = 0; z < target[2]; ++z) {
        const double sz = source_coord(z, from[2], target[2]);
        for (std::size_t y = 0; y < target[1]; ++y) {
            const double sy = source_coord(y, from[1], target[1]);
            for (std::size_t x = 0; x < target[0]; ++x) {
                const double sx = source_coord(x, from[0], target[0]);
                out.at(x, y, z) = detail::sample_nearest(label, {sx, sy, sz}, std::uint8_t{0});
            }
        }
    }
    return out;
}

LabelVolume downsample_max2(const LabelVolume& label) {
    const auto& d = label.dims();
    for (auto n : d) {
        if (n % 2 != 0) throw DimensionError("downsample_max2: dims must be even");
    }
    const Dims3 half{d[0] / 2, d[1] / 2, d[2] / 2};
    const auto& s = label.spacing();
    LabelVolume out(half, {s[0] * 2, s[1] * 2, s[2] * 2});
    for (std::size_t z = 0; z < half[2]; ++z)
        for (std::size_t y = 0; y < half[1]; ++y)
            for (std::size_t x = 0; x < half[0]; ++x) {
                std::uint8_t m = 0;
                for (std::size_t dz = 0; dz < 2; ++dz)
                    for (std::size_t dy = 0; dy < 2; ++dy)
                        for (std::size_t dx = 0; dx < 2; ++dx)
                            m = std::max(m, label.at(2 * x + dx, 2 * y + dy, 2 * z + dz));
                out.at(x, y, z) = m;
            }
    return out;
}

bool is_contour_voxel(const LabelVolume& label, std::size_t x, std::size_t y, std::size_t z) {
    if (!label.at(x, y, z)) return false;
    const auto& d = label.dims();
    if (x == 0 || y == 0 || z == 0 || x + 1 == d[0] || y + 1 == d[1] || z + 1 == d[2]) return true;
    return !label.at(x - 1, y, z) || !label.at(x + 1, y, z) || !label.at(x, y - 1, z) || !label.at(x, y + 1, z) ||
           !label.at(x, y, z - 1) || !label.at(x, y, z + 1);
}

ContourImage extract_contour(const LabelVolume& label) {
    ContourImage contour{LabelVolume(label.dims(), label.spacing())};
    const auto& d = label.dims();
    for (std::size_t z = 0; z < d[2]; ++z)
        for (std::size_t y = 0; y < d[1]; ++y)
            for (std::size_t x = 0; x < d[0]; ++x) contour.mask.at(x, y, z) = is_contour_voxel(label, x, y, z) ? 1 : 0;
    return contour;
}

template <typename T>
BasicTensor<T> to_tensor(const Volume& volume) {
    const auto& d = volume.dims();
    std::vector<T> data(volume.size());
    for (std::size_t x = 0; x < d[0]; ++x)
        for (std::size_t y = 0; y < d[1]; ++y)
            for (std::size_t z = 0; z < d[2]; ++z) data[(x * d[1] + y) * d[2] + z] = static_cast<T>(volume.at(x, y, z));
    return BasicTensor<T>(Shape{1, 1, d[0], d[1], d[2]}, std::move(data));
}

template <typename T>
BasicTensor<T> to_tensor(const LabelVolume& label) {
    const auto& d = label.dims();
    std::vector<T> data(label.size());
    for (std::size_t x = 0; x < d[0]; ++x)
        for (std::size_t y = 0; y < d[1]; ++y)
            for (std::size_t z = 0; z < d[2]; ++z)
                data[(x * d[1] + y) * d[2] + z] = label.at(x, y, z) ? T(1) : T(0);
    return BasicTensor<T>(Shape{1, 1, d[0], d[1], d[2]}, std::move(data));
}

template <typename T>
BasicTensor<T> stack_tensors(const std::vector<BasicTensor<T>>& items) {
    if (items.empty()) throw DimensionError("stack_tensors: no items");
    Shape shape = items.front().shape();
    if (shape.size() != 5 || shape[0] != 1) throw DimensionError("stack_tensors: items must be [1, C, X, Y, Z]");
    std::vector<T> data;
    data.reserve(items.size() * items.front().numel());
    for (const auto& t : items) {
        if (t.shape() != items.front().shape()) throw DimensionError("stack_tensors: shape mismatch");
        data.insert(data.end(), t.data().begin(), t.data().end());
    }
    shape[0] = items.size();
    return BasicTensor<T>(std::move(shape), std::move(data));
}

template <typename T>
Volume tensor_channel_to_volume(const BasicTensor<T>& tensor, std::size_t item, std::size_t channel,
                                const Spacing3& spacing) {
    const auto& s = tensor.shape();
    if (s.size() != 5 || item >= s[0] || channel >= s[1]) {
        throw DimensionError("tensor_channel_to_volume: bad index for " + to_string(s));
    }
    const Dims3 d{s[2], s[3], s[4]};
    Volume v(d, spacing);
    const auto data = tensor.data();
    const std::size_t base = (item * s[1] + channel) * d[0] * d[1] * d[2];
    for (std::size_t x = 0; x < d[0]; ++x)
        for (std::size_t y = 0; y < d[1]; ++y)
            for (std::size_t z = 0; z < d[2]; ++z)
                v.at(x, y, z) = static_cast<float>(data[base + (x * d[1] + y) * d[2] + z]);
    return v;
}

template BasicTensor<float> to_tensor<float>(const Volume&);
template BasicTensor<double> to_tensor<double>(const Volume&);
template BasicTensor<float> to_tensor<float>(const LabelVolume&);
template BasicTensor<double> to_tensor<double>(const LabelVolume&);
template BasicTensor<float> stack_tensors(const std::vector<BasicTensor<float>>&);
template BasicTensor<double> stack_tensors(const std::vector<BasicTensor<double>>&);
template Volume tensor_channel_to_volume(const BasicTensor<float>&, std::size_t, std::size_t, const Spacing3&);
template Volume tensor_channel_to_volume(const BasicTensor<double>&, std::size_t, std::size_t, const Spacing3&);

}  // namespace autocenet
