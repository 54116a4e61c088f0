#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "autocenet/errors.hpp"

namespace autocenet {

using Dims3 = std::array<std::size_t, 3>;
/// Millimeters per voxel along x, y, z.
using Spacing3 = std::array<double, 3>;

/// Dense 3-D grid with physical spacing. Storage is x-fastest:
/// index = x + nx * (y + ny * z).
template <typename V>
class Grid {
public:
    using value_type = V;

    Grid() = default;
    Grid(Dims3 dims, Spacing3 spacing, V fill = V{}) : dims_(dims), spacing_(spacing) {
        for (auto d : dims) {
            if (d == 0) throw DimensionError("grid dimensions must be positive");
        }
        for (auto s : spacing) {
            if (!(s > 0.0)) throw ConfigError("grid spacing must be positive");
        }
        values_.assign(dims[0] * dims[1] * dims[2], fill);
    }

    const Dims3& dims() const noexcept { return dims_; }
    const Spacing3& spacing() const noexcept { return spacing_; }
    void set_spacing(const Spacing3& s) { spacing_ = s; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    std::size_t index(std::size_t x, std::size_t y, std::size_t z) const noexcept {
        return x + dims_[0] * (y + dims_[1] * z);
    }
    V& at(std::size_t x, std::size_t y, std::size_t z) { return values_[index(x, y, z)]; }
    const V& at(std::size_t x, std::size_t y, std::size_t z) const { return values_[index(x, y, z)]; }
    V& operator[](std::size_t i) { return values_[i]; }
    const V& operator[](std::size_t i) const { return values_[i]; }

    std::span<V> values() noexcept { return values_; }
    std::span<const V> values() const noexcept { return values_; }

    bool operator==(const Grid&) const = default;

private:
    Dims3 dims_{};
    Spacing3 spacing_{1.0, 1.0, 1.0};
    std::vector<V> values_;
};

/// Intensity volume: Hounsfield units before windowing, [0, 1] after.
using Volume = Grid<float>;
/// Binary label volume (0 background, 1 foreground).
using LabelVolume = Grid<std::uint8_t>;

/// Binary boundary map of a label: 1 on contour voxels, 0 elsewhere.
struct ContourImage {
    LabelVolume mask;
};

template <typename A, typename B>
void require_same_dims(const Grid<A>& a, const Grid<B>& b, const char* what) {
    if (a.dims() != b.dims()) throw DimensionError(std::string(what) + ": volume dimensions differ");
}

}  // namespace autocenet
