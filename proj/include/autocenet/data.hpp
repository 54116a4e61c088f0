#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "autocenet/tensor.hpp"
#include "autocenet/volume.hpp"

namespace autocenet {

// ---------------------------------------------------------------------------
// .vol files
//
// bytes 0-3 "VOL1", u32 version (1), u32 nx, ny, nz, f32 spacing x, y, z,
// u8 dtype (0 = f32 intensities, 1 = u8 labels), 3 zero bytes, then the
// x-fastest payload. Everything little-endian.

inline constexpr std::size_t kVolHeaderSize = 36;
inline constexpr std::uint32_t kVolVersion = 1;

using AnyVolume = std::variant<Volume, LabelVolume>;

std::vector<std::uint8_t> encode_volume(const Volume& volume);
std::vector<std::uint8_t> encode_volume(const LabelVolume& volume);
AnyVolume decode_volume(std::span<const std::uint8_t> bytes);

void write_volume(const Volume& volume, const std::filesystem::path& path);
void write_volume(const LabelVolume& volume, const std::filesystem::path& path);
AnyVolume read_any_volume(const std::filesystem::path& path);
/// Reads an intensity volume; label files are promoted to float.
Volume read_volume(const std::filesystem::path& path);
/// Reads a label volume; intensity files are rejected.
LabelVolume read_label_volume(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Preprocessing

struct Window {
    double level = 10.0;
    double width = 700.0;
};

/// Clips HU to [level - width/2, level + width/2] and maps linearly to [0, 1].
Volume window_normalize(const Volume& volume, Window window = {});

/// Inverse map of window_normalize on the unclipped range.
Volume window_denormalize(const Volume& volume, Window window = {});

/// Trilinear resampling with voxel centers aligned to the physical extent,
/// which is preserved by rescaling the spacing.
Volume resample(const Volume& volume, const Dims3& target);
/// Nearest-neighbour variant for labels.
LabelVolume resample(const LabelVolume& label, const Dims3& target);

/// 2x max pooling per axis (dims must be even). Spacing doubles.
LabelVolume downsample_max2(const LabelVolume& label);

/// Foreground voxels with at least one background 6-neighbour; the volume
/// border counts as background.
ContourImage extract_contour(const LabelVolume& label);

bool is_contour_voxel(const LabelVolume& label, std::size_t x, std::size_t y, std::size_t z);

// ---------------------------------------------------------------------------
// Augmentation

struct AffineRanges {
    double max_rotation_deg = 10.0;
    double min_scale = 0.9;
    double max_scale = 1.1;
    /// Fraction of the physical extent per axis.
    double max_translation = 0.05;
};

struct AffineParams {
    std::array<double, 3> rotation_deg{};
    double scale = 1.0;
    std::array<double, 3> translation_mm{};
};

struct Augmented {
    Volume image;
    LabelVolume label;
    bool applied = false;
    AffineParams params;
};

AffineParams sample_affine(std::mt19937_64& rng, const Dims3& dims, const Spacing3& spacing,
                           const AffineRanges& ranges = {});

/// Applies one affine transform about the volume centre, identically to image
/// (trilinear) and label (nearest). Samples outside the grid read 0.
Augmented apply_affine(const Volume& image, const LabelVolume& label, const AffineParams& params);

/// With the given probability draws an affine transform and applies it;
/// otherwise returns the inputs unchanged.
Augmented random_affine(const Volume& image, const LabelVolume& label, std::mt19937_64& rng,
                        double probability = 0.8, const AffineRanges& ranges = {});

// ---------------------------------------------------------------------------
// Synthetic phantoms

struct Phantom {
    Volume image;        ///< Hounsfield units
    LabelVolume label;   ///< target organ
    LabelVolume neighbor;  ///< adjacent organ of similar intensity (not labelled)
};

/// Deterministic per seed. The target organ is an ellipsoid with low-frequency
/// radial harmonics, HU ~ N(100, 15^2). A smaller organ of similar intensity
/// touches it, inside a soft-tissue body with a bright spine and air outside.
Phantom make_phantom(std::uint64_t seed, const Dims3& dims, const Spacing3& spacing = {1.0, 1.0, 2.0});

// ---------------------------------------------------------------------------
// Fold planning

enum class FoldMode { two_fold, nfold_fractions };
enum class SubsetPolicy { nested, disjoint };

struct FoldOptions {
    FoldMode mode = FoldMode::two_fold;
    /// Held-out test share; 80 of 180 by default.
    double test_fraction = 80.0 / 180.0;
    std::vector<double> fractions{0.1, 0.3, 0.5, 0.7, 0.9};
    SubsetPolicy policy = SubsetPolicy::nested;
};

struct Fold {
    std::vector<std::string> train;
    std::vector<std::string> validation;
};

struct FractionSplit {
    double fraction = 0.0;
    std::vector<std::string> train;
};

struct FoldPlan {
    std::uint64_t seed = 0;
    FoldMode mode = FoldMode::two_fold;
    std::vector<std::string> test;
    /// Shuffled non-test cases.
    std::vector<std::string> pool;
    std::vector<Fold> folds;
    std::vector<FractionSplit> fractions;
};

FoldPlan plan_folds(const std::vector<std::string>& case_ids, std::uint64_t seed, const FoldOptions& options = {});

// ---------------------------------------------------------------------------
// Tensor conversion ([1, 1, X, Y, Z], z fastest)

template <typename T>
BasicTensor<T> to_tensor(const Volume& volume);
template <typename T>
BasicTensor<T> to_tensor(const LabelVolume& label);
/// Stacks same-sized volumes into [B, 1, X, Y, Z].
template <typename T>
BasicTensor<T> stack_tensors(const std::vector<BasicTensor<T>>& items);

/// Reads channel `channel` of batch item `item` from a [B, C, X, Y, Z] tensor.
template <typename T>
Volume tensor_channel_to_volume(const BasicTensor<T>& tensor, std::size_t item, std::size_t channel,
                                const Spacing3& spacing);

}  // namespace autocenet
