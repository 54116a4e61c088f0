#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "autocenet/data.hpp"

namespace autocenet {

/// One training or evaluation case: window-normalized image and its label.
struct Case {
    std::string id;
    Volume image;
    LabelVolume label;
};

using Dataset = std::vector<Case>;

/// Seed of the i-th phantom of a synthetic set.
std::uint64_t phantom_seed(std::uint64_t set_seed, std::size_t index);

/// Ids "case_000", "case_001", ...
std::string case_id(std::size_t index);

/// `count` phantoms, window-normalized.
Dataset make_phantom_dataset(std::size_t count, std::uint64_t seed, const Dims3& dims,
                             const Spacing3& spacing = {1.0, 1.0, 2.0});

/// Writes `<id>_image.vol` (Hounsfield units) and `<id>_label.vol` for every
/// phantom plus a `cases.csv` manifest (id,image,label).
void write_phantom_set(const std::filesystem::path& dir, std::size_t count, std::uint64_t seed, const Dims3& dims,
                       const Spacing3& spacing = {1.0, 1.0, 2.0});

/// Reads a manifest directory, window-normalizes the images and resamples
/// image and label to `dims` when they differ.
Dataset load_dataset(const std::filesystem::path& dir, const Dims3& dims);

/// Cases whose ids appear in `ids`, in that order.
Dataset select_cases(const Dataset& all, const std::vector<std::string>& ids);
std::vector<std::string> case_ids(const Dataset& data);

}  // namespace autocenet
