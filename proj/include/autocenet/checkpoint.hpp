#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "autocenet/network.hpp"

namespace autocenet {

// Checkpoint files: "ACNW", u32 version, u32 blob count, then per blob
// u32 name length, UTF-8 name, u32 rank, u32 dims, f32 values. Little-endian.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray {
    std::string name;
    Shape shape;
    std::vector<float> values;

    bool operator==(const NamedArray&) const = default;
};

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedArray>& blobs);
std::vector<NamedArray> decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const std::vector<NamedArray>& blobs, const std::filesystem::path& path);
std::vector<NamedArray> load_checkpoint(const std::filesystem::path& path);

/// Parameters plus batch-norm running statistics ("<norm>.running_mean",
/// "<norm>.running_var").
std::vector<NamedArray> network_state(Network& network);
/// Restores every parameter and statistic; missing names or shape mismatches
/// raise DataError. Extra blobs are ignored.
void load_network_state(Network& network, const std::vector<NamedArray>& blobs);

/// Looks up a blob by name; throws DataError when absent.
const NamedArray& find_blob(const std::vector<NamedArray>& blobs, const std::string& name);

}  // namespace autocenet
