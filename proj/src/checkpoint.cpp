#include "autocenet/checkpoint.hpp"

#include <algorithm>
#include <map>

#include "autocenet/detail/le_bytes.hpp"

namespace autocenet {

namespace {

constexpr char kMagic[4] = {'A', 'C', 'N', 'W'};
// Guards against absurd allocations on corrupt input.
constexpr std::uint32_t kMaxRank = 8;

std::uint32_t checked_u32(std::size_t v, const char* what) {
    if (v > 0xffffffffu) throw ConfigError(std::string("checkpoint: ") + what + " does not fit in 32 bits");
    return static_cast<std::uint32_t>(v);
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedArray>& blobs) {
    detail::ByteWriter w;
    w.raw(kMagic, 4);
    w.u32(kCheckpointVersion);
    w.u32(checked_u32(blobs.size(), "blob count"));
    for (const auto& b : blobs) {
        if (numel(b.shape) != b.values.size()) {
            throw DimensionError("checkpoint blob '" + b.name + "' has " + std::to_string(b.values.size()) +
                                 " values for shape " + to_string(b.shape));
        }
        w.u32(checked_u32(b.name.size(), "name length"));
        w.raw(b.name.data(), b.name.size());
        w.u32(checked_u32(b.shape.size(), "rank"));
        for (auto d : b.shape) w.u32(checked_u32(d, "dimension"));
        for (auto v : b.values) w.f32(v);
    }
    return std::move(w).bytes();
}

std::vector<NamedArray> decode_checkpoint(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes);
    auto magic = r.raw(4, "magic");
    if (!std::equal(magic.begin(), magic.end(), kMagic)) throw FormatError("not a checkpoint (bad magic)", 0);
    const auto version_at = r.offset();
    if (const auto version = r.u32("version"); version != kCheckpointVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version), version_at);
    }
    const auto count = r.u32("blob count");
    std::vector<NamedArray> blobs;
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedArray b;
        const auto name_len = r.u32("name length");
        auto name = r.raw(name_len, "name");
        b.name.assign(name.begin(), name.end());
        const auto rank_at = r.offset();
        const auto rank = r.u32("rank");
        if (rank > kMaxRank) throw FormatError("blob '" + b.name + "' has implausible rank", rank_at);
        std::size_t n = 1;
        for (std::uint32_t a = 0; a < rank; ++a) {
            const auto d = r.u32("dimension");
            b.shape.push_back(d);
            n *= d;
        }
        if (n > r.remaining() / 4) throw FormatError("blob '" + b.name + "' payload is truncated", r.offset());
        b.values.resize(n);
        for (auto& v : b.values) v = r.f32("values");
        blobs.push_back(std::move(b));
    }
    if (r.remaining() != 0) throw FormatError("trailing bytes after the last blob", r.offset());
    return blobs;
}

void save_checkpoint(const std::vector<NamedArray>& blobs, const std::filesystem::path& path) {
    detail::write_file_bytes(encode_checkpoint(blobs), path);
}

std::vector<NamedArray> load_checkpoint(const std::filesystem::path& path) {
    return decode_checkpoint(detail::read_file_bytes(path));
}

const NamedArray& find_blob(const std::vector<NamedArray>& blobs, const std::string& name) {
    for (const auto& b : blobs) {
        if (b.name == name) return b;
    }
    throw DataError("checkpoint has no blob named '" + name + "'");
}

std::vector<NamedArray> network_state(Network& network) {
    std::vector<NamedArray> out;
    for (const auto& p : network.parameters()) {
        const auto d = p.tensor.data();
        out.push_back({p.name, p.tensor.shape(), {d.begin(), d.end()}});
    }
    for (const auto& b : network.buffers()) {
        const Shape s{b.stats->running_mean.size()};
        out.push_back({b.name + ".running_mean", s, b.stats->running_mean});
        out.push_back({b.name + ".running_var", s, b.stats->running_var});
    }
    return out;
}

void load_network_state(Network& network, const std::vector<NamedArray>& blobs) {
    std::map<std::string, const NamedArray*> by_name;
    for (const auto& b : blobs) by_name[b.name] = &b;
    auto lookup = [&](const std::string& name, const Shape& shape) -> const NamedArray& {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw DataError("checkpoint has no blob named '" + name + "'");
        if (it->second->shape != shape) {
            throw DataError("checkpoint blob '" + name + "' has shape " + to_string(it->second->shape) +
                            ", network expects " + to_string(shape));
        }
        return *it->second;
    };
    for (auto& p : network.parameters()) {
        const auto& b = lookup(p.name, p.tensor.shape());
        std::copy(b.values.begin(), b.values.end(), p.tensor.data().begin());
    }
    for (auto& buf : network.buffers()) {
        const Shape s{buf.stats->running_mean.size()};
        buf.stats->running_mean = lookup(buf.name + ".running_mean", s).values;
        buf.stats->running_var = lookup(buf.name + ".running_var", s).values;
    }
}

}  // namespace autocenet
