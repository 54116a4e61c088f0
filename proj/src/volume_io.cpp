#include <bit>
#include <cstring>

#include "autocenet/data.hpp"
#include "autocenet/detail/le_bytes.hpp"

namespace autocenet {

namespace {

constexpr char kMagic[4] = {'V', 'O', 'L', '1'};
constexpr std::uint8_t kDtypeF32 = 0;
constexpr std::uint8_t kDtypeU8 = 1;

template <typename V>
std::vector<std::uint8_t> encode(const Grid<V>& volume, std::uint8_t dtype) {
    detail::ByteWriter w;
    w.raw(kMagic, 4);
    w.u32(kVolVersion);
    for (auto d : volume.dims()) {
        if (d > 0xffffffffu) throw ConfigError("volume dimension does not fit in 32 bits");
        w.u32(static_cast<std::uint32_t>(d));
    }
    for (auto s : volume.spacing()) w.f32(static_cast<float>(s));
    w.u8(dtype);
    w.u8(0);
    w.u8(0);
    w.u8(0);
    for (auto v : volume.values()) {
        if constexpr (std::is_same_v<V, float>) {
            w.f32(v);
        } else {
            w.u8(v);
        }
    }
    return std::move(w).bytes();
}

}  // namespace

std::vector<std::uint8_t> encode_volume(const Volume& volume) { return encode(volume, kDtypeF32); }
std::vector<std::uint8_t> encode_volume(const LabelVolume& volume) { return encode(volume, kDtypeU8); }

AnyVolume decode_volume(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes);
    const auto magic = r.raw(4, "magic");
    if (std::memcmp(magic.data(), kMagic, 4) != 0) throw FormatError("bad magic, expected VOL1", 0);
    const std::size_t version_at = r.offset();
    const auto version = r.u32("version");
    if (version != kVolVersion) {
        throw FormatError("unsupported format version " + std::to_string(version), version_at);
    }
    Dims3 dims{};
    std::uint64_t count = 1;
    for (std::size_t a = 0; a < 3; ++a) {
        const std::size_t at = r.offset();
        const auto d = r.u32("dimension");
        if (d == 0) throw FormatError("zero dimension", at);
        if (__builtin_mul_overflow(count, static_cast<std::uint64_t>(d), &count)) {
            throw FormatError("dimension product overflows", at);
        }
        dims[a] = d;
    }
    Spacing3 spacing{};
    for (std::size_t a = 0; a < 3; ++a) {
        const std::size_t at = r.offset();
        const float s = r.f32("spacing");
        if (!(s > 0.0f) || !std::isfinite(s)) throw FormatError("spacing must be positive and finite", at);
        spacing[a] = s;
    }
    const std::size_t dtype_at = r.offset();
    const auto dtype = r.u8("dtype");
    if (dtype != kDtypeF32 && dtype != kDtypeU8) {
        throw FormatError("unknown dtype " + std::to_string(dtype), dtype_at);
    }
    const std::size_t reserved_at = r.offset();
    const auto reserved = r.raw(3, "reserved bytes");
    if (reserved[0] || reserved[1] || reserved[2]) throw FormatError("reserved bytes must be zero", reserved_at);

    const std::uint64_t width = dtype == kDtypeF32 ? 4 : 1;
    std::uint64_t payload = 0;
    if (__builtin_mul_overflow(count, width, &payload)) throw FormatError("payload size overflows", kVolHeaderSize);
    if (payload != r.remaining()) {
        throw FormatError("payload holds " + std::to_string(r.remaining()) + " bytes, header implies " +
                              std::to_string(payload),
                          kVolHeaderSize);
    }

    if (dtype == kDtypeF32) {
        Volume v(dims, spacing);
        for (auto& x : v.values()) x = r.f32("payload");
        return v;
    }
    LabelVolume v(dims, spacing);
    for (auto& x : v.values()) x = r.u8("payload");
    return v;
}

void write_volume(const Volume& volume, const std::filesystem::path& path) { detail::write_file_bytes(encode_volume(volume), path); }

void write_volume(const LabelVolume& volume, const std::filesystem::path& path) {
    detail::write_file_bytes(encode_volume(volume), path);
}

AnyVolume read_any_volume(const std::filesystem::path& path) {
    const auto bytes = detail::read_file_bytes(path);
    return decode_volume(bytes);
}

Volume read_volume(const std::filesystem::path& path) {
    auto any = read_any_volume(path);
    if (auto* v = std::get_if<Volume>(&any)) return std::move(*v);
    const auto& l = std::get<LabelVolume>(any);
    Volume v(l.dims(), l.spacing());
    for (std::size_t i = 0; i < l.size(); ++i) v[i] = l[i];
    return v;
}

LabelVolume read_label_volume(const std::filesystem::path& path) {
    auto any = read_any_volume(path);
    if (auto* l = std::get_if<LabelVolume>(&any)) return std::move(*l);
    throw DataError(path.string() + " holds intensities, expected labels");
}

}  // namespace autocenet
