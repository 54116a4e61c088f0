#include <doctest.h>

#include <cstring>
#include <filesystem>

#include "autocenet/checkpoint.hpp"
#include "support.hpp"

using namespace autocenet;
namespace fs = std::filesystem;

namespace {

std::vector<NamedArray> sample_blobs() {
    std::mt19937_64 rng(1);
    std::vector<NamedArray> blobs;
    for (int i = 0; i < 4; ++i) {
        auto t = test::random_tensor({2, 3, static_cast<std::size_t>(i + 1)}, rng);
        blobs.push_back({"blob" + std::to_string(i), t.shape(), {t.data().begin(), t.data().end()}});
    }
    blobs[0].values[0] = -0.0f;
    blobs[0].values[1] = std::numeric_limits<float>::denorm_min();
    blobs.push_back({"scalar", {1}, {42.0f}});
    return blobs;
}

}  // namespace

TEST_CASE("checkpoint encoding round-trips bit-exactly") {
    const auto blobs = sample_blobs();
    const auto bytes = encode_checkpoint(blobs);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "ACNW");
    const auto back = decode_checkpoint(bytes);
    REQUIRE(back.size() == blobs.size());
    for (std::size_t i = 0; i < blobs.size(); ++i) {
        CHECK(back[i].name == blobs[i].name);
        CHECK(back[i].shape == blobs[i].shape);
        CHECK(std::memcmp(back[i].values.data(), blobs[i].values.data(), blobs[i].values.size() * 4) == 0);
    }
    CHECK(encode_checkpoint(back) == bytes);
    CHECK(find_blob(back, "scalar").values[0] == 42.0f);
    CHECK_THROWS_AS(find_blob(back, "nope"), DataError);
}

TEST_CASE("checkpoint format errors") {
    const auto bytes = encode_checkpoint(sample_blobs());
    auto bad = bytes;
    bad[1] = 'X';
    CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);
    bad = bytes;
    bad[4] = 2;
    CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);
    for (std::size_t cut : {std::size_t{3}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
        std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + cut);
        CHECK_THROWS_AS(decode_checkpoint(part), FormatError);
    }
    bad = bytes;
    bad.push_back(1);
    CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);
}

TEST_CASE("network state save/load is exact and validated") {
    auto cfg = NetworkConfig::desk();
    cfg.input_dims = {8, 8, 4};
    Network a(cfg, 1), b(cfg, 2);
    std::mt19937_64 rng(3);
    auto x = test::random_tensor({1, 1, 8, 8, 4}, rng, 0, 1);
    a.forward(x, Mode::train);
    const auto dir = fs::temp_directory_path() / "autocenet_test_ckpt";
    fs::create_directories(dir);
    save_checkpoint(network_state(a), dir / "a.ckpt");
    load_network_state(b, load_checkpoint(dir / "a.ckpt"));
    CHECK(network_state(b) == network_state(a));
    const auto ya = a.forward(x, Mode::eval).final_logits;
    const auto yb = b.forward(x, Mode::eval).final_logits;
    CHECK(test::doubles(ya) == test::doubles(yb));

    auto state = network_state(a);
    state.pop_back();
    CHECK_THROWS_AS(load_network_state(b, state), DataError);
    state = network_state(a);
    state[0].shape.back() += 1;
    CHECK_THROWS_AS(load_network_state(b, state), DataError);
    Network other(apply_ablation(cfg, Ablation::autonet), 1);
    CHECK_THROWS_AS(load_network_state(b, network_state(other)), DataError);
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), DataError);
}
