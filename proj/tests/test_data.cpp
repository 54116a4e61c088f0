#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <set>

#include "autocenet/dataset.hpp"
#include "autocenet/imaging.hpp"
#include "support.hpp"

using namespace autocenet;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    auto p = fs::temp_directory_path() / ("autocenet_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Volume random_volume(std::mt19937_64& rng, const Dims3& d, const Spacing3& s) {
    Volume v(d, s);
    std::normal_distribution<float> n(0, 300);
    for (auto& x : v.values()) x = n(rng);
    return v;
}

std::size_t count(const LabelVolume& l) {
    std::size_t n = 0;
    for (auto v : l.values()) n += v;
    return n;
}

}  // namespace

TEST_CASE(".vol round-trips are bit-exact") {
    std::mt19937_64 rng(1);
    auto v = random_volume(rng, {5, 3, 4}, {0.7, 0.75, 2.5});
    v[0] = -0.0f;
    v[1] = std::numeric_limits<float>::denorm_min();
    const auto back = std::get<Volume>(decode_volume(encode_volume(v)));
    CHECK(back.dims() == v.dims());
    CHECK(back.spacing() == Spacing3{0.7f, 0.75f, 2.5f});
    CHECK(std::memcmp(back.values().data(), v.values().data(), v.size() * sizeof(float)) == 0);
    CHECK(encode_volume(back) == encode_volume(v));

    const auto l = test::random_blob_label(rng, {4, 4, 2}, {1, 1, 2});
    const auto dir = temp_dir("vol");
    write_volume(l, dir / "l.vol");
    CHECK(read_label_volume(dir / "l.vol") == l);
    write_volume(v, dir / "v.vol");
    CHECK(encode_volume(read_volume(dir / "v.vol")) == encode_volume(v));
    CHECK_THROWS_AS(read_label_volume(dir / "v.vol"), DataError);
    CHECK_THROWS_AS(read_volume(dir / "missing.vol"), DataError);
}

TEST_CASE(".vol format errors carry offsets") {
    LabelVolume l({2, 2, 2}, {1, 1, 1});
    const auto good = encode_volume(l);
    CHECK(good.size() == kVolHeaderSize + 8);
    auto bad = good;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode_volume(bad), FormatError);
    bad = good;
    bad[4] = 9;
    CHECK_THROWS_AS(decode_volume(bad), FormatError);
    bad = good;
    bad.pop_back();
    CHECK_THROWS_AS(decode_volume(bad), FormatError);
    bad = good;
    bad.push_back(0);
    CHECK_THROWS_AS(decode_volume(bad), FormatError);
    bad = good;
    bad[32] = 7;
    try {
        decode_volume(bad);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.offset() == 32);
    }
    CHECK_THROWS_AS(decode_volume(std::vector<std::uint8_t>(10)), FormatError);
}

TEST_CASE("windowing, resampling and down-sampling") {
    Volume v({3, 1, 1}, {1, 1, 1});
    v[0] = -1000;
    v[1] = 10;
    v[2] = 2000;
    const auto n = window_normalize(v);
    CHECK(n[0] == 0.0f);
    CHECK(n[1] == doctest::Approx(0.5));
    CHECK(n[2] == 1.0f);
    CHECK(window_denormalize(n)[1] == doctest::Approx(10.0));

    std::mt19937_64 rng(2);
    auto r = random_volume(rng, {6, 4, 4}, {1, 1, 2});
    const auto same = resample(r, r.dims());
    CHECK(test::max_abs_diff(std::vector<double>(same.values().begin(), same.values().end()),
                             std::vector<double>(r.values().begin(), r.values().end())) < 1e-4);
    const auto up = resample(r, {12, 8, 8});
    CHECK(up.spacing()[0] == doctest::Approx(0.5));
    CHECK(up.spacing()[2] == doctest::Approx(1.0));
    Volume flat({4, 4, 4}, {1, 1, 1}, 3.5f);
    const auto resampled = resample(flat, {7, 5, 3});
    for (float x : resampled.values()) CHECK(x == doctest::Approx(3.5));

    LabelVolume l({4, 4, 2}, {1, 1, 2});
    l.at(3, 1, 1) = 1;
    const auto d = downsample_max2(l);
    CHECK(d.dims() == Dims3{2, 2, 1});
    CHECK(d.spacing() == Spacing3{2, 2, 4});
    CHECK(d.at(1, 0, 0) == 1);
    CHECK(count(d) == 1);
    CHECK_THROWS_AS(downsample_max2(LabelVolume({3, 2, 2}, {1, 1, 1})), DimensionError);
}

TEST_CASE("contour extraction") {
    LabelVolume cube({5, 5, 5}, {1, 1, 1});
    for (std::size_t z = 1; z < 4; ++z)
        for (std::size_t y = 1; y < 4; ++y)
            for (std::size_t x = 1; x < 4; ++x) cube.at(x, y, z) = 1;
    const auto c = extract_contour(cube).mask;
    CHECK(count(c) == 26);
    CHECK(c.at(2, 2, 2) == 0);
    CHECK(c.at(1, 1, 1) == 1);
    LabelVolume full({3, 3, 3}, {1, 1, 1}, 1);
    CHECK(count(extract_contour(full).mask) == 26);
    std::mt19937_64 rng(3);
    const auto r = test::random_blob_label(rng, {6, 5, 4}, {1, 1, 1}, 0.6);
    const auto rc = extract_contour(r).mask;
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(rc[i] <= r[i]);
}

TEST_CASE("augmentation probability gives a binomial count") {
    std::mt19937_64 rng(4);
    const auto p = make_phantom(1, {16, 16, 8});
    const auto img = window_normalize(p.image);
    std::size_t applied = 0;
    const int n = 400;
    for (int i = 0; i < n; ++i) applied += random_affine(img, p.label, rng, 0.8).applied;
    // Binomial(400, 0.8): mean 320, sd 8; allow 4 sd.
    CHECK(applied >= 288);
    CHECK(applied <= 352);
    auto none = random_affine(img, p.label, rng, 0.0);
    CHECK_FALSE(none.applied);
    CHECK(none.image == img);
    CHECK_THROWS_AS(random_affine(img, p.label, rng, 1.5), ConfigError);

    AffineParams identity;
    const auto same = apply_affine(img, p.label, identity);
    CHECK(same.label == p.label);
    AffineParams shift;
    shift.translation_mm = {1.0, 0.0, 0.0};
    const auto moved = apply_affine(img, p.label, shift);
    CHECK(moved.label.dims() == p.label.dims());
    for (auto v : moved.label.values()) CHECK((v == 0 || v == 1));
}

TEST_CASE("phantom sweep over 100 seeds") {
    const Dims3 dims{32, 32, 16};
    std::set<std::size_t> sizes;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto p = make_phantom(seed, dims);
        INFO("seed " << seed);
        REQUIRE(p.image.dims() == dims);
        const std::size_t fg = count(p.label), nb = count(p.neighbor);
        CHECK(fg > 0.03 * p.label.size());
        CHECK(fg < 0.5 * p.label.size());
        CHECK(nb > 0);
        bool touches = false, overlap = false;
        for (std::size_t z = 0; z < dims[2]; ++z)
            for (std::size_t y = 0; y < dims[1]; ++y)
                for (std::size_t x = 0; x + 1 < dims[0]; ++x) {
                    overlap = overlap || (p.label.at(x, y, z) && p.neighbor.at(x, y, z));
                    touches = touches || (p.label.at(x, y, z) && p.neighbor.at(x + 1, y, z)) ||
                              (p.neighbor.at(x, y, z) && p.label.at(x + 1, y, z));
                }
        for (std::size_t z = 0; z < dims[2] && !touches; ++z)
            for (std::size_t y = 0; y + 1 < dims[1]; ++y)
                for (std::size_t x = 0; x < dims[0]; ++x)
                    touches = touches || (p.label.at(x, y, z) && p.neighbor.at(x, y + 1, z)) ||
                              (p.neighbor.at(x, y, z) && p.label.at(x, y + 1, z));
        CHECK_FALSE(overlap);
        CHECK(touches);
        double liver_mean = 0;
        for (std::size_t i = 0; i < p.label.size(); ++i) liver_mean += p.label[i] ? p.image[i] : 0.0;
        liver_mean /= fg;
        CHECK(liver_mean == doctest::Approx(100.0).epsilon(0.1));
        CHECK(std::all_of(p.image.values().begin(), p.image.values().end(), [](float v) { return std::isfinite(v); }));
        sizes.insert(fg);
    }
    CHECK(sizes.size() > 50);
    CHECK(make_phantom(7, dims).image == make_phantom(7, dims).image);
    CHECK_THROWS_AS(make_phantom(1, {30, 32, 16}), ConfigError);
}

TEST_CASE("fold plans are deterministic, disjoint and nested") {
    std::vector<std::string> ids;
    for (int i = 0; i < 20; ++i) ids.push_back(case_id(i));
    FoldOptions o;
    o.mode = FoldMode::nfold_fractions;
    o.fractions = {0.1, 0.5, 0.9};
    for (auto policy : {SubsetPolicy::nested, SubsetPolicy::disjoint}) {
        o.policy = policy;
        o.fractions = policy == SubsetPolicy::nested ? std::vector<double>{0.1, 0.5, 0.9} : std::vector<double>{0.1, 0.3, 0.5};
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto a = plan_folds(ids, seed, o);
            const auto b = plan_folds(ids, seed, o);
            CHECK(a.test == b.test);
            const std::set<std::string> test(a.test.begin(), a.test.end());
            CHECK(test.size() == a.test.size());
            CHECK(a.test.size() + a.pool.size() == ids.size());
            std::set<std::string> used;
            for (std::size_t f = 0; f < a.fractions.size(); ++f) {
                CHECK(a.fractions[f].train == b.fractions[f].train);
                CHECK_FALSE(a.fractions[f].train.empty());
                for (const auto& id : a.fractions[f].train) {
                    CHECK(test.count(id) == 0);
                    if (policy == SubsetPolicy::disjoint) CHECK(used.insert(id).second);
                }
                if (policy == SubsetPolicy::nested && f > 0) {
                    const auto& prev = a.fractions[f - 1].train;
                    const std::set<std::string> cur(a.fractions[f].train.begin(), a.fractions[f].train.end());
                    for (const auto& id : prev) CHECK(cur.count(id) == 1);
                    CHECK(a.fractions[f].train.size() >= prev.size());
                }
            }
        }
    }
    const auto two = plan_folds(ids, 3);
    REQUIRE(two.folds.size() == 2);
    CHECK(two.folds[0].train == two.folds[1].validation);
    CHECK_THROWS_AS(plan_folds({"a", "a", "b"}, 1), ConfigError);
    o.policy = SubsetPolicy::disjoint;
    o.fractions = {0.5, 0.9};
    CHECK_THROWS_AS(plan_folds(ids, 1, o), ConfigError);
    o.fractions = {1.0};
    o.policy = SubsetPolicy::nested;
    const auto single = plan_folds(ids, 1, o);
    CHECK(single.fractions.size() == 1);
    CHECK(single.fractions[0].train.size() == single.pool.size());
}

TEST_CASE("phantom sets on disk and tensor layout") {
    const auto dir = temp_dir("set");
    write_phantom_set(dir, 3, 5, {8, 8, 4});
    const auto data = load_dataset(dir, {8, 8, 4});
    REQUIRE(data.size() == 3);
    CHECK(data[0].id == "case_000");
    const auto gen = make_phantom_dataset(3, 5, {8, 8, 4});
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(data[i].label == gen[i].label);
        CHECK(test::max_abs_diff(std::vector<double>(data[i].image.values().begin(), data[i].image.values().end()),
                                 std::vector<double>(gen[i].image.values().begin(), gen[i].image.values().end())) < 1e-6);
    }
    const auto up = load_dataset(dir, {16, 16, 8});
    CHECK(up[0].image.dims() == Dims3{16, 16, 8});
    CHECK(select_cases(data, {"case_002"}).front().id == "case_002");
    CHECK_THROWS_AS(select_cases(data, {"nope"}), DataError);
    CHECK_THROWS_AS(load_dataset(dir / "missing", {8, 8, 4}), DataError);

    Volume v({2, 3, 4}, {1, 1, 1});
    v.at(1, 2, 3) = 5.0f;
    const auto t = to_tensor<float>(v);
    CHECK(t.shape() == Shape{1, 1, 2, 3, 4});
    CHECK(t.data()[(1 * 3 + 2) * 4 + 3] == 5.0f);
    CHECK(tensor_channel_to_volume(t, 0, 0, v.spacing()) == v);
}

TEST_CASE("PGM slices and plot images") {
    Volume v({4, 3, 2}, {1, 1, 1}, 0.5f);
    v.at(1, 1, 1) = 2.0f;
    const auto img = axial_slice(v, 1);
    CHECK(img.width == 4);
    CHECK(img.height == 3);
    CHECK(img.pixels[1 * 4 + 1] == 255);
    CHECK(img.pixels[0] == 128);
    const auto bytes = encode_pgm(img);
    const std::string header(bytes.begin(), bytes.begin() + 11);
    CHECK(header == "P5\n4 3\n255\n");
    CHECK(bytes.size() == 11 + 12);
    CHECK_THROWS_AS(axial_slice(v, 2), DimensionError);

    PlotSeries s;
    s.x = {0.1, 0.5, 0.9};
    s.y = {0.4, 0.2, 0.1};
    s.error = {0.05, 0.02, 0.01};
    const auto plot = render_line_plot({s}, 200, 100);
    CHECK(plot.pixels.size() == 200 * 100 * 3);
    std::size_t red = 0;
    for (std::size_t i = 0; i < plot.pixels.size(); i += 3) red += plot.pixels[i] == 200 && plot.pixels[i + 1] == 30;
    CHECK(red > 50);
    const auto ppm = encode_ppm(plot);
    CHECK(std::string(ppm.begin(), ppm.begin() + 2) == "P6");
    s.error = {1.0};
    CHECK_THROWS_AS(render_line_plot({s}), DimensionError);
}
