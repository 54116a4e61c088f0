#include <doctest.h>

#include <sstream>

#include "autocenet/metrics.hpp"
#include "metric_oracles.hpp"
#include "support.hpp"

using namespace autocenet;

using test::random_pair_member;

TEST_CASE("accelerated distances equal the all-pairs oracle") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::size_t> dim(2, 16);
    std::uniform_real_distribution<double> sp(0.5, 2.5);
    for (int trial = 0; trial < 100; ++trial) {
        const Dims3 d{dim(rng), dim(rng), dim(rng)};
        const Spacing3 s{sp(rng), sp(rng), sp(rng)};
        const auto a = random_pair_member(rng, d, s);
        const auto b = random_pair_member(rng, d, s);
        const auto fast = evaluate(a, b);
        const auto brute = evaluate(a, b, DistanceMode::brute_force);
        const auto ref = oracle::distances(a, b);
        REQUIRE(fast.hd);
        CHECK(std::abs(*fast.hd - ref.hd) <= 1e-9);
        CHECK(std::abs(*fast.hd95 - ref.hd95) <= 1e-9);
        CHECK(std::abs(*fast.assd - ref.assd) <= 1e-9);
        CHECK(std::abs(*brute.hd - ref.hd) <= 1e-9);
        CHECK(std::abs(*brute.assd - ref.assd) <= 1e-9);
    }
}

TEST_CASE("evaluate(x, x) is the perfect report") {
    std::mt19937_64 rng(2);
    const auto a = random_pair_member(rng, {10, 12, 8}, {0.8, 0.8, 2.0});
    const auto r = evaluate(a, a);
    CHECK(r.dsc == 1.0);
    CHECK(r.precision == 1.0);
    CHECK(r.sensitivity == 1.0);
    CHECK(*r.hd == 0.0);
    CHECK(*r.hd95 == 0.0);
    CHECK(*r.assd == 0.0);
    CHECK(r.fp == 0);
    CHECK(r.fn == 0);
}

TEST_CASE("distances scale linearly with isotropic spacing") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        auto a = random_pair_member(rng, {12, 10, 8}, {1, 1, 1});
        auto b = random_pair_member(rng, {12, 10, 8}, {1, 1, 1});
        const auto r1 = evaluate(a, b);
        a.set_spacing({2, 2, 2});
        b.set_spacing({2, 2, 2});
        const auto r2 = evaluate(a, b);
        CHECK(*r2.hd == 2.0 * *r1.hd);
        CHECK(*r2.hd95 == 2.0 * *r1.hd95);
        CHECK(*r2.assd == doctest::Approx(2.0 * *r1.assd).epsilon(1e-15));
        CHECK(r2.dsc == r1.dsc);
    }
}

TEST_CASE("overlap scores and reported-value cross-checks") {
    CHECK(std::round(f1_from(0.95, 0.97) * 1e4) / 1e4 == doctest::Approx(0.9599));
    CHECK(std::round(relative_reduction(16.68, 14.96) * 1e4) / 1e2 == doctest::Approx(10.31));
    CHECK(std::round(relative_reduction(0.94, 0.82) * 1e4) / 1e2 == doctest::Approx(12.77));
    const auto s = f1_precision_sensitivity(8, 2, 4);
    CHECK(s.precision == doctest::Approx(0.8));
    CHECK(s.sensitivity == doctest::Approx(8.0 / 12.0));
    CHECK(s.f1 == doctest::Approx(16.0 / 22.0));
    CHECK(f1_precision_sensitivity(0, 0, 0).f1 == 1.0);
    CHECK(f1_precision_sensitivity(0, 3, 0).f1 == 0.0);
}

TEST_CASE("empty surfaces leave distances undefined") {
    LabelVolume empty({4, 4, 4}, {1, 1, 1});
    LabelVolume one = empty;
    one.at(1, 1, 1) = 1;
    const auto r = evaluate(empty, one);
    CHECK_FALSE(r.hd);
    CHECK_FALSE(r.assd);
    CHECK_THROWS_AS(hausdorff(extract_surface(empty), extract_surface(one)), UndefinedMetric);
    CHECK_THROWS_AS(evaluate(one, LabelVolume({4, 4, 3}, {1, 1, 1})), DimensionError);
}

TEST_CASE("nearest-rank quantile and k-d tree") {
    CHECK(nearest_rank_quantile({5, 1, 4, 2, 3}, 1.0) == 5);
    CHECK(nearest_rank_quantile({5, 1, 4, 2, 3}, 0.5) == 3);
    std::vector<double> v(20);
    for (int i = 0; i < 20; ++i) v[i] = i + 1;
    CHECK(nearest_rank_quantile(v, 0.95) == 19);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-10, 10);
    std::vector<Point3> pts(300);
    for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
    NearestNeighborIndex index(pts);
    for (int q = 0; q < 200; ++q) {
        const Point3 p{u(rng), u(rng), u(rng)};
        double best = 1e300;
        for (const auto& r : pts) best = std::min(best, std::pow(p.x - r.x, 2) + std::pow(p.y - r.y, 2) + std::pow(p.z - r.z, 2));
        CHECK(index.nearest_squared(p) == best);
    }
}

TEST_CASE("report CSV round-trip and aggregate") {
    std::mt19937_64 rng(5);
    std::vector<CaseReport> rows;
    for (int i = 0; i < 6; ++i) {
        const auto a = random_pair_member(rng, {8, 8, 8}, {0.7, 0.9, 1.3});
        const auto b = random_pair_member(rng, {8, 8, 8}, {0.7, 0.9, 1.3});
        rows.push_back({"c" + std::to_string(i), evaluate(a, b)});
    }
    rows.push_back({"empty", evaluate(LabelVolume({3, 3, 3}, {1, 1, 1}), LabelVolume({3, 3, 3}, {1, 1, 1}))});
    std::stringstream ss;
    write_metrics_csv(ss, rows);
    const auto back = read_metrics_csv(ss);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].case_id == rows[i].case_id);
        CHECK(back[i].report == rows[i].report);
    }
    const auto agg = aggregate(rows);
    double mean = 0;
    for (const auto& r : rows) mean += r.report.dsc;
    mean /= rows.size();
    CHECK(std::abs(agg.dsc.mean - mean) <= 1e-9);
    CHECK(agg.hd.count == rows.size() - 1);

    std::vector<CaseReport> perfect;
    for (int i = 0; i < 3; ++i) {
        const auto a = random_pair_member(rng, {8, 8, 8}, {1, 1, 1});
        perfect.push_back({"p", evaluate(a, a)});
    }
    const auto p = aggregate(perfect);
    CHECK(p.dsc.mean == 1.0);
    CHECK(p.dsc.std == 0.0);
    std::stringstream agg_csv;
    write_aggregate_csv(agg_csv, p);
    CHECK(agg_csv.str().find("1.00±0.00") != std::string::npos);
}
