#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "autocenet/checkpoint.hpp"
#include "autocenet/gradcheck.hpp"
#include "autocenet/trainer.hpp"
#include "loss_oracles.hpp"
#include "metric_oracles.hpp"
#include "support.hpp"

using namespace autocenet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (pass) detail << "FAILED: ";
            else detail << "; ";
            detail << what;
        }
        pass = pass && ok;
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

TensorD uniform(const Shape& s, std::mt19937_64& rng, double lo, double hi) {
    return test::random_tensor<double>(s, rng, lo, hi);
}

TensorD binary(const Shape& s, std::mt19937_64& rng, double density = 0.4) {
    std::bernoulli_distribution b(density);
    std::vector<double> v(numel(s));
    for (auto& x : v) x = b(rng) ? 1.0 : 0.0;
    return TensorD(s, v);
}

void criterion_1(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    GradCheckOptions opts;
    opts.step = 1e-3;
    opts.rel_tolerance = 1e-3;
    opts.abs_tolerance = 1e-6;
    opts.coordinates = 20;
    const auto results = run_gradient_suite(1, opts);
    std::size_t failed = 0;
    double worst = 0;
    for (const auto& r : results) {
        o.require(r.coordinates >= 20, r.name + " probed fewer than 20 coordinates");
        if (!r.passed()) {
            ++failed;
            o.require(false, r.name + " rel=" + std::to_string(r.max_rel_error));
        }
        worst = std::max(worst, r.max_rel_error);
    }
    const double secs = seconds_since(t0);
    o.require(results.size() > 0, "empty gradient suite");
    o.require(secs <= 120.0, "runtime above 2 min");
    o.detail << " checks=" << results.size() << " failed=" << failed << " worst_rel=" << worst << " time=" << secs
             << "s";
}

void criterion_2(Outcome& o) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> wdist(0.1, 20.0), pdist(0.2, 0.8), u(0, 2);
    double worst = 0;
    const auto track = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };
    for (int trial = 0; trial < 50; ++trial) {
        const Shape s{1, 1, 3, 4, 2};
        auto p = uniform(s, rng, 0, 1);
        auto t = binary(s, rng);
        track(soft_dice_loss(p, t).item(), oracle::soft_dice(test::doubles(p), test::doubles(t)));

        auto v0 = uniform({1, 2, 3, 4, 2}, rng, -3, 3);
        auto v1 = uniform({1, 2, 3, 4, 2}, rng, -3, 3);
        track(liver_prior_loss(sub(v0, v1), t).item(),
              oracle::liver_prior(test::doubles(v0), test::doubles(v1), test::doubles(t)));

        auto yc = uniform(s, rng, 0.01, 0.99);
        auto gamma = binary(s, rng);
        auto yl = uniform(s, rng, 0, 1);
        const double w0 = wdist(rng), w1 = wdist(rng), thr = pdist(rng);
        track(penalized_contour_loss(yc, gamma, contour_weight_map(gamma, yl), w0, w1).item(),
              oracle::penalized_contour(test::doubles(yc), test::doubles(gamma), test::doubles(yl), w0, w1));
        track(manual_selfsup_contour_loss(yc, gamma, yl, thr, w0, w1).item(),
              oracle::manual_contour(test::doubles(yc), test::doubles(gamma), test::doubles(yl), thr, w0, w1));

        std::vector<ParameterRef<double>> params{
            {"a.weight", uniform({2, 2, 3, 3, 3}, rng, -1, 1), ParamKind::conv_weight},
            {"a.bias", uniform({2}, rng, -1, 1), ParamKind::bias},
            {"n.gamma", uniform({2}, rng, -1, 1), ParamKind::norm_affine},
            {"att", uniform({2}, rng, -1, 1), ParamKind::attention},
            {"b.weight", uniform({3, 2, 1, 1, 1}, rng, -1, 1), ParamKind::conv_weight},
        };
        LossWeights w;
        w.alpha = u(rng);
        w.beta = u(rng);
        w.gamma = u(rng);
        const double lf = u(rng), lp = u(rng), lc = u(rng);
        track(total_loss(TensorD::scalar(lf), TensorD::scalar(lp), TensorD::scalar(lc), w, params).item(),
              oracle::total(lf, lp, lc, w, params));
    }
    o.require(worst <= 1e-6, "oracle mismatch");
    o.detail << " trials=50x5 max_abs_diff=" << worst;
}

void criterion_3(Outcome& o) {
    std::mt19937_64 rng(7);
    auto label = binary({1, 1, 6, 6, 4}, rng, 0.5);
    auto gamma = label.clone();
    for (std::size_t i = 0; i < gamma.numel(); i += 3) gamma.data()[i] = 0.0;
    const auto hat = contour_weight_map(gamma, label);
    bool zero = true;
    for (double v : hat.data()) zero = zero && v == 0.0;
    o.require(zero, "weight map not zero under perfect prediction");

    bool equal = true;
    for (int trial = 0; trial < 20; ++trial) {
        auto yc = uniform(label.shape(), rng, 0.01, 0.99);
        auto g = binary(label.shape(), rng);
        const auto w = contour_weight_map(g, TensorD::zeros(label.shape()));
        equal = equal && penalized_contour_loss(yc, g, w, 1.0, 10.0).item() == full_contour_loss(yc, g, 1.0, 10.0).item();
    }
    o.require(equal, "penalized != full with zero prediction");

    std::uniform_real_distribution<double> u(0, 1);
    std::size_t violations = 0;
    for (int i = 0; i < 1000; ++i) {
        double a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        const auto g = TensorD({1, 1, 1, 1, 1}, {1.0});
        const auto y = TensorD({1, 1, 1, 1, 1}, {u(rng) * 0.98 + 0.01});
        const auto ha = contour_weight_map(g, TensorD({1, 1, 1, 1, 1}, {a}));
        const auto hb = contour_weight_map(g, TensorD({1, 1, 1, 1, 1}, {b}));
        if (ha.item() < hb.item()) ++violations;
        if (penalized_contour_loss(y, g, ha, 1.0, 10.0).item() < penalized_contour_loss(y, g, hb, 1.0, 10.0).item())
            ++violations;
    }
    o.require(violations == 0, "monotonicity violated");
    o.detail << " monotonicity_voxels=1000 violations=" << violations;
}

void criterion_4(Outcome& o) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::size_t> dim(2, 16);
    std::uniform_real_distribution<double> sp(0.5, 2.5);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Dims3 d{dim(rng), dim(rng), dim(rng)};
        const Spacing3 s{sp(rng), sp(rng), sp(rng)};
        const auto a = test::random_pair_member(rng, d, s);
        const auto b = test::random_pair_member(rng, d, s);
        const auto fast = evaluate(a, b);
        const auto ref = oracle::distances(a, b);
        if (!fast.hd || !fast.hd95 || !fast.assd) {
            o.require(false, "undefined distance");
            continue;
        }
        worst = std::max({worst, std::abs(*fast.hd - ref.hd), std::abs(*fast.hd95 - ref.hd95),
                          std::abs(*fast.assd - ref.assd)});
    }
    o.require(worst <= 1e-9, "accelerated distances differ from brute force");

    const auto x = test::random_pair_member(rng, {12, 12, 8}, {0.8, 0.8, 2.0});
    const auto p = evaluate(x, x);
    o.require(p.dsc == 1.0 && p.precision == 1.0 && p.sensitivity == 1.0 && p.hd == 0.0 && p.hd95 == 0.0 &&
                  p.assd == 0.0 && p.fp == 0 && p.fn == 0,
              "evaluate(x,x) not perfect");

    bool linear = true;
    for (int trial = 0; trial < 10; ++trial) {
        auto a = test::random_pair_member(rng, {12, 10, 8}, {1, 1, 1});
        auto b = test::random_pair_member(rng, {12, 10, 8}, {1, 1, 1});
        const auto r1 = evaluate(a, b);
        a.set_spacing({2, 2, 2});
        b.set_spacing({2, 2, 2});
        const auto r2 = evaluate(a, b);
        linear = linear && *r2.hd == 2 * *r1.hd && *r2.hd95 == 2 * *r1.hd95 &&
                 std::abs(*r2.assd - 2 * *r1.assd) <= 1e-12 && r2.dsc == r1.dsc;
    }
    o.require(linear, "spacing linearity");

    const double f1 = std::round(f1_from(0.95, 0.97) * 1e4) / 1e4;
    const double hd_red = std::round(relative_reduction(16.68, 14.96) * 1e4) / 1e2;
    const double assd_red = std::round(relative_reduction(0.94, 0.82) * 1e4) / 1e2;
    o.require(std::abs(f1 - 0.9599) < 1e-12, "F1 cross-check");
    o.require(std::abs(hd_red - 10.31) < 1e-9, "HD reduction");
    o.require(std::abs(assd_red - 12.77) < 1e-9, "ASSD reduction");
    o.detail << " pairs=100 max_diff=" << worst << " F1=" << f1 << " HD_red=" << hd_red << "% ASSD_red=" << assd_red
             << "%";
}

std::vector<double> moving_average(const std::vector<double>& v, std::size_t window) {
    std::vector<double> out;
    double acc = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        acc += v[i];
        if (i >= window) acc -= v[i - window];
        if (i + 1 >= window) out.push_back(acc / static_cast<double>(window));
    }
    return out;
}

void criterion_5(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto net_config = NetworkConfig::desk();
    const auto data = make_phantom_dataset(2, 1, net_config.input_dims);
    Network net(net_config, 1);
    TrainConfig tc;
    tc.iterations = 300;
    tc.seed = 1;
    tc.augment_probability = 0.0;
    tc.decay_every_epochs = 1000;
    const auto record = train(net, data, tc);
    const double dsc = mean_dice(net, data);
    const double secs = seconds_since(t0);

    std::vector<double> losses;
    for (const auto& r : record.iterations) losses.push_back(r.total);
    const auto ma = moving_average(losses, 20);
    std::size_t rises = 0;
    for (std::size_t i = 1; i < ma.size(); ++i)
        if (ma[i] > ma[i - 1]) ++rises;
    o.require(dsc >= 0.95, "train DSC below 0.95");
    o.require(secs <= 600.0, "runtime above 10 min");
    o.require(rises == 0, "moving average rose " + std::to_string(rises) + " times");
    o.detail << " dsc=" << dsc << " loss " << losses.front() << "->" << losses.back() << " ma_rises=" << rises
             << " time=" << secs << "s";
}

void criterion_6(Outcome& o) {
    const auto base = NetworkConfig::desk();
    const auto data = make_phantom_dataset(2, 3, base.input_dims);
    std::size_t completed = 0;
    for (auto ab : all_ablations()) {
        const auto cfg = apply_ablation(base, ab);
        Network net(cfg, 2);
        TrainConfig tc;
        tc.iterations = 20;
        tc.seed = 2;
        try {
            const auto r = train(net, data, tc);
            bool finite = true;
            for (const auto& it : r.iterations) finite = finite && std::isfinite(it.total);
            o.require(r.iterations.size() == 20 && finite, to_string(ab) + " did not finish cleanly");
            ++completed;
        } catch (const NumericError& e) {
            o.require(false, to_string(ab) + ": " + e.what());
        }
        std::size_t attention = 0;
        for (const auto& p : net.parameters()) attention += p.kind == ParamKind::attention;
        o.require((attention == 0) == (ab == Ablation::att), to_string(ab) + " attention structure");
    }

    Network net(base, 4);
    std::mt19937_64 rng(4);
    const auto x = test::random_tensor({1, 1, 32, 32, 16}, rng, 0, 1);
    const auto before = test::doubles(net.forward(x, Mode::eval).prior_residual_logits);
    net.swap_prior_transitions();
    const auto after = test::doubles(net.forward(x, Mode::eval).prior_residual_logits);
    double worst = 0;
    for (std::size_t i = 0; i < before.size(); ++i) worst = std::max(worst, std::abs(before[i] + after[i]));
    o.require(worst == 0.0, "residual not antisymmetric");
    o.detail << " variants=" << completed << "/8 antisymmetry_max=" << worst;
}

void criterion_7(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto net_config = NetworkConfig::desk();
    const auto data = make_phantom_dataset(20, 100, net_config.input_dims);
    XvalOptions xo;
    xo.fractions = {0.1, 0.5, 0.9};
    xo.seeds = {1, 2, 3};

    FoldOptions fo;
    fo.mode = FoldMode::nfold_fractions;
    fo.fractions = xo.fractions;
    fo.test_fraction = xo.test_fraction;
    const auto ids = case_ids(data);
    for (auto seed : xo.seeds) {
        const auto plan = plan_folds(ids, seed, fo);
        const auto again = plan_folds(ids, seed, fo);
        o.require(plan.test == again.test && plan.pool == again.pool, "plan not deterministic");
        const std::set<std::string> test(plan.test.begin(), plan.test.end());
        for (const auto& split : plan.fractions) {
            for (const auto& id : split.train) o.require(!test.count(id), "train/test overlap");
        }
    }

    TrainConfig tc;
    tc.iterations = 150;
    const auto r = nfold_study(data, xo, net_config, tc);
    const double low = r.curve.front().dice_loss.mean, high = r.curve.back().dice_loss.mean;
    const double secs = seconds_since(t0);
    o.require(high <= low, "dice loss at 0.9 above 0.1");
    o.require(secs <= 1800.0, "runtime above 30 min");
    o.detail << " runs=" << r.runs.size();
    for (const auto& p : r.curve) o.detail << " loss@" << p.fraction << "=" << p.dice_loss.mean;
    o.detail << " time=" << secs << "s";
}

void criterion_8(Outcome& o) {
    auto net_config = NetworkConfig::desk();
    const auto data = make_phantom_dataset(2, 5, net_config.input_dims);
    const auto dir = fs::temp_directory_path() / "autocenet_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);

    for (const auto& c : data) {
        write_volume(c.image, dir / "img.vol");
        write_volume(c.label, dir / "lab.vol");
        const auto img = read_volume(dir / "img.vol");
        const auto lab = read_label_volume(dir / "lab.vol");
        o.require(img.dims() == c.image.dims() && img.spacing() == c.image.spacing() &&
                      std::memcmp(img.values().data(), c.image.values().data(), img.values().size() * 4) == 0,
                  ".vol image round-trip");
        o.require(lab.dims() == c.label.dims() && std::ranges::equal(lab.values(), c.label.values()), ".vol label round-trip");
        o.require(encode_volume(img) == encode_volume(c.image), ".vol bytes");
    }

    TrainConfig tc;
    tc.iterations = 20;
    tc.seed = 5;
    Network full(net_config, 5);
    Trainer whole(full, data, tc);
    const auto reference = whole.run();

    auto first = tc;
    first.iterations = 10;
    Network half(net_config, 5);
    Trainer t1(half, data, first);
    t1.run();
    const auto blobs = t1.checkpoint();
    save_checkpoint(blobs, dir / "half.ckpt");
    const auto loaded = load_checkpoint(dir / "half.ckpt");
    o.require(loaded == blobs, "checkpoint round-trip");
    o.require(encode_checkpoint(loaded) == encode_checkpoint(blobs), "checkpoint bytes");

    Network resumed_net(net_config, 77);
    Trainer t2(resumed_net, data, tc);
    t2.restore(loaded);
    const auto rest = t2.run();
    double worst = 0;
    o.require(rest.iterations.size() == 10, "resume ran wrong number of iterations");
    for (std::size_t i = 0; i < rest.iterations.size(); ++i)
        worst = std::max(worst, std::abs(rest.iterations[i].total - reference.iterations[10 + i].total));
    o.require(worst <= 1e-6, "resumed loss differs");
    o.detail << " resume_max_diff=" << worst;
    fs::remove_all(dir);
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::function<void(Outcome&)>> criteria{criterion_1, criterion_2, criterion_3, criterion_4,
                                                              criterion_5, criterion_6, criterion_7, criterion_8};
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));
    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int n = static_cast<int>(i) + 1;
        if (!selected.empty() && !selected.count(n)) continue;
        Outcome o;
        try {
            criteria[i](o);
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << " " << o.detail.str() << std::endl;
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
