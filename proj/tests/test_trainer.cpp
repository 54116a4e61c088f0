#include <doctest.h>

#include <filesystem>

#include "autocenet/checkpoint.hpp"
#include "autocenet/trainer.hpp"
#include "support.hpp"

using namespace autocenet;
namespace fs = std::filesystem;

namespace {

const Dims3 kDims{16, 16, 8};

NetworkConfig small_net() {
    auto c = NetworkConfig::desk();
    c.input_dims = kDims;
    c.base_width = c.context_width = c.prior_width = c.contour_width = c.fusion_width = 8;
    return c;
}

TrainConfig quick(std::size_t iterations) {
    TrainConfig t;
    t.iterations = iterations;
    t.seed = 11;
    return t;
}

double conv_norm(const Network& net) {
    double s = 0;
    for (const auto& p : net.parameters()) {
        if (p.kind != ParamKind::conv_weight) continue;
        for (float v : p.tensor.data()) s += double(v) * v;
    }
    return s;
}

}  // namespace

TEST_CASE("training is deterministic given the seed") {
    const auto data = make_phantom_dataset(2, 1, kDims);
    Network a(small_net(), 5), b(small_net(), 5);
    Trainer ta(a, data, quick(10)), tb(b, data, quick(10));
    const auto ra = ta.run();
    const auto rb = tb.run();
    REQUIRE(ra.iterations.size() == 10);
    CHECK(encode_checkpoint(ta.checkpoint()) == encode_checkpoint(tb.checkpoint()));
    for (std::size_t i = 0; i < 10; ++i) CHECK(ra.iterations[i].total == rb.iterations[i].total);
    CHECK(ra.iterations[0].prior_loss > 0.0);
    CHECK(ra.iterations[0].contour_loss > 0.0);
}

TEST_CASE("resuming from a checkpoint matches the uninterrupted run") {
    const auto data = make_phantom_dataset(3, 2, kDims);
    auto cfg = quick(16);
    cfg.recalibrate_batch_norm = false;
    Network full(small_net(), 6);
    Trainer tf(full, data, cfg);
    const auto whole = tf.run();

    Network first(small_net(), 6);
    auto half = cfg;
    half.iterations = 8;
    Trainer t1(first, data, half);
    t1.run();
    const auto bytes = encode_checkpoint(t1.checkpoint());

    Network resumed(small_net(), 99);
    Trainer t2(resumed, data, cfg);
    t2.restore(decode_checkpoint(bytes));
    CHECK(t2.iteration() == 8);
    const auto rest = t2.run();
    REQUIRE(rest.iterations.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(rest.iterations[i].iteration == whole.iterations[8 + i].iteration);
        CHECK(std::abs(rest.iterations[i].total - whole.iterations[8 + i].total) <= 1e-6);
    }
    CHECK(encode_checkpoint(t2.checkpoint()) == encode_checkpoint(tf.checkpoint()));
}

TEST_CASE("learning rate halves every 10 epochs") {
    const auto data = make_phantom_dataset(1, 3, kDims);
    Network net(small_net(), 1);
    auto cfg = quick(21);
    Trainer t(net, data, cfg);
    const auto r = t.run();
    CHECK(r.iterations[9].epoch == 9);
    CHECK(r.iterations[10].epoch == 10);
    CHECK(r.iterations[10].lr == 0.5 * r.iterations[9].lr);
    CHECK(r.iterations[20].lr == 0.25 * cfg.lr);
}

TEST_CASE("weight decay shrinks the kernels") {
    const auto data = make_phantom_dataset(1, 4, kDims);
    Network with(small_net(), 2), without(small_net(), 2);
    auto cfg = quick(6);
    train(with, data, cfg);
    cfg.loss.gamma = 0.0;
    train(without, data, cfg);
    CHECK(conv_norm(with) < conv_norm(without));
}

TEST_CASE("every ablation trains") {
    const auto data = make_phantom_dataset(1, 5, kDims);
    for (auto ab : all_ablations()) {
        INFO(to_string(ab));
        Network net(apply_ablation(small_net(), ab), 3);
        const auto r = train(net, data, quick(3));
        CHECK(r.iterations.size() == 3);
        CHECK(std::isfinite(r.iterations.back().total));
        CHECK((r.iterations.back().contour_loss > 0.0) == net.config().has_contour_branch());
        CHECK((r.iterations.back().prior_loss > 0.0) == net.config().prior_supervised());
    }
}

TEST_CASE("gradient accumulation over a batch") {
    const auto data = make_phantom_dataset(2, 6, kDims);
    Network net(small_net(), 4);
    auto cfg = quick(3);
    cfg.batch_size = 2;
    Trainer t(net, data, cfg);
    const auto r = t.run();
    CHECK(r.iterations.size() == 3);
    CHECK(r.iterations[1].epoch == 1);
}

TEST_CASE("non-finite loss aborts with a dump of the sample") {
    auto data = make_phantom_dataset(1, 7, kDims);
    data[0].image[5] = std::numeric_limits<float>::quiet_NaN();
    Network net(small_net(), 1);
    auto cfg = quick(2);
    cfg.augment_probability = 0.0;
    cfg.checkpoint_dir = fs::temp_directory_path() / "autocenet_test_nan";
    fs::remove_all(cfg.checkpoint_dir);
    CHECK_THROWS_AS(train(net, data, cfg), NumericError);
    CHECK(fs::exists(cfg.checkpoint_dir / "numeric_failure" / "case_000_image.vol"));
    CHECK_THROWS_AS(Trainer(net, {}, cfg), DataError);
    cfg.lr = -1;
    CHECK_THROWS_AS(Trainer(net, data, cfg), ConfigError);
}

TEST_CASE("checkpoints, validation and best model") {
    const auto data = make_phantom_dataset(2, 8, kDims);
    const auto val = make_phantom_dataset(1, 9, kDims);
    Network net(small_net(), 1);
    auto cfg = quick(4);
    cfg.checkpoint_every = 2;
    cfg.checkpoint_dir = fs::temp_directory_path() / "autocenet_test_ckpts";
    fs::remove_all(cfg.checkpoint_dir);
    const auto r = train(net, data, cfg, val);
    CHECK(r.validation.size() == 2);
    REQUIRE(r.best_epoch);
    CHECK(fs::exists(cfg.checkpoint_dir / "iter_2.ckpt"));
    CHECK(fs::exists(cfg.checkpoint_dir / "iter_4.ckpt"));
    CHECK(fs::exists(cfg.checkpoint_dir / "best.ckpt"));
    CHECK(counter_from_blob(find_blob(load_checkpoint(cfg.checkpoint_dir / "iter_2.ckpt"), "train.iteration")) == 2);
}

TEST_CASE("batch-norm recalibration forgets the previous statistics") {
    const auto data = make_phantom_dataset(2, 10, kDims);
    Network a(small_net(), 1), b(small_net(), 1);
    for (auto& buf : b.buffers()) {
        for (auto& v : buf.stats->running_mean) v = 123.0f;
        for (auto& v : buf.stats->running_var) v = 7.0f;
    }
    recalibrate_batch_norm(a, data);
    recalibrate_batch_norm(b, data);
    CHECK(network_state(a) == network_state(b));
    for (const auto& buf : a.buffers()) CHECK(buf.stats->momentum == 0.1);
    CHECK_THROWS_AS(recalibrate_batch_norm(a, {}), DataError);
}

TEST_CASE("evaluation records per-case failures") {
    auto data = make_phantom_dataset(2, 11, kDims);
    Network net(small_net(), 1);
    data.push_back({"odd", Volume({8, 8, 8}, {1, 1, 1}), LabelVolume({8, 8, 8}, {1, 1, 1})});
    const auto r = evaluate_run(net, data);
    CHECK(r.cases.size() == 2);
    REQUIRE(r.failures.size() == 1);
    CHECK(r.failures[0].case_id == "odd");
    CHECK(r.predictions.size() == 2);
    CHECK(r.mean_dice_loss > 0.0);
    CHECK(std::abs(r.aggregate.dsc.mean - (r.cases[0].report.dsc + r.cases[1].report.dsc) / 2) <= 1e-9);
}

TEST_CASE("contour weight map changes only where the prediction changed") {
    std::mt19937_64 rng(3);
    auto gamma = test::random_tensor({1, 1, 6, 6, 4}, rng, 0, 1);
    for (auto& v : gamma.data()) v = v > 0.6f ? 1.0f : 0.0f;
    auto y0 = test::random_tensor({1, 1, 6, 6, 4}, rng, 0, 1);
    auto y1 = y0.clone();
    std::bernoulli_distribution change(0.2);
    std::vector<bool> changed(y0.numel());
    for (std::size_t i = 0; i < y1.numel(); ++i) {
        if (change(rng)) {
            y1.data()[i] = std::uniform_real_distribution<float>(0, 1)(rng);
            changed[i] = true;
        }
    }
    const auto w0 = contour_weight_map(gamma, y0), w1 = contour_weight_map(gamma, y1);
    for (std::size_t i = 0; i < y0.numel(); ++i) {
        if (!changed[i]) CHECK(w0.data()[i] == w1.data()[i]);
    }
}

TEST_CASE("n-fold study plans, trains and reports a curve") {
    const auto data = make_phantom_dataset(6, 12, kDims);
    XvalOptions o;
    o.fractions = {0.5, 1.0};
    o.seeds = {1, 2};
    o.test_fraction = 1.0 / 3.0;
    const auto r = nfold_study(data, o, small_net(), quick(2));
    CHECK(r.runs.size() == 4);
    REQUIRE(r.curve.size() == 2);
    CHECK(r.curve[0].dice_loss.count == 2);
    for (const auto& plan : r.plans) {
        CHECK(plan.test.size() == 2);
        for (const auto& split : plan.fractions)
            for (const auto& id : split.train) CHECK(std::find(plan.test.begin(), plan.test.end(), id) == plan.test.end());
    }
    o.fractions = {1.0};
    o.seeds = {3};
    const auto single = nfold_study(data, o, small_net(), quick(1));
    CHECK(single.runs.size() == 1);
    CHECK(single.runs[0].train_cases == 4);
}
