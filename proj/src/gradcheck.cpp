#include "autocenet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "autocenet/layers.hpp"
#include "autocenet/losses.hpp"
#include "autocenet/ops.hpp"

namespace autocenet {

bool gradient_matches(double analytic, double numeric, const GradCheckOptions& options) {
    const double abs_err = std::abs(analytic - numeric);
    if (std::abs(analytic) < options.abs_tolerance) return abs_err <= options.abs_tolerance;
    const double denom = std::max(std::abs(analytic), std::abs(numeric));
    return abs_err / denom <= options.rel_tolerance;
}

GradCheckResult check_gradients(const std::string& name, const std::vector<TensorD>& leaves,
                                const std::function<TensorD()>& loss_fn, std::uint64_t seed,
                                const GradCheckOptions& options) {
    for (auto leaf : leaves) {
        if (!leaf.requires_grad()) throw UsageError("check_gradients: leaf does not require gradients");
        leaf.zero_grad();
    }
    backward(loss_fn());
    std::vector<std::vector<double>> analytic;
    for (const auto& leaf : leaves) analytic.emplace_back(leaf.grad().begin(), leaf.grad().end());

    GradCheckResult result{name};
    std::mt19937_64 rng(seed);
    NoGradGuard no_grad;
    for (std::size_t l = 0; l < leaves.size(); ++l) {
        auto leaf = leaves[l];
        auto values = leaf.data();
        const std::size_t probes = std::min(options.coordinates, values.size());
        std::vector<std::size_t> coords(values.size());
        for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
        std::shuffle(coords.begin(), coords.end(), rng);
        std::size_t checked = 0;
        for (std::size_t c : coords) {
            if (checked == probes) break;
            const double original = values[c];
            auto evaluate = [&](double v, std::vector<bool>& pattern) {
                values[c] = v;
                ReluPatternRecorder recorder;
                const double out = loss_fn().item();
                pattern = recorder.pattern();
                return out;
            };
            std::vector<bool> centre, up, down;
            evaluate(original, centre);
            const double plus = evaluate(original + options.step, up);
            const double minus = evaluate(original - options.step, down);
            values[c] = original;
            if (up != centre || down != centre) {
                ++result.skipped;
                continue;
            }
            const double numeric = (plus - minus) / (2.0 * options.step);
            const double a = analytic[l][c];
            const double abs_err = std::abs(a - numeric);
            const double denom = std::max(std::abs(a), std::abs(numeric));
            result.max_abs_error = std::max(result.max_abs_error, abs_err);
            if (denom > 0) result.max_rel_error = std::max(result.max_rel_error, abs_err / denom);
            if (!gradient_matches(a, numeric, options)) ++result.failures;
            ++result.coordinates;
            ++checked;
        }
    }
    return result;
}

namespace {

TensorD random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(numel(shape));
    for (auto& x : v) x = dist(rng);
    return TensorD(shape, std::move(v), true);
}

TensorD random_binary(const Shape& shape, std::mt19937_64& rng, double p = 0.3) {
    std::bernoulli_distribution coin(p);
    std::vector<double> v(numel(shape));
    for (auto& x : v) x = coin(rng) ? 1.0 : 0.0;
    return TensorD(shape, std::move(v));
}

// Projects a tensor-valued output onto a fixed random direction.
TensorD project(const TensorD& out, const TensorD& direction) { return sum(mul(out, direction)); }

TensorD direction_for(const Shape& shape, std::mt19937_64& rng) {
    auto d = random_tensor(shape, rng);
    d.set_requires_grad(false);
    return d;
}

std::vector<TensorD> parameter_tensors(const std::vector<ParameterRef<double>>& params) {
    std::vector<TensorD> out;
    for (const auto& p : params) out.push_back(p.tensor);
    return out;
}

}  // namespace

std::vector<GradCheckResult> run_gradient_suite(std::uint64_t seed, const GradCheckOptions& options) {
    std::mt19937_64 rng(seed);
    std::vector<GradCheckResult> results;
    auto run = [&](const std::string& name, const std::vector<TensorD>& leaves, const std::function<TensorD()>& f) {
        results.push_back(check_gradients(name, leaves, f, rng(), options));
    };

    {
        auto x = random_tensor({2, 4, 4, 4, 4}, rng);
        auto w = random_tensor({6, 2, 3, 3, 3}, rng);
        auto b = random_tensor({6}, rng);
        auto r = direction_for({2, 6, 4, 4, 4}, rng);
        run("conv3d k3 groups2", {x, w, b}, [=] { return project(conv3d(x, w, b, 1, 2), r); });
    }
    {
        auto x = random_tensor({1, 3, 4, 4, 2}, rng);
        auto w = random_tensor({5, 3, 2, 2, 2}, rng);
        auto r = direction_for({1, 5, 2, 2, 1}, rng);
        run("conv3d k2 stride2", {x, w}, [=] { return project(conv3d(x, w, TensorD{}, 2, 1), r); });
    }
    {
        auto x = random_tensor({2, 4, 2, 3, 2}, rng);
        auto w = random_tensor({3, 4, 1, 1, 1}, rng);
        auto b = random_tensor({3}, rng);
        auto r = direction_for({2, 3, 2, 3, 2}, rng);
        run("conv3d k1", {x, w, b}, [=] { return project(conv3d(x, w, b, 1, 1), r); });
    }
    {
        auto x = random_tensor({2, 3, 2, 2, 3}, rng);
        auto w = random_tensor({3, 4, 2, 2, 2}, rng);
        auto b = random_tensor({4}, rng);
        auto r = direction_for({2, 4, 4, 4, 6}, rng);
        run("conv_transpose3d", {x, w, b}, [=] { return project(conv_transpose3d(x, w, b, 2), r); });
    }
    {
        auto x = random_tensor({2, 3, 3, 2, 2}, rng);
        auto g = random_tensor({3}, rng, 0.5, 1.5);
        auto b = random_tensor({3}, rng);
        auto r = direction_for({2, 3, 3, 2, 2}, rng);
        auto stats = std::make_shared<BatchNormStats<double>>(3);
        run("batch_norm3d", {x, g, b}, [=] { return project(batch_norm3d(x, g, b, *stats, Mode::train), r); });
    }
    {
        // Keep values away from the kink so the finite difference is smooth.
        auto x = random_tensor({1, 2, 3, 3, 3}, rng);
        for (auto& v : x.data()) v = v < 0 ? v - 0.05 : v + 0.05;
        auto r = direction_for({1, 2, 3, 3, 3}, rng);
        run("relu", {x}, [=] { return project(relu(x), r); });
    }
    {
        auto a = random_tensor({1, 2, 3, 2, 2}, rng);
        auto b = random_tensor({1, 2, 3, 2, 2}, rng);
        auto r = direction_for({1, 2, 3, 2, 2}, rng);
        run("add", {a, b}, [=] { return project(add(a, b), r); });
        run("sub", {a, b}, [=] { return project(sub(a, b), r); });
        run("mul", {a, b}, [=] { return project(mul(a, b), r); });
        run("scale", {a}, [=] { return project(scale(a, 1.7), r); });
    }
    {
        auto a = random_tensor({2, 3, 2, 2, 2}, rng);
        auto b = random_tensor({2, 5, 2, 2, 2}, rng);
        auto r = direction_for({2, 8, 2, 2, 2}, rng);
        run("concat_channels", {a, b}, [=] { return project(concat_channels<double>({a, b}), r); });
    }
    {
        auto x = random_tensor({2, 3, 2, 2, 2}, rng);
        auto att = random_tensor({3}, rng);
        auto r = direction_for({2, 3, 2, 2, 2}, rng);
        run("scale_channels", {x, att}, [=] { return project(scale_channels(x, att), r); });
    }
    {
        auto x = random_tensor({2, 3, 2, 2, 2}, rng, -3.0, 3.0);
        auto r = direction_for({2, 3, 2, 2, 2}, rng);
        run("channel_softmax", {x}, [=] { return project(channel_softmax(x), r); });
        auto r1 = direction_for({2, 1, 2, 2, 2}, rng);
        run("select_channel", {x}, [=] { return project(select_channel(x, 1), r1); });
        run("sum", {x}, [=] { return sum(mul(x, x)); });
        run("sum_squares", {x}, [=] { return sum_squares(x); });
    }

    // Losses.
    {
        auto p = random_tensor({1, 1, 4, 4, 2}, rng, 0.05, 0.95);
        auto t = random_binary({1, 1, 4, 4, 2}, rng);
        run("soft_dice_loss", {p}, [=] { return soft_dice_loss(p, t); });
        auto logits = random_tensor({1, 2, 4, 4, 2}, rng, -2.0, 2.0);
        run("liver_prior_loss", {logits}, [=] { return liver_prior_loss(logits, t); });

        auto yc = random_tensor({1, 1, 4, 4, 2}, rng, 0.05, 0.95);
        auto contour = random_binary({1, 1, 4, 4, 2}, rng);
        auto fg = random_tensor({1, 1, 4, 4, 2}, rng, 0.0, 1.0);
        fg.set_requires_grad(false);
        auto wmap = contour_weight_map(contour, fg);
        run("penalized_contour_loss", {yc}, [=] { return penalized_contour_loss(yc, contour, wmap, 1.0, 10.0); });
        run("full_contour_loss", {yc}, [=] { return full_contour_loss(yc, contour, 1.0, 10.0); });
        run("manual_selfsup_contour_loss", {yc},
            [=] { return manual_selfsup_contour_loss(yc, contour, fg, 0.5, 1.0, 10.0); });

        auto w = random_tensor({2, 2, 3, 3, 3}, rng);
        auto bias = random_tensor({2}, rng);
        std::vector<ParameterRef<double>> params{{"w", w, ParamKind::conv_weight}, {"b", bias, ParamKind::bias}};
        LossWeights weights;
        run("total_loss", {p, logits, yc, w}, [=] {
            return total_loss(soft_dice_loss(p, t), liver_prior_loss(logits, t),
                              penalized_contour_loss(yc, contour, wmap, weights.w0, weights.w1), weights, params);
        });
    }

    // Composite blocks (train-mode batch norm).
    {
        Rng init(rng());
        auto layer = std::make_shared<SeparableConv<double>>(SeparableConvSpec{4, 8, 4, 3, true}, init);
        std::vector<ParameterRef<double>> params;
        layer->collect("sc", params);
        auto x = random_tensor({1, 4, 4, 4, 2}, rng);
        auto r = direction_for({1, 8, 4, 4, 2}, rng);
        auto leaves = parameter_tensors(params);
        leaves.push_back(x);
        run("separable_conv", leaves, [=] { return project(layer->forward(x), r); });
    }
    {
        Rng init(rng());
        SkipAttentionSpec spec{2, 4, {4, 4}, 2, true};
        auto block = std::make_shared<SkipAttentionBlock<double>>(spec, init);
        for (auto& v : block->attention.data()) v = 0.8 + 0.4 * std::uniform_real_distribution<double>()(rng);
        std::vector<ParameterRef<double>> params;
        block->collect("sa", params);
        auto x = random_tensor({2, 2, 4, 4, 2}, rng);
        auto r = direction_for({2, 4, 4, 4, 2}, rng);
        auto leaves = parameter_tensors(params);
        leaves.push_back(x);
        run("skip_attention_block", leaves, [=] { return project(block->forward(x, Mode::train), r); });
    }
    {
        Rng init(rng());
        VTransitionSpec spec{4, 4, 4, 2, 2, true};
        auto block = std::make_shared<VTransition<double>>(spec, init);
        std::vector<ParameterRef<double>> params;
        block->collect("vt", params);
        auto x = random_tensor({2, 4, 4, 4, 4}, rng);
        auto r = direction_for({2, 4, 4, 4, 4}, rng);
        auto leaves = parameter_tensors(params);
        leaves.push_back(x);
        run("v_transition", leaves, [=] { return project(block->forward(x, Mode::train), r); });
    }
    return results;
}

}  // namespace autocenet
