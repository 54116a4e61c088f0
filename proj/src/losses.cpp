#include "autocenet/losses.hpp"

#include <algorithm>
#include <cmath>

namespace autocenet {

void LossWeights::validate() const {
    if (alpha < 0 || beta < 0 || gamma < 0 || w0 < 0 || w1 < 0) {
        throw ConfigError("loss weights must be non-negative");
    }
    if (!(manual_threshold > 0.0 && manual_threshold < 1.0)) {
        throw ConfigError("manual contour threshold must be in (0, 1)");
    }
}

namespace {

template <typename T>
void require_same(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape " + to_string(a.shape()) + " vs " + to_string(b.shape()));
    }
}

// -(1/N) sum_i [bg_i log(1 - y_i) + fg_i log(y_i)] with y clamped to
// [eps, 1 - eps]. The coefficient arrays are data, never differentiated.
template <typename T>
BasicTensor<T> weighted_bce(const BasicTensor<T>& probs, std::vector<double> bg, std::vector<double> fg,
                            const char* name) {
    const auto y = probs.data();
    const double n = static_cast<double>(y.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double p = std::clamp<double>(y[i], kProbEpsilon, 1.0 - kProbEpsilon);
        if (bg[i] != 0.0) acc += bg[i] * std::log(1.0 - p);
        if (fg[i] != 0.0) acc += fg[i] * std::log(p);
    }
    const double value = -acc / n;
    return make_result<T>(Shape{1}, std::vector<T>{static_cast<T>(value)}, name, {probs},
                          [probs, bg = std::move(bg), fg = std::move(fg), n](std::span<const T> g) mutable {
                              const auto y = probs.data();
                              auto gi = probs.grad_buffer();
                              for (std::size_t i = 0; i < y.size(); ++i) {
                                  const double p = y[i];
                                  if (p < kProbEpsilon || p > 1.0 - kProbEpsilon) continue;
                                  const double d = -(fg[i] / p - bg[i] / (1.0 - p)) / n;
                                  gi[i] += static_cast<T>(d * static_cast<double>(g[0]));
                              }
                          });
}

template <typename T>
std::vector<double> as_doubles(const BasicTensor<T>& t) {
    const auto d = t.data();
    return {d.begin(), d.end()};
}

}  // namespace

template <typename T>
BasicTensor<T> soft_dice_loss(const BasicTensor<T>& probs, const BasicTensor<T>& target) {
    require_same(probs, target, "soft_dice_loss");
    const auto p = probs.data();
    const auto t = target.data();
    double inter = 0.0, denom = kDiceEpsilon;
    for (std::size_t i = 0; i < p.size(); ++i) {
        inter += static_cast<double>(p[i]) * t[i];
        denom += static_cast<double>(p[i]) * p[i] + static_cast<double>(t[i]) * t[i];
    }
    const double value = 1.0 - 2.0 * inter / denom;
    return make_result<T>(Shape{1}, std::vector<T>{static_cast<T>(value)}, "soft_dice_loss", {probs, target},
                          [probs, target, inter, denom](std::span<const T> g) mutable {
                              const auto p = probs.data();
                              const auto t = target.data();
                              const double scale = static_cast<double>(g[0]) / (denom * denom);
                              if (probs.requires_grad()) {
                                  auto gp = probs.grad_buffer();
                                  for (std::size_t i = 0; i < p.size(); ++i) {
                                      const double d = -2.0 * (t[i] * denom - 2.0 * inter * p[i]) * scale;
                                      gp[i] += static_cast<T>(d);
                                  }
                              }
                              if (target.requires_grad()) {
                                  auto gt = target.grad_buffer();
                                  for (std::size_t i = 0; i < t.size(); ++i) {
                                      const double d = -2.0 * (p[i] * denom - 2.0 * inter * t[i]) * scale;
                                      gt[i] += static_cast<T>(d);
                                  }
                              }
                          });
}

template <typename T>
BasicTensor<T> liver_prior_loss(const BasicTensor<T>& prior_residual_logits, const BasicTensor<T>& target_down) {
    const auto& ls = prior_residual_logits.shape();
    const auto& ts = target_down.shape();
    if (ls.size() != 5 || ts.size() != 5 || ls[1] != 2 || ts[1] != 1 || ls[0] != ts[0] ||
        !std::equal(ls.begin() + 2, ls.end(), ts.begin() + 2)) {
        throw DimensionError("liver_prior_loss: logits " + to_string(ls) + " do not match target " + to_string(ts));
    }
    return soft_dice_loss(select_channel(channel_softmax(prior_residual_logits), 1), target_down);
}

template <typename T>
BasicTensor<T> contour_weight_map(const BasicTensor<T>& gt_contour, const BasicTensor<T>& final_fg_probs) {
    require_same(gt_contour, final_fg_probs, "contour_weight_map");
    const auto c = gt_contour.data();
    const auto y = final_fg_probs.data();
    std::vector<T> w(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) w[i] = c[i] * (T(1) - y[i]);
    return BasicTensor<T>(gt_contour.shape(), std::move(w));
}

template <typename T>
BasicTensor<T> penalized_contour_loss(const BasicTensor<T>& contour_probs, const BasicTensor<T>& gt_contour,
                                      const BasicTensor<T>& weight_map, double w0, double w1) {
    require_same(contour_probs, gt_contour, "penalized_contour_loss");
    require_same(contour_probs, weight_map, "penalized_contour_loss");
    const auto c = gt_contour.data();
    const auto w = weight_map.data();
    std::vector<double> bg(c.size()), fg(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        bg[i] = w0 * (1.0 - c[i]);
        fg[i] = w1 * static_cast<double>(c[i]) * w[i];
    }
    return weighted_bce(contour_probs, std::move(bg), std::move(fg), "penalized_contour_loss");
}

template <typename T>
BasicTensor<T> full_contour_loss(const BasicTensor<T>& contour_probs, const BasicTensor<T>& gt_contour, double w0,
                                 double w1) {
    require_same(contour_probs, gt_contour, "full_contour_loss");
    const auto c = as_doubles(gt_contour);
    std::vector<double> bg(c.size()), fg(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        bg[i] = w0 * (1.0 - c[i]);
        fg[i] = w1 * c[i];
    }
    return weighted_bce(contour_probs, std::move(bg), std::move(fg), "full_contour_loss");
}

template <typename T>
BasicTensor<T> erased_contour(const BasicTensor<T>& gt_contour, const BasicTensor<T>& final_fg_probs, double p) {
    require_same(gt_contour, final_fg_probs, "erased_contour");
    const auto c = gt_contour.data();
    const auto y = final_fg_probs.data();
    std::vector<T> out(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) out[i] = static_cast<double>(y[i]) < p ? c[i] : T(0);
    return BasicTensor<T>(gt_contour.shape(), std::move(out));
}

template <typename T>
BasicTensor<T> manual_selfsup_contour_loss(const BasicTensor<T>& contour_probs, const BasicTensor<T>& gt_contour,
                                           const BasicTensor<T>& final_fg_probs, double p, double w0, double w1) {
    require_same(contour_probs, gt_contour, "manual_selfsup_contour_loss");
    const auto erased = as_doubles(erased_contour(gt_contour, final_fg_probs, p));
    std::vector<double> bg(erased.size()), fg(erased.size());
    for (std::size_t i = 0; i < erased.size(); ++i) {
        bg[i] = w0 * (1.0 - erased[i]);
        fg[i] = w1 * erased[i];
    }
    return weighted_bce(contour_probs, std::move(bg), std::move(fg), "manual_selfsup_contour_loss");
}

template <typename T>
BasicTensor<T> weight_decay(const std::vector<ParameterRef<T>>& params) {
    BasicTensor<T> acc;
    for (const auto& p : params) {
        if (p.kind != ParamKind::conv_weight) continue;
        auto term = sum_squares(p.tensor);
        acc = acc.defined() ? add(acc, term) : term;
    }
    return acc.defined() ? acc : BasicTensor<T>::scalar(T(0));
}

template <typename T>
BasicTensor<T> total_loss(const BasicTensor<T>& final_loss, const BasicTensor<T>& prior_loss,
                          const BasicTensor<T>& contour_loss, const LossWeights& weights,
                          const std::vector<ParameterRef<T>>& params) {
    weights.validate();
    BasicTensor<T> total = final_loss;
    if (prior_loss.defined() && weights.alpha != 0.0) {
        total = add(total, scale(prior_loss, static_cast<T>(weights.alpha)));
    }
    if (contour_loss.defined() && weights.beta != 0.0) {
        total = add(total, scale(contour_loss, static_cast<T>(weights.beta)));
    }
    if (weights.gamma != 0.0) total = add(total, scale(weight_decay(params), static_cast<T>(weights.gamma)));
    return total;
}

#define AUTOCENET_INSTANTIATE_LOSSES(T)                                                                          \
    template BasicTensor<T> soft_dice_loss(const BasicTensor<T>&, const BasicTensor<T>&);                         \
    template BasicTensor<T> liver_prior_loss(const BasicTensor<T>&, const BasicTensor<T>&);                       \
    template BasicTensor<T> contour_weight_map(const BasicTensor<T>&, const BasicTensor<T>&);                     \
    template BasicTensor<T> penalized_contour_loss(const BasicTensor<T>&, const BasicTensor<T>&,                  \
                                                   const BasicTensor<T>&, double, double);                        \
    template BasicTensor<T> full_contour_loss(const BasicTensor<T>&, const BasicTensor<T>&, double, double);      \
    template BasicTensor<T> erased_contour(const BasicTensor<T>&, const BasicTensor<T>&, double);                 \
    template BasicTensor<T> manual_selfsup_contour_loss(const BasicTensor<T>&, const BasicTensor<T>&,             \
                                                        const BasicTensor<T>&, double, double, double);           \
    template BasicTensor<T> weight_decay(const std::vector<ParameterRef<T>>&);                                    \
    template BasicTensor<T> total_loss(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&,       \
                                       const LossWeights&, const std::vector<ParameterRef<T>>&);

AUTOCENET_INSTANTIATE_LOSSES(float)
AUTOCENET_INSTANTIATE_LOSSES(double)

}  // namespace autocenet
