#pragma once

#include <cmath>
#include <vector>

#include "autocenet/layers.hpp"
#include "autocenet/losses.hpp"

namespace oracle {

// Direct summations written from the loss equations, in double precision,
// without any of the library's loss code.

inline double soft_dice(const std::vector<double>& p, const std::vector<double>& t) {
    double inter = 0, pp = 0, tt = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        inter += p[i] * t[i];
        pp += p[i] * p[i];
        tt += t[i] * t[i];
    }
    return 1.0 - 2.0 * inter / (pp + tt + autocenet::kDiceEpsilon);
}

/// Liver prior: dice of softmax(V0 - V1) foreground against y_dl. Logit arrays are
/// [2, V] (channel-major, one batch item).
inline double liver_prior(const std::vector<double>& v0, const std::vector<double>& v1,
                          const std::vector<double>& target) {
    const std::size_t n = target.size();
    std::vector<double> fg(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r0 = v0[i] - v1[i];
        const double r1 = v0[n + i] - v1[n + i];
        fg[i] = std::exp(r1) / (std::exp(r0) + std::exp(r1));
    }
    return soft_dice(fg, target);
}

/// Penalized contour cross-entropy (voxel mean), Gamma_hat = Gamma (1 - y_l).
inline double penalized_contour(const std::vector<double>& yc, const std::vector<double>& gamma,
                                const std::vector<double>& yl, double w0, double w1) {
    double acc = 0;
    for (std::size_t i = 0; i < yc.size(); ++i) {
        const double hat = gamma[i] * (1.0 - yl[i]);
        acc += w0 * (1.0 - gamma[i]) * std::log(1.0 - yc[i]) + w1 * gamma[i] * hat * std::log(yc[i]);
    }
    return -acc / static_cast<double>(yc.size());
}

/// Manual self-supervision: the contour is erased where y >= p; erased voxels are background.
inline double manual_contour(const std::vector<double>& yc, const std::vector<double>& gamma,
                             const std::vector<double>& y, double p, double w0, double w1) {
    double acc = 0;
    for (std::size_t i = 0; i < yc.size(); ++i) {
        const double keep = y[i] < p ? 1.0 : 0.0;
        const double g = gamma[i] * keep;
        acc += w0 * (1.0 - g) * std::log(1.0 - yc[i]) + w1 * g * std::log(yc[i]);
    }
    return -acc / static_cast<double>(yc.size());
}

/// Total loss with the squared L2 norm over convolution kernels.
inline double total(double lf, double lp, double lc, const autocenet::LossWeights& w,
                    const std::vector<autocenet::ParameterRef<double>>& params) {
    double norm = 0;
    for (const auto& p : params) {
        if (p.kind != autocenet::ParamKind::conv_weight) continue;
        for (double v : p.tensor.data()) norm += v * v;
    }
    return lf + w.alpha * lp + w.beta * lc + w.gamma * norm;
}

}  // namespace oracle
