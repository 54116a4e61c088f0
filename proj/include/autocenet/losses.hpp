#pragma once

#include <vector>

#include "autocenet/layers.hpp"
#include "autocenet/ops.hpp"

namespace autocenet {

inline constexpr double kDiceEpsilon = 1e-6;
inline constexpr double kProbEpsilon = 1e-7;

struct LossWeights {
    double alpha = 1.0;   ///< liver-prior deep supervision
    double beta = 1.0;    ///< contour loss
    double gamma = 0.1;   ///< squared L2 of convolution kernels
    double w0 = 1.0;      ///< contour background class weight
    double w1 = 10.0;     ///< contour foreground class weight
    double manual_threshold = 0.5;

    void validate() const;
};

/// 1 - 2 sum(p t) / (sum p^2 + sum t^2 + eps), over every element.
template <typename T>
BasicTensor<T> soft_dice_loss(const BasicTensor<T>& probs, const BasicTensor<T>& target);

/// Soft dice of the foreground softmax of the prior residual logits
/// [B, 2, ...] against the down-scaled label [B, 1, ...].
template <typename T>
BasicTensor<T> liver_prior_loss(const BasicTensor<T>& prior_residual_logits, const BasicTensor<T>& target_down);

/// Contour weight map gt_contour * (1 - fg_probs), computed as plain data.
template <typename T>
BasicTensor<T> contour_weight_map(const BasicTensor<T>& gt_contour, const BasicTensor<T>& final_fg_probs);

/// Class-weighted contour cross-entropy whose foreground term is modulated by
/// the weight map, averaged over voxels. Probabilities are clamped to
/// [1e-7, 1 - 1e-7].
template <typename T>
BasicTensor<T> penalized_contour_loss(const BasicTensor<T>& contour_probs, const BasicTensor<T>& gt_contour,
                                      const BasicTensor<T>& weight_map, double w0, double w1);

/// Contour cross-entropy against the full ground-truth contour (weight map of ones).
template <typename T>
BasicTensor<T> full_contour_loss(const BasicTensor<T>& contour_probs, const BasicTensor<T>& gt_contour, double w0,
                                 double w1);

/// Ground-truth contour erased wherever the final prediction reaches p
/// (kept where fg_probs < p); plain data.
template <typename T>
BasicTensor<T> erased_contour(const BasicTensor<T>& gt_contour, const BasicTensor<T>& final_fg_probs, double p);

/// Cross-entropy against the erased contour. Erased voxels become background
/// targets. Class weights default to 1.
template <typename T>
BasicTensor<T> manual_selfsup_contour_loss(const BasicTensor<T>& contour_probs, const BasicTensor<T>& gt_contour,
                                           const BasicTensor<T>& final_fg_probs, double p, double w0 = 1.0,
                                           double w1 = 1.0);

/// Sum of squared convolution kernels; biases, norm affines and attention
/// vectors are excluded.
template <typename T>
BasicTensor<T> weight_decay(const std::vector<ParameterRef<T>>& params);

/// L_f + alpha L_p + beta L_C + gamma ||W||^2. Undefined component losses
/// (ablations without that branch) are skipped.
template <typename T>
BasicTensor<T> total_loss(const BasicTensor<T>& final_loss, const BasicTensor<T>& prior_loss,
                          const BasicTensor<T>& contour_loss, const LossWeights& weights,
                          const std::vector<ParameterRef<T>>& params);

}  // namespace autocenet
