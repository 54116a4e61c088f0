#pragma once

#include <vector>

#include "autocenet/tensor.hpp"

namespace autocenet {

enum class Mode { train, eval };

/// 3-D convolution over [B, Cin, X, Y, Z] with weight [Cout, Cin/groups, k, k, k].
/// Kernel 3 pads by 1, kernels 1 and 2 are unpadded; the output spatial size is
/// always input / stride. Kernel 2 is only valid with stride 2. `bias` may be
/// an undefined tensor.
template <typename T>
BasicTensor<T> conv3d(const BasicTensor<T>& input, const BasicTensor<T>& weight, const BasicTensor<T>& bias,
                      int stride = 1, int groups = 1);

/// Transposed 2x2x2 / stride-2 convolution with weight [Cin, Cout, 2, 2, 2].
/// Its forward pass is the input gradient of conv3d with the same weight.
template <typename T>
BasicTensor<T> conv_transpose3d(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                                const BasicTensor<T>& bias, int stride = 2);

template <typename T>
struct BatchNormStats {
    std::vector<T> running_mean;
    std::vector<T> running_var;
    double momentum = 0.1;
    double eps = 1e-5;

    explicit BatchNormStats(std::size_t channels = 0)
        : running_mean(channels, T(0)), running_var(channels, T(1)) {}
};

/// Per-channel normalization over (B, X, Y, Z). Train mode uses batch moments
/// and updates `stats`; eval mode uses the running moments.
template <typename T>
BasicTensor<T> batch_norm3d(const BasicTensor<T>& input, const BasicTensor<T>& gamma, const BasicTensor<T>& beta,
                            BatchNormStats<T>& stats, Mode mode);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& input);

/// While alive, records the sign of every ReLU input evaluated on this thread.
/// Finite-difference checks use it to reject stencils that straddle a kink.
class ReluPatternRecorder {
public:
    ReluPatternRecorder();
    ~ReluPatternRecorder();
    ReluPatternRecorder(const ReluPatternRecorder&) = delete;
    ReluPatternRecorder& operator=(const ReluPatternRecorder&) = delete;

    const std::vector<bool>& pattern() const { return pattern_; }
    void record(bool positive) { pattern_.push_back(positive); }

private:
    std::vector<bool> pattern_;
    ReluPatternRecorder* previous_;
};

namespace detail {
ReluPatternRecorder* active_relu_recorder();
}

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// Multiplies every element by a constant.
template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& input, T factor);

/// Concatenates along axis 1; all other dims must agree.
template <typename T>
BasicTensor<T> concat_channels(const std::vector<BasicTensor<T>>& inputs);

/// Multiplies every voxel of channel c by attention[c].
template <typename T>
BasicTensor<T> scale_channels(const BasicTensor<T>& input, const BasicTensor<T>& attention);

/// Softmax across axis 1, independently per batch item and voxel.
template <typename T>
BasicTensor<T> channel_softmax(const BasicTensor<T>& input);

/// Extracts channel `channel` as a [B, 1, ...] tensor.
template <typename T>
BasicTensor<T> select_channel(const BasicTensor<T>& input, std::size_t channel);

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& input);

/// Sum of squared elements, returned as a one-element tensor.
template <typename T>
BasicTensor<T> sum_squares(const BasicTensor<T>& input);

}  // namespace autocenet
