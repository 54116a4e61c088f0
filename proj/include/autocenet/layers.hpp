#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "autocenet/ops.hpp"

namespace autocenet {

/// What a trainable tensor is; weight decay only touches convolution kernels.
enum class ParamKind { conv_weight, bias, norm_affine, attention };

template <typename T>
struct ParameterRef {
    std::string name;
    BasicTensor<T> tensor;
    ParamKind kind;
};

template <typename T>
struct BufferRef {
    std::string name;
    BatchNormStats<T>* stats;
};

using Rng = std::mt19937_64;

/// Glorot-uniform initialization using fan_in = dim(1) * k^3, fan_out = dim(0) * k^3.
template <typename T>
BasicTensor<T> xavier_uniform(const Shape& shape, Rng& rng);

struct SeparableConvSpec {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t groups = 4;
    std::size_t kernel = 3;
    /// Blocks follow every separable conv with batch norm, so they leave this off.
    bool bias = false;

    void validate() const;
};

/// Grouped k^3 convolution (in -> out channels) followed by a pointwise 1^3
/// convolution that mixes the groups.
template <typename T>
class SeparableConv {
public:
    SeparableConv(const SeparableConvSpec& spec, Rng& rng);

    BasicTensor<T> forward(const BasicTensor<T>& input) const;
    void collect(const std::string& prefix, std::vector<ParameterRef<T>>& out) const;
    const SeparableConvSpec& spec() const { return spec_; }

    BasicTensor<T> grouped_weight;
    BasicTensor<T> pointwise_weight;
    BasicTensor<T> pointwise_bias;

private:
    SeparableConvSpec spec_;
};

/// Batch norm with affine parameters and running statistics.
template <typename T>
class BatchNorm {
public:
    explicit BatchNorm(std::size_t channels);

    BasicTensor<T> forward(const BasicTensor<T>& input, Mode mode);
    void collect(const std::string& prefix, std::vector<ParameterRef<T>>& out) const;
    void collect_buffers(const std::string& prefix, std::vector<BufferRef<T>>& out);

    BasicTensor<T> gamma;
    BasicTensor<T> beta;
    BatchNormStats<T> stats;
};

struct SkipAttentionSpec {
    std::size_t in_channels = 1;
    std::size_t out_channels = 96;
    /// One SC-BN-ReLU stage per entry; empty means three stages of out_channels.
    std::vector<std::size_t> stage_widths;
    std::size_t groups = 4;
    bool attention = true;

    std::vector<std::size_t> resolved_stage_widths() const;
    void validate() const;
};

/// Sequential SC-BN-ReLU stages whose outputs are concatenated with the block
/// input, reduced by a 1^3 convolution and scaled by a per-channel attention
/// vector (initialized to ones). Spatial dims are preserved.
///
/// A stage whose channel counts are not divisible by the group count uses
/// gcd(in, out, groups) groups, which covers single-channel image input.
template <typename T>
class SkipAttentionBlock {
public:
    SkipAttentionBlock(const SkipAttentionSpec& spec, Rng& rng);

    BasicTensor<T> forward(const BasicTensor<T>& input, Mode mode);
    void collect(const std::string& prefix, std::vector<ParameterRef<T>>& out) const;
    void collect_buffers(const std::string& prefix, std::vector<BufferRef<T>>& out);
    const SkipAttentionSpec& spec() const { return spec_; }

    struct Stage {
        SeparableConv<T> conv;
        BatchNorm<T> norm;
    };
    std::vector<Stage> stages;
    BasicTensor<T> reduce_weight;
    BasicTensor<T> reduce_bias;
    /// Undefined when attention is disabled.
    BasicTensor<T> attention;

private:
    SkipAttentionSpec spec_;
};

struct VTransitionSpec {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t lower_channels = 0;
    std::size_t lower_stages = 2;
    std::size_t groups = 4;
    bool attention = true;

    void validate() const;
};

/// Small encoder-decoder: 2^3 stride-2 down-transition, a skip-attention block
/// at the lower resolution, 2^3 stride-2 transposed up-transition,
/// concatenation with the block input and a final 1^3 convolution.
template <typename T>
class VTransition {
public:
    VTransition(const VTransitionSpec& spec, Rng& rng);

    BasicTensor<T> forward(const BasicTensor<T>& input, Mode mode);
    void collect(const std::string& prefix, std::vector<ParameterRef<T>>& out) const;
    void collect_buffers(const std::string& prefix, std::vector<BufferRef<T>>& out);
    const VTransitionSpec& spec() const { return spec_; }

    BasicTensor<T> down_weight;
    BatchNorm<T> down_norm;
    SkipAttentionBlock<T> lower;
    BasicTensor<T> up_weight;
    BatchNorm<T> up_norm;
    BasicTensor<T> out_weight;
    BasicTensor<T> out_bias;

private:
    VTransitionSpec spec_;
};

template <typename T>
BasicTensor<T> separable_conv(const SeparableConv<T>& layer, const BasicTensor<T>& input) {
    return layer.forward(input);
}

template <typename T>
BasicTensor<T> skip_attention_block(SkipAttentionBlock<T>& block, const BasicTensor<T>& input, Mode mode) {
    return block.forward(input, mode);
}

template <typename T>
BasicTensor<T> v_transition(VTransition<T>& block, const BasicTensor<T>& input, Mode mode) {
    return block.forward(input, mode);
}

}  // namespace autocenet
