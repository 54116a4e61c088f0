#include "autocenet/layers.hpp"

#include <cmath>
#include <numeric>

namespace autocenet {

namespace {

template <typename T>
BasicTensor<T> zeros_param(std::size_t n) {
    return BasicTensor<T>::zeros(Shape{n}, true);
}

std::size_t effective_groups(std::size_t in, std::size_t out, std::size_t groups) {
    return std::gcd(std::gcd(in, out), groups);
}

}  // namespace

template <typename T>
BasicTensor<T> xavier_uniform(const Shape& shape, Rng& rng) {
    if (shape.size() < 2) throw DimensionError("xavier_uniform: needs at least 2 dims");
    std::size_t receptive = 1;
    for (std::size_t a = 2; a < shape.size(); ++a) receptive *= shape[a];
    const double fan_in = static_cast<double>(shape[1] * receptive);
    const double fan_out = static_cast<double>(shape[0] * receptive);
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<T> values(numel(shape));
    for (auto& v : values) v = static_cast<T>(dist(rng));
    return BasicTensor<T>(shape, std::move(values), true);
}

void SeparableConvSpec::validate() const {
    if (in_channels == 0 || out_channels == 0) throw ConfigError("separable conv: channel counts must be positive");
    if (groups == 0) throw ConfigError("separable conv: groups must be positive");
    if (in_channels % groups != 0 || out_channels % groups != 0) {
        throw ConfigError("separable conv: " + std::to_string(in_channels) + " -> " + std::to_string(out_channels) +
                          " channels not divisible by " + std::to_string(groups) + " groups");
    }
    if (kernel != 1 && kernel != 3) throw ConfigError("separable conv: kernel must be 1 or 3");
}

template <typename T>
SeparableConv<T>::SeparableConv(const SeparableConvSpec& spec, Rng& rng) : spec_(spec) {
    spec_.validate();
    const std::size_t k = spec.kernel;
    grouped_weight = xavier_uniform<T>({spec.out_channels, spec.in_channels / spec.groups, k, k, k}, rng);
    pointwise_weight = xavier_uniform<T>({spec.out_channels, spec.out_channels, 1, 1, 1}, rng);
    if (spec.bias) pointwise_bias = zeros_param<T>(spec.out_channels);
}

template <typename T>
BasicTensor<T> SeparableConv<T>::forward(const BasicTensor<T>& input) const {
    if (input.rank() != 5 || input.dim(1) != spec_.in_channels) {
        throw ConfigError("separable conv: expected " + std::to_string(spec_.in_channels) + " input channels, got " +
                          to_string(input.shape()));
    }
    auto grouped = conv3d(input, grouped_weight, BasicTensor<T>{}, 1, static_cast<int>(spec_.groups));
    return conv3d(grouped, pointwise_weight, pointwise_bias, 1, 1);
}

template <typename T>
void SeparableConv<T>::collect(const std::string& prefix, std::vector<ParameterRef<T>>& out) const {
    out.push_back({prefix + ".grouped.weight", grouped_weight, ParamKind::conv_weight});
    out.push_back({prefix + ".pointwise.weight", pointwise_weight, ParamKind::conv_weight});
    if (pointwise_bias.defined()) out.push_back({prefix + ".pointwise.bias", pointwise_bias, ParamKind::bias});
}

template <typename T>
BatchNorm<T>::BatchNorm(std::size_t channels)
    : gamma(BasicTensor<T>::full(Shape{channels}, T(1), true)), beta(zeros_param<T>(channels)), stats(channels) {}

template <typename T>
BasicTensor<T> BatchNorm<T>::forward(const BasicTensor<T>& input, Mode mode) {
    return batch_norm3d(input, gamma, beta, stats, mode);
}

template <typename T>
void BatchNorm<T>::collect(const std::string& prefix, std::vector<ParameterRef<T>>& out) const {
    out.push_back({prefix + ".gamma", gamma, ParamKind::norm_affine});
    out.push_back({prefix + ".beta", beta, ParamKind::norm_affine});
}

template <typename T>
void BatchNorm<T>::collect_buffers(const std::string& prefix, std::vector<BufferRef<T>>& out) {
    out.push_back({prefix, &stats});
}

std::vector<std::size_t> SkipAttentionSpec::resolved_stage_widths() const {
    if (stage_widths.empty()) return {out_channels, out_channels, out_channels};
    return stage_widths;
}

void SkipAttentionSpec::validate() const {
    if (in_channels == 0 || out_channels == 0) throw ConfigError("skip-attention block: channel counts must be positive");
    if (groups == 0) throw ConfigError("skip-attention block: groups must be positive");
    for (auto w : stage_widths) {
        if (w == 0) throw ConfigError("skip-attention block: stage widths must be positive");
    }
}

template <typename T>
SkipAttentionBlock<T>::SkipAttentionBlock(const SkipAttentionSpec& spec, Rng& rng) : spec_(spec) {
    spec_.validate();
    std::size_t in = spec.in_channels;
    std::size_t concat = spec.in_channels;
    for (auto width : spec_.resolved_stage_widths()) {
        SeparableConvSpec sc{in, width, effective_groups(in, width, spec.groups), 3, false};
        stages.push_back(Stage{SeparableConv<T>(sc, rng), BatchNorm<T>(width)});
        concat += width;
        in = width;
    }
    reduce_weight = xavier_uniform<T>({spec.out_channels, concat, 1, 1, 1}, rng);
    reduce_bias = zeros_param<T>(spec.out_channels);
    if (spec.attention) attention = BasicTensor<T>::full(Shape{spec.out_channels}, T(1), true);
}

template <typename T>
BasicTensor<T> SkipAttentionBlock<T>::forward(const BasicTensor<T>& input, Mode mode) {
    std::vector<BasicTensor<T>> features{input};
    BasicTensor<T> x = input;
    for (auto& stage : stages) {
        x = relu(stage.norm.forward(stage.conv.forward(x), mode));
        features.push_back(x);
    }
    auto reduced = conv3d(concat_channels(features), reduce_weight, reduce_bias, 1, 1);
    return attention.defined() ? scale_channels(reduced, attention) : reduced;
}

template <typename T>
void SkipAttentionBlock<T>::collect(const std::string& prefix, std::vector<ParameterRef<T>>& out) const {
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const auto p = prefix + ".stage" + std::to_string(i);
        stages[i].conv.collect(p + ".conv", out);
        stages[i].norm.collect(p + ".norm", out);
    }
    out.push_back({prefix + ".reduce.weight", reduce_weight, ParamKind::conv_weight});
    out.push_back({prefix + ".reduce.bias", reduce_bias, ParamKind::bias});
    if (attention.defined()) out.push_back({prefix + ".attention", attention, ParamKind::attention});
}

template <typename T>
void SkipAttentionBlock<T>::collect_buffers(const std::string& prefix, std::vector<BufferRef<T>>& out) {
    for (std::size_t i = 0; i < stages.size(); ++i) {
        stages[i].norm.collect_buffers(prefix + ".stage" + std::to_string(i) + ".norm", out);
    }
}

void VTransitionSpec::validate() const {
    if (in_channels == 0 || out_channels == 0 || lower_channels == 0) {
        throw ConfigError("V-transition: channel counts must be positive");
    }
    if (lower_stages == 0) throw ConfigError("V-transition: needs at least one lower-resolution stage");
}

namespace {
SkipAttentionSpec lower_spec(const VTransitionSpec& spec) {
    spec.validate();
    SkipAttentionSpec s;
    s.in_channels = spec.lower_channels;
    s.out_channels = spec.lower_channels;
    s.stage_widths.assign(spec.lower_stages, spec.lower_channels);
    s.groups = spec.groups;
    s.attention = spec.attention;
    return s;
}
}  // namespace

template <typename T>
VTransition<T>::VTransition(const VTransitionSpec& spec, Rng& rng)
    : down_weight((spec.validate(), xavier_uniform<T>({spec.lower_channels, spec.in_channels, 2, 2, 2}, rng))),
      down_norm(spec.lower_channels),
      lower(lower_spec(spec), rng),
      up_weight(xavier_uniform<T>({spec.lower_channels, spec.lower_channels, 2, 2, 2}, rng)),
      up_norm(spec.lower_channels),
      out_weight(xavier_uniform<T>({spec.out_channels, spec.in_channels + spec.lower_channels, 1, 1, 1}, rng)),
      out_bias(zeros_param<T>(spec.out_channels)),
      spec_(spec) {}

template <typename T>
BasicTensor<T> VTransition<T>::forward(const BasicTensor<T>& input, Mode mode) {
    if (input.rank() != 5 || input.dim(1) != spec_.in_channels) {
        throw ConfigError("V-transition: expected " + std::to_string(spec_.in_channels) + " input channels, got " +
                          to_string(input.shape()));
    }
    for (std::size_t a = 2; a < 5; ++a) {
        if (input.dim(a) % 2 != 0) throw DimensionError("V-transition: odd spatial dims " + to_string(input.shape()));
    }
    auto down = relu(down_norm.forward(conv3d(input, down_weight, BasicTensor<T>{}, 2, 1), mode));
    auto low = lower.forward(down, mode);
    auto up = relu(up_norm.forward(conv_transpose3d(low, up_weight, BasicTensor<T>{}, 2), mode));
    return conv3d(concat_channels<T>({input, up}), out_weight, out_bias, 1, 1);
}

template <typename T>
void VTransition<T>::collect(const std::string& prefix, std::vector<ParameterRef<T>>& out) const {
    out.push_back({prefix + ".down.weight", down_weight, ParamKind::conv_weight});
    down_norm.collect(prefix + ".down.norm", out);
    lower.collect(prefix + ".lower", out);
    out.push_back({prefix + ".up.weight", up_weight, ParamKind::conv_weight});
    up_norm.collect(prefix + ".up.norm", out);
    out.push_back({prefix + ".out.weight", out_weight, ParamKind::conv_weight});
    out.push_back({prefix + ".out.bias", out_bias, ParamKind::bias});
}

template <typename T>
void VTransition<T>::collect_buffers(const std::string& prefix, std::vector<BufferRef<T>>& out) {
    down_norm.collect_buffers(prefix + ".down.norm", out);
    lower.collect_buffers(prefix + ".lower", out);
    up_norm.collect_buffers(prefix + ".up.norm", out);
}

template BasicTensor<float> xavier_uniform<float>(const Shape&, Rng&);
template BasicTensor<double> xavier_uniform<double>(const Shape&, Rng&);
template class SeparableConv<float>;
template class SeparableConv<double>;
template class BatchNorm<float>;
template class BatchNorm<double>;
template class SkipAttentionBlock<float>;
template class SkipAttentionBlock<double>;
template class VTransition<float>;
template class VTransition<double>;

}  // namespace autocenet
