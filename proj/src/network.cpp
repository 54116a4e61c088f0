#include "autocenet/network.hpp"

#include <utility>

#include "autocenet/data.hpp"
#include "autocenet/ops.hpp"

namespace autocenet {

std::string to_string(ContourMode mode) {
    switch (mode) {
        case ContourMode::self_supervised: return "self_supervised";
        case ContourMode::full: return "full";
        case ContourMode::manual: return "manual";
        case ContourMode::off: return "off";
    }
    return "?";
}

std::string to_string(Ablation ablation) {
    switch (ablation) {
        case Ablation::none: return "none";
        case Ablation::autonet: return "autonet";
        case Ablation::att: return "att";
        case Ablation::A: return "A";
        case Ablation::R: return "R";
        case Ablation::AR: return "AR";
        case Ablation::FC: return "FC";
        case Ablation::MC: return "MC";
    }
    return "?";
}

const std::vector<Ablation>& all_ablations() {
    static const std::vector<Ablation> all{Ablation::none, Ablation::autonet, Ablation::att, Ablation::A,
                                           Ablation::R,    Ablation::AR,      Ablation::FC,  Ablation::MC};
    return all;
}

Ablation parse_ablation(const std::string& name) {
    for (auto a : all_ablations()) {
        if (to_string(a) == name) return a;
    }
    throw ConfigError("unknown ablation '" + name + "' (expected none, autonet, att, A, R, AR, FC or MC)");
}

ContourMode parse_contour_mode(const std::string& name) {
    for (auto m : {ContourMode::self_supervised, ContourMode::full, ContourMode::manual, ContourMode::off}) {
        if (to_string(m) == name) return m;
    }
    throw ConfigError("unknown contour mode '" + name + "'");
}

NetworkConfig NetworkConfig::desk() {
    NetworkConfig c;
    c.base_width = 16;
    c.context_width = 16;
    c.prior_width = 16;
    c.contour_width = 16;
    c.fusion_width = 16;
    c.prior_up_width = 8;
    return c;
}

void NetworkConfig::validate() const {
    for (auto d : input_dims) {
        if (d == 0 || d % 4 != 0) {
            throw ConfigError("network input dims must be positive multiples of 4, got " + std::to_string(d));
        }
    }
    for (auto w : {base_width, context_width, prior_width, contour_width, fusion_width, prior_up_width,
                   sequential_prior_width, groups, stem_stages, lower_stages}) {
        if (w == 0) throw ConfigError("network widths, groups and stage counts must be positive");
    }
    if (!(manual_threshold > 0.0 && manual_threshold < 1.0)) {
        throw ConfigError("manual contour threshold must lie in (0, 1)");
    }
}

NetworkConfig apply_ablation(NetworkConfig c, Ablation ablation) {
    c.disable_attention = false;
    c.disable_autocontext = false;
    c.disable_residual_prior = false;
    c.contour_mode = ContourMode::self_supervised;
    switch (ablation) {
        case Ablation::none: break;
        case Ablation::autonet: c.contour_mode = ContourMode::off; break;
        case Ablation::att:
            c.contour_mode = ContourMode::off;
            c.disable_attention = true;
            break;
        case Ablation::A:
            c.contour_mode = ContourMode::off;
            c.disable_autocontext = true;
            break;
        case Ablation::R:
            c.contour_mode = ContourMode::off;
            c.disable_residual_prior = true;
            break;
        case Ablation::AR:
            c.contour_mode = ContourMode::off;
            c.disable_autocontext = true;
            c.disable_residual_prior = true;
            break;
        case Ablation::FC: c.contour_mode = ContourMode::full; break;
        case Ablation::MC: c.contour_mode = ContourMode::manual; break;
    }
    return c;
}

namespace {

VTransitionSpec vspec(std::size_t in, std::size_t out, std::size_t lower, const NetworkConfig& c) {
    return VTransitionSpec{in, out, lower, c.lower_stages, c.groups, !c.disable_attention};
}

std::size_t fusion_inputs(const NetworkConfig& c) {
    std::size_t n = c.context_width + c.prior_up_width;
    if (c.has_contour_branch() && c.contour_in_fusion) n += c.contour_width;
    return n;
}

}  // namespace

struct Network::Impl {
    NetworkConfig config;
    Rng rng;
    SkipAttentionBlock<float> stem;
    VTransition<float> context;
    Tensor prior_down_weight;
    BatchNorm<float> prior_down_norm;
    VTransition<float> prior0;
    VTransition<float> prior1;
    Tensor prior_up_weight;
    Tensor prior_up_bias;
    std::unique_ptr<VTransition<float>> contour;
    Tensor contour_head_weight;
    Tensor contour_head_bias;
    VTransition<float> fusion;
    Tensor head_weight;
    Tensor head_bias;

    Impl(const NetworkConfig& c, std::uint64_t seed)
        : config((c.validate(), c)),
          rng(seed),
          stem(SkipAttentionSpec{1, c.base_width, std::vector<std::size_t>(c.stem_stages, c.base_width), c.groups,
                                 !c.disable_attention},
               rng),
          context(vspec(c.base_width, c.context_width, c.context_width, c), rng),
          prior_down_weight(xavier_uniform<float>({c.prior_width, c.base_width, 2, 2, 2}, rng)),
          prior_down_norm(c.prior_width),
          prior0(c.disable_residual_prior ? vspec(c.prior_width, c.sequential_prior_width, c.prior_width, c)
                                          : vspec(c.prior_width, 2, c.prior_width, c),
                 rng),
          prior1(c.disable_residual_prior ? vspec(c.sequential_prior_width, 2, c.prior_width, c)
                                          : vspec(c.prior_width, 2, c.prior_width, c),
                 rng),
          prior_up_weight(xavier_uniform<float>({2, c.prior_up_width, 2, 2, 2}, rng)),
          prior_up_bias(Tensor::zeros({c.prior_up_width}, true)),
          fusion((build_contour(c), vspec(fusion_inputs(c), c.fusion_width, c.fusion_width, c)), rng),
          head_weight(xavier_uniform<float>({2, c.fusion_width, 1, 1, 1}, rng)),
          head_bias(Tensor::zeros({2}, true)) {}

    int build_contour(const NetworkConfig& c) {
        if (!c.has_contour_branch()) return 0;
        contour = std::make_unique<VTransition<float>>(vspec(c.base_width, c.contour_width, c.contour_width, c), rng);
        contour_head_weight = xavier_uniform<float>({2, c.contour_width, 1, 1, 1}, rng);
        contour_head_bias = Tensor::zeros({2}, true);
        return 0;
    }

    NetworkOutputs forward(const Tensor& input, Mode mode) {
        const auto& d = config.input_dims;
        if (input.rank() != 5 || input.dim(1) != 1 || input.dim(2) != d[0] || input.dim(3) != d[1] ||
            input.dim(4) != d[2]) {
            throw DimensionError("network input " + to_string(input.shape()) + " does not match configured dims [B, 1, " +
                                 std::to_string(d[0]) + ", " + std::to_string(d[1]) + ", " + std::to_string(d[2]) +
                                 "]");
        }
        NetworkOutputs out;
        auto features = stem.forward(input, mode);
        auto ctx = context.forward(features, mode);

        auto low = relu(prior_down_norm.forward(conv3d(features, prior_down_weight, Tensor{}, 2, 1), mode));
        if (config.disable_residual_prior) {
            out.prior_first = prior0.forward(low, mode);
            out.prior_second = prior1.forward(out.prior_first, mode);
            out.prior_residual_logits = out.prior_second;
        } else {
            out.prior_first = prior0.forward(low, mode);
            out.prior_second = prior1.forward(low, mode);
            out.prior_residual_logits = sub(out.prior_first, out.prior_second);
        }
        auto prior_up = conv_transpose3d(out.prior_residual_logits, prior_up_weight, prior_up_bias, 2);

        std::vector<Tensor> fused{ctx, prior_up};
        if (contour) {
            auto cf = contour->forward(features, mode);
            out.contour_logits = conv3d(cf, contour_head_weight, contour_head_bias, 1, 1);
            if (config.contour_in_fusion) fused.push_back(cf);
        }
        auto refined = fusion.forward(concat_channels(fused), mode);
        out.final_logits = conv3d(refined, head_weight, head_bias, 1, 1);
        return out;
    }

    void collect(std::vector<ParameterRef<float>>& p) const {
        stem.collect("stem", p);
        context.collect("context", p);
        p.push_back({"prior.down.weight", prior_down_weight, ParamKind::conv_weight});
        prior_down_norm.collect("prior.down.norm", p);
        prior0.collect("prior.v0", p);
        prior1.collect("prior.v1", p);
        p.push_back({"prior.up.weight", prior_up_weight, ParamKind::conv_weight});
        p.push_back({"prior.up.bias", prior_up_bias, ParamKind::bias});
        if (contour) {
            contour->collect("contour", p);
            p.push_back({"contour.head.weight", contour_head_weight, ParamKind::conv_weight});
            p.push_back({"contour.head.bias", contour_head_bias, ParamKind::bias});
        }
        fusion.collect("fusion", p);
        p.push_back({"head.weight", head_weight, ParamKind::conv_weight});
        p.push_back({"head.bias", head_bias, ParamKind::bias});
    }

    void collect_buffers(std::vector<BufferRef<float>>& b) {
        stem.collect_buffers("stem", b);
        context.collect_buffers("context", b);
        prior_down_norm.collect_buffers("prior.down.norm", b);
        prior0.collect_buffers("prior.v0", b);
        prior1.collect_buffers("prior.v1", b);
        if (contour) contour->collect_buffers("contour", b);
        fusion.collect_buffers("fusion", b);
    }
};

Network::Network() = default;
Network::Network(const NetworkConfig& config, std::uint64_t seed) : impl_(std::make_unique<Impl>(config, seed)) {}
Network::~Network() = default;
Network::Network(Network&&) noexcept = default;
Network& Network::operator=(Network&&) noexcept = default;

namespace {
[[noreturn]] void unbuilt() { throw UsageError("network has not been built"); }
}  // namespace

const NetworkConfig& Network::config() const {
    if (!impl_) unbuilt();
    return impl_->config;
}

NetworkOutputs Network::forward(const Tensor& input, Mode mode) {
    if (!impl_) unbuilt();
    return impl_->forward(input, mode);
}

Tensor Network::foreground_probabilities(const Tensor& input) {
    if (!impl_) unbuilt();
    NoGradGuard no_grad;
    return select_channel(channel_softmax(impl_->forward(input, Mode::eval).final_logits), 1);
}

LabelVolume Network::predict(const Volume& volume) {
    if (!impl_) unbuilt();
    NoGradGuard no_grad;
    auto logits = impl_->forward(to_tensor<float>(volume), Mode::eval).final_logits;
    return labels_from_logits(logits, 0, volume.spacing());
}

std::vector<ParameterRef<float>> Network::parameters() const {
    if (!impl_) unbuilt();
    std::vector<ParameterRef<float>> p;
    impl_->collect(p);
    return p;
}

std::vector<BufferRef<float>> Network::buffers() {
    if (!impl_) unbuilt();
    std::vector<BufferRef<float>> b;
    impl_->collect_buffers(b);
    return b;
}

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p.tensor.numel();
    return n;
}

void Network::swap_prior_transitions() {
    if (!impl_) unbuilt();
    if (impl_->config.disable_residual_prior) {
        throw UsageError("the sequential prior branch has no interchangeable transitions");
    }
    std::swap(impl_->prior0, impl_->prior1);
}

LabelVolume labels_from_logits(const Tensor& logits, std::size_t item, const Spacing3& spacing) {
    const auto& s = logits.shape();
    if (s.size() != 5 || s[1] != 2 || item >= s[0]) {
        throw DimensionError("labels_from_logits: expected [B, 2, X, Y, Z] logits, got " + to_string(s));
    }
    LabelVolume out({s[2], s[3], s[4]}, spacing);
    const auto v = logits.data();
    const std::size_t plane = s[2] * s[3] * s[4];
    const float* bg = v.data() + item * 2 * plane;
    const float* fg = bg + plane;
    std::size_t i = 0;
    for (std::size_t x = 0; x < s[2]; ++x) {
        for (std::size_t y = 0; y < s[3]; ++y) {
            for (std::size_t z = 0; z < s[4]; ++z, ++i) out.at(x, y, z) = fg[i] > bg[i] ? 1 : 0;
        }
    }
    return out;
}

}  // namespace autocenet
