#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "autocenet/layers.hpp"
#include "autocenet/volume.hpp"

namespace autocenet {

enum class ContourMode { self_supervised, full, manual, off };

/// Named variants of the ablation study.
enum class Ablation { none, autonet, att, A, R, AR, FC, MC };

std::string to_string(ContourMode mode);
std::string to_string(Ablation ablation);
/// Accepts the names none, autonet, att, A, R, AR, FC, MC.
Ablation parse_ablation(const std::string& name);
ContourMode parse_contour_mode(const std::string& name);
const std::vector<Ablation>& all_ablations();

struct NetworkConfig {
    Dims3 input_dims{32, 32, 16};
    std::size_t base_width = 96;
    std::size_t context_width = 96;
    std::size_t prior_width = 96;
    std::size_t contour_width = 96;
    std::size_t fusion_width = 96;
    /// Channels of the learned up-sampling that carries the prior into fusion.
    std::size_t prior_up_width = 96;
    /// Intermediate width of the sequential prior branch (AutoNet-R).
    std::size_t sequential_prior_width = 48;
    std::size_t groups = 4;
    std::size_t stem_stages = 3;
    std::size_t lower_stages = 2;

    bool disable_attention = false;
    /// AutoNet-A: drop the prior deep supervision, keep the topology.
    bool disable_autocontext = false;
    /// AutoNet-R: sequential prior transitions instead of the residual pair.
    bool disable_residual_prior = false;
    ContourMode contour_mode = ContourMode::self_supervised;
    /// Concatenate contour features into the fusion input.
    bool contour_in_fusion = true;
    double manual_threshold = 0.5;

    /// Reduced widths for CPU-scale experiments (32x32x16 input).
    static NetworkConfig desk();

    void validate() const;
    bool has_contour_branch() const { return contour_mode != ContourMode::off; }
    bool prior_supervised() const { return !disable_autocontext; }
};

/// Sets the switches of a named ablation on top of `base` (widths untouched).
NetworkConfig apply_ablation(NetworkConfig base, Ablation ablation);

struct NetworkOutputs {
    Tensor final_logits;           ///< [B, 2, X, Y, Z]
    Tensor prior_residual_logits;  ///< [B, 2, X/2, Y/2, Z/2]
    Tensor contour_logits;         ///< [B, 2, X, Y, Z]; undefined without a contour branch
    /// Outputs of the two prior transitions. With the residual prior
    /// prior_residual_logits = prior_first - prior_second; with the sequential
    /// prior prior_first is the 48-channel intermediate.
    Tensor prior_first;
    Tensor prior_second;
};

/// AutoCENet: skip-attention stem S, context V_c, liver-prior pair V_p^0/V_p^1
/// at half resolution, contour V_C, and the auto-context fusion V_a.
class Network {
public:
    /// Unbuilt network; forward and predict raise UsageError.
    Network();
    Network(const NetworkConfig& config, std::uint64_t seed);
    ~Network();
    Network(Network&&) noexcept;
    Network& operator=(Network&&) noexcept;

    bool built() const { return impl_ != nullptr; }
    const NetworkConfig& config() const;

    NetworkOutputs forward(const Tensor& input, Mode mode);

    /// Eval-mode foreground probabilities [B, 1, X, Y, Z], no graph recorded.
    Tensor foreground_probabilities(const Tensor& input);

    /// Binary segmentation of a normalized volume (foreground iff its logit is
    /// strictly larger; ties are background). Keeps the input spacing.
    LabelVolume predict(const Volume& volume);

    std::vector<ParameterRef<float>> parameters() const;
    std::vector<BufferRef<float>> buffers();
    std::size_t parameter_count() const;

    /// Exchanges the parameters and statistics of the two prior transitions.
    void swap_prior_transitions();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Hard labels from [B, 2, ...] logits for batch item `item`.
LabelVolume labels_from_logits(const Tensor& logits, std::size_t item, const Spacing3& spacing);

}  // namespace autocenet
