#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autocenet/checkpoint.hpp"
#include "autocenet/layers.hpp"

namespace autocenet {

enum class OptimizerKind { radam, adam };

OptimizerKind parse_optimizer_kind(const std::string& name);
std::string to_string(OptimizerKind kind);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::radam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const;
};

/// Adaptive-moment optimizer. RAdam rectifies the variance of the adaptive
/// learning rate: while the approximated SMA length rho_t is at most 4 it takes
/// a bias-corrected momentum step, afterwards the rectified adaptive step.
/// Adam skips the rectification. No weight decay is applied here.
class Optimizer {
public:
    Optimizer(std::vector<ParameterRef<float>> params, OptimizerConfig config = {});

    /// Updates every parameter from its accumulated gradient. Throws
    /// UsageError when a parameter has no gradient.
    void step(double lr);
    void zero_grad();

    std::uint64_t steps() const { return t_; }
    const OptimizerConfig& config() const { return config_; }

    /// First/second moments ("optim.m.<name>", "optim.v.<name>") and the step
    /// counter ("optim.step").
    std::vector<NamedArray> state() const;
    void load_state(const std::vector<NamedArray>& blobs);

private:
    std::vector<ParameterRef<float>> params_;
    OptimizerConfig config_;
    std::vector<std::vector<float>> m_, v_;
    std::uint64_t t_ = 0;
};

/// Step-decay schedule: lr0 * factor^floor(epoch / every).
double scheduled_lr(double lr0, double factor, std::size_t every, std::size_t epoch);

/// Stores a counter exactly in a float blob (values up to 2^24).
NamedArray counter_blob(const std::string& name, std::uint64_t value);
std::uint64_t counter_from_blob(const NamedArray& blob);

}  // namespace autocenet
