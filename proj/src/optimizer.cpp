#include "autocenet/optimizer.hpp"

#include <cmath>

namespace autocenet {

OptimizerKind parse_optimizer_kind(const std::string& name) {
    if (name == "radam") return OptimizerKind::radam;
    if (name == "adam") return OptimizerKind::adam;
    throw ConfigError("unknown optimizer '" + name + "' (expected radam or adam)");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::radam ? "radam" : "adam"; }

void OptimizerConfig::validate() const {
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
        throw ConfigError("optimizer betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) throw ConfigError("optimizer eps must be positive");
}

Optimizer::Optimizer(std::vector<ParameterRef<float>> params, OptimizerConfig config)
    : params_(std::move(params)), config_(config) {
    config_.validate();
    for (const auto& p : params_) {
        m_.emplace_back(p.tensor.numel(), 0.0f);
        v_.emplace_back(p.tensor.numel(), 0.0f);
    }
}

void Optimizer::step(double lr) {
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    for (const auto& p : params_) {
        if (!p.tensor.has_grad()) throw UsageError("parameter '" + p.name + "' has no gradient");
    }
    ++t_;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double t = static_cast<double>(t_);
    const double bias1 = 1.0 - std::pow(b1, t);
    const double bias2 = 1.0 - std::pow(b2, t);

    bool adaptive = true;
    double rect = 1.0;
    if (config_.kind == OptimizerKind::radam) {
        const double rho_inf = 2.0 / (1.0 - b2) - 1.0;
        const double rho_t = rho_inf - 2.0 * t * std::pow(b2, t) / bias2;
        adaptive = rho_t > 4.0;
        if (adaptive) {
            rect = std::sqrt((rho_t - 4.0) * (rho_t - 2.0) * rho_inf / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t));
        }
    }

    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto w = params_[i].tensor.data();
        const auto g = params_[i].tensor.grad();
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < m.size(); ++j) {
            const double gj = g[j];
            m[j] = static_cast<float>(b1 * m[j] + (1.0 - b1) * gj);
            v[j] = static_cast<float>(b2 * v[j] + (1.0 - b2) * gj * gj);
            const double m_hat = m[j] / bias1;
            double update;
            if (adaptive) {
                const double v_hat = std::sqrt(v[j] / bias2);
                update = rect * m_hat / (v_hat + config_.eps);
            } else {
                update = m_hat;
            }
            w[j] = static_cast<float>(w[j] - lr * update);
        }
    }
}

void Optimizer::zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
}

std::vector<NamedArray> Optimizer::state() const {
    std::vector<NamedArray> out;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        out.push_back({"optim.m." + params_[i].name, params_[i].tensor.shape(), m_[i]});
        out.push_back({"optim.v." + params_[i].name, params_[i].tensor.shape(), v_[i]});
    }
    out.push_back(counter_blob("optim.step", t_));
    return out;
}

void Optimizer::load_state(const std::vector<NamedArray>& blobs) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const auto& m = find_blob(blobs, "optim.m." + params_[i].name);
        const auto& v = find_blob(blobs, "optim.v." + params_[i].name);
        if (m.values.size() != m_[i].size() || v.values.size() != v_[i].size()) {
            throw DataError("optimizer state for '" + params_[i].name + "' has the wrong size");
        }
        m_[i] = m.values;
        v_[i] = v.values;
    }
    t_ = counter_from_blob(find_blob(blobs, "optim.step"));
}

double scheduled_lr(double lr0, double factor, std::size_t every, std::size_t epoch) {
    if (every == 0) throw ConfigError("lr decay interval must be positive");
    return lr0 * std::pow(factor, static_cast<double>(epoch / every));
}

NamedArray counter_blob(const std::string& name, std::uint64_t value) {
    if (value > (1u << 24)) throw DataError("counter '" + name + "' is too large to store exactly");
    return {name, Shape{1}, {static_cast<float>(value)}};
}

std::uint64_t counter_from_blob(const NamedArray& blob) {
    if (blob.values.size() != 1 || !(blob.values[0] >= 0.0f) || blob.values[0] != std::floor(blob.values[0])) {
        throw DataError("blob '" + blob.name + "' is not a counter");
    }
    return static_cast<std::uint64_t>(blob.values[0]);
}

}  // namespace autocenet
