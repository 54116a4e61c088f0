#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "autocenet/tensor.hpp"

namespace autocenet {

struct GradCheckOptions {
    double step = 1e-3;
    double rel_tolerance = 1e-3;
    double abs_tolerance = 1e-6;
    /// Random coordinates probed per leaf tensor.
    std::size_t coordinates = 20;
};

struct GradCheckResult {
    std::string name;
    std::size_t coordinates = 0;
    std::size_t failures = 0;
    /// Coordinates whose stencil crossed a ReLU kink and were replaced.
    std::size_t skipped = 0;
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;

    bool passed() const { return coordinates > 0 && failures == 0; }
};

/// A coordinate passes when the relative error is within tolerance, or when
/// the analytic value is below abs_tolerance and the absolute error is too.
bool gradient_matches(double analytic, double numeric, const GradCheckOptions& options);

/// Compares the gradients of the scalar `loss_fn()` with respect to `leaves`
/// against central finite differences at randomly chosen coordinates. The
/// closure must read the leaves' current values on every call. Coordinates
/// whose +-step stencil changes any ReLU sign are not differentiable across the
/// stencil; they are skipped and another coordinate is drawn.
GradCheckResult check_gradients(const std::string& name, const std::vector<TensorD>& leaves,
                                const std::function<TensorD()>& loss_fn, std::uint64_t seed,
                                const GradCheckOptions& options = {});

/// Finite-difference checks for every differentiable operation, loss and
/// composite block, in double precision.
std::vector<GradCheckResult> run_gradient_suite(std::uint64_t seed, const GradCheckOptions& options = {});

}  // namespace autocenet
