#include "autocenet/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace autocenet {

namespace {

void require_rank(const Shape& shape, std::size_t rank, const char* what) {
    if (shape.size() != rank) {
        throw DimensionError(std::string(what) + " must have rank " + std::to_string(rank) + ", got " +
                             to_string(shape));
    }
}

void require_same_shape(const Shape& a, const Shape& b, const char* op) {
    if (a != b) throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a) + " vs " + to_string(b));
}

template <typename T>
bool needs_grad(const BasicTensor<T>& t) {
    return t.defined() && t.requires_grad();
}

// Geometry of a direct convolution: input [B, Cin, in_dims], weight
// [Cout, Cin/groups, k, k, k], output [B, Cout, out_dims].
struct ConvGeometry {
    std::size_t batch = 0;
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t groups = 1;
    std::size_t kernel = 1;
    std::size_t stride = 1;
    std::size_t pad = 0;
    std::array<std::size_t, 3> in_dims{};
    std::array<std::size_t, 3> out_dims{};

    std::size_t in_plane() const { return in_dims[0] * in_dims[1] * in_dims[2]; }
    std::size_t out_plane() const { return out_dims[0] * out_dims[1] * out_dims[2]; }
    std::size_t cin_per_group() const { return in_channels / groups; }
    std::size_t cout_per_group() const { return out_channels / groups; }
    std::size_t taps() const { return kernel * kernel * kernel; }
};

// Output index range [lo, hi) for which o * stride + tap - pad falls inside [0, in).
std::pair<std::size_t, std::size_t> valid_range(std::size_t in, std::size_t out, std::size_t tap,
                                                std::size_t stride, std::size_t pad) {
    const long off = static_cast<long>(tap) - static_cast<long>(pad);
    const long s = static_cast<long>(stride);
    long lo = off < 0 ? (-off + s - 1) / s : 0;
    const long last = static_cast<long>(in) - 1 - off;
    if (last < 0) return {0, 0};
    long hi = std::min<long>(last / s + 1, static_cast<long>(out));
    if (hi < lo) hi = lo;
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

// Calls fn(weight_index, out_offset, in_offset, count) for every contiguous
// output row touched by one kernel tap. Along the row, output element j pairs
// with input element in_offset + j * stride.
template <typename Fn>
void visit_rows(const ConvGeometry& g, Fn&& fn) {
    const std::size_t k = g.kernel;
    const std::size_t s = g.stride;
    const std::size_t cin_g = g.cin_per_group();
    const std::size_t cout_g = g.cout_per_group();
    const auto [Xo, Yo, Zo] = g.out_dims;
    const auto [Xi, Yi, Zi] = g.in_dims;
    const bool pointwise = k == 1 && s == 1;

    for (std::size_t b = 0; b < g.batch; ++b) {
        for (std::size_t co = 0; co < g.out_channels; ++co) {
            const std::size_t group = co / cout_g;
            const std::size_t out_base = (b * g.out_channels + co) * g.out_plane();
            for (std::size_t cig = 0; cig < cin_g; ++cig) {
                const std::size_t ci = group * cin_g + cig;
                const std::size_t in_base = (b * g.in_channels + ci) * g.in_plane();
                const std::size_t w_base = (co * cin_g + cig) * g.taps();
                if (pointwise) {
                    fn(w_base, out_base, in_base, g.out_plane());
                    continue;
                }
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const auto [x0, x1] = valid_range(Xi, Xo, kx, s, g.pad);
                    for (std::size_t ky = 0; ky < k; ++ky) {
                        const auto [y0, y1] = valid_range(Yi, Yo, ky, s, g.pad);
                        for (std::size_t kz = 0; kz < k; ++kz) {
                            const auto [z0, z1] = valid_range(Zi, Zo, kz, s, g.pad);
                            if (z0 >= z1) continue;
                            const std::size_t w_idx = w_base + (kx * k + ky) * k + kz;
                            const std::size_t iz0 = z0 * s + kz - g.pad;
                            for (std::size_t ox = x0; ox < x1; ++ox) {
                                const std::size_t ix = ox * s + kx - g.pad;
                                for (std::size_t oy = y0; oy < y1; ++oy) {
                                    const std::size_t iy = oy * s + ky - g.pad;
                                    fn(w_idx, out_base + (ox * Yo + oy) * Zo + z0, in_base + (ix * Yi + iy) * Zi + iz0,
                                       z1 - z0);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
void conv_forward_kernel(const ConvGeometry& g, const T* in, const T* w, const T* bias, T* out) {
    const std::size_t plane = g.out_plane();
    for (std::size_t b = 0; b < g.batch; ++b) {
        for (std::size_t co = 0; co < g.out_channels; ++co) {
            T* o = out + (b * g.out_channels + co) * plane;
            std::fill(o, o + plane, bias ? bias[co] : T(0));
        }
    }
    const std::size_t s = g.stride;
    visit_rows(g, [&](std::size_t wi, std::size_t oo, std::size_t io, std::size_t n) {
        const T wv = w[wi];
        T* __restrict o = out + oo;
        const T* __restrict i = in + io;
        if (s == 1) {
            for (std::size_t j = 0; j < n; ++j) o[j] += wv * i[j];
        } else {
            for (std::size_t j = 0; j < n; ++j) o[j] += wv * i[j * s];
        }
    });
}

// grad_in += W^T * grad_out; grad_in must be pre-sized.
template <typename T>
void conv_backward_input_kernel(const ConvGeometry& g, const T* grad_out, const T* w, T* grad_in) {
    const std::size_t s = g.stride;
    visit_rows(g, [&](std::size_t wi, std::size_t oo, std::size_t io, std::size_t n) {
        const T wv = w[wi];
        const T* __restrict go = grad_out + oo;
        T* __restrict gi = grad_in + io;
        if (s == 1) {
            for (std::size_t j = 0; j < n; ++j) gi[j] += wv * go[j];
        } else {
            for (std::size_t j = 0; j < n; ++j) gi[j * s] += wv * go[j];
        }
    });
}

template <typename T>
void conv_backward_weight_kernel(const ConvGeometry& g, const T* grad_out, const T* in, T* grad_w,
                                 std::size_t weight_count) {
    std::vector<double> acc(weight_count, 0.0);
    const std::size_t s = g.stride;
    visit_rows(g, [&](std::size_t wi, std::size_t oo, std::size_t io, std::size_t n) {
        const T* __restrict go = grad_out + oo;
        const T* __restrict i = in + io;
        T partial = 0;
        if (s == 1) {
            for (std::size_t j = 0; j < n; ++j) partial += go[j] * i[j];
        } else {
            for (std::size_t j = 0; j < n; ++j) partial += go[j] * i[j * s];
        }
        acc[wi] += static_cast<double>(partial);
    });
    for (std::size_t i = 0; i < weight_count; ++i) grad_w[i] += static_cast<T>(acc[i]);
}

template <typename T>
void bias_backward(std::size_t batch, std::size_t channels, std::size_t plane, const T* grad_out, T* grad_bias) {
    for (std::size_t c = 0; c < channels; ++c) {
        double acc = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
            const T* go = grad_out + (b * channels + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) acc += go[i];
        }
        grad_bias[c] += static_cast<T>(acc);
    }
}

void check_kernel_stride(std::size_t k, int stride) {
    if (k != 1 && k != 2 && k != 3) throw ConfigError("conv3d: kernel size must be 1, 2 or 3, got " + std::to_string(k));
    if (stride != 1 && stride != 2) throw ConfigError("conv3d: stride must be 1 or 2, got " + std::to_string(stride));
    if (k == 2 && stride != 2) throw ConfigError("conv3d: kernel 2 requires stride 2");
}

template <typename T>
void check_bias(const BasicTensor<T>& bias, std::size_t channels, const char* op) {
    if (!bias.defined()) return;
    if (bias.shape() != Shape{channels}) {
        throw DimensionError(std::string(op) + ": bias shape " + to_string(bias.shape()) + " does not match " +
                             std::to_string(channels) + " output channels");
    }
}

}  // namespace

template <typename T>
BasicTensor<T> conv3d(const BasicTensor<T>& input, const BasicTensor<T>& weight, const BasicTensor<T>& bias,
                      int stride, int groups) {
    require_rank(input.shape(), 5, "conv3d input");
    require_rank(weight.shape(), 5, "conv3d weight");
    if (groups < 1) throw ConfigError("conv3d: groups must be positive");
    const auto& is = input.shape();
    const auto& ws = weight.shape();
    const std::size_t k = ws[2];
    if (ws[3] != k || ws[4] != k) throw DimensionError("conv3d: kernel must be cubic, got " + to_string(ws));
    check_kernel_stride(k, stride);

    ConvGeometry g;
    g.batch = is[0];
    g.in_channels = is[1];
    g.out_channels = ws[0];
    g.groups = static_cast<std::size_t>(groups);
    g.kernel = k;
    g.stride = static_cast<std::size_t>(stride);
    g.pad = k == 3 ? 1 : 0;
    if (g.in_channels % g.groups != 0) {
        throw ConfigError("conv3d: " + std::to_string(g.in_channels) + " input channels not divisible by " +
                          std::to_string(groups) + " groups");
    }
    if (g.out_channels % g.groups != 0) {
        throw ConfigError("conv3d: " + std::to_string(g.out_channels) + " output channels not divisible by " +
                          std::to_string(groups) + " groups");
    }
    if (ws[1] != g.cin_per_group()) {
        throw DimensionError("conv3d: weight " + to_string(ws) + " expects " + std::to_string(ws[1]) +
                             " channels per group, input provides " + std::to_string(g.cin_per_group()));
    }
    for (std::size_t a = 0; a < 3; ++a) {
        g.in_dims[a] = is[2 + a];
        if (g.stride == 2 && g.in_dims[a] % 2 != 0) {
            throw DimensionError("conv3d: stride 2 needs even spatial dims, got " + to_string(is));
        }
        g.out_dims[a] = g.in_dims[a] / g.stride;
    }
    check_bias(bias, g.out_channels, "conv3d");

    std::vector<T> out(g.batch * g.out_channels * g.out_plane());
    conv_forward_kernel(g, input.data().data(), weight.data().data(), bias.defined() ? bias.data().data() : nullptr,
                        out.data());

    Shape out_shape{g.batch, g.out_channels, g.out_dims[0], g.out_dims[1], g.out_dims[2]};
    return make_result<T>(std::move(out_shape), std::move(out), "conv3d", {input, weight, bias},
                          [input, weight, bias, g](std::span<const T> grad_out) mutable {
                              if (needs_grad(input)) {
                                  conv_backward_input_kernel(g, grad_out.data(), weight.data().data(),
                                                             input.grad_buffer().data());
                              }
                              if (needs_grad(weight)) {
                                  conv_backward_weight_kernel(g, grad_out.data(), input.data().data(),
                                                              weight.grad_buffer().data(), weight.numel());
                              }
                              if (needs_grad(bias)) {
                                  bias_backward(g.batch, g.out_channels, g.out_plane(), grad_out.data(),
                                                bias.grad_buffer().data());
                              }
                          });
}

template <typename T>
BasicTensor<T> conv_transpose3d(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                                const BasicTensor<T>& bias, int stride) {
    require_rank(input.shape(), 5, "conv_transpose3d input");
    require_rank(weight.shape(), 5, "conv_transpose3d weight");
    const auto& is = input.shape();
    const auto& ws = weight.shape();
    if (stride != 2 || ws[2] != 2 || ws[3] != 2 || ws[4] != 2) {
        throw ConfigError("conv_transpose3d: only kernel 2 with stride 2 is supported");
    }
    if (ws[0] != is[1]) {
        throw DimensionError("conv_transpose3d: weight " + to_string(ws) + " does not match input channels " +
                             std::to_string(is[1]));
    }

    // Geometry of the forward convolution whose input gradient this is.
    ConvGeometry g;
    g.batch = is[0];
    g.in_channels = ws[1];
    g.out_channels = ws[0];
    g.groups = 1;
    g.kernel = 2;
    g.stride = 2;
    g.pad = 0;
    for (std::size_t a = 0; a < 3; ++a) {
        g.out_dims[a] = is[2 + a];
        g.in_dims[a] = is[2 + a] * 2;
    }
    check_bias(bias, g.in_channels, "conv_transpose3d");

    const std::size_t plane = g.in_plane();
    std::vector<T> out(g.batch * g.in_channels * plane, T(0));
    if (bias.defined()) {
        const auto bv = bias.data();
        for (std::size_t b = 0; b < g.batch; ++b) {
            for (std::size_t c = 0; c < g.in_channels; ++c) {
                std::fill_n(out.begin() + static_cast<std::ptrdiff_t>((b * g.in_channels + c) * plane), plane, bv[c]);
            }
        }
    }
    conv_backward_input_kernel(g, input.data().data(), weight.data().data(), out.data());

    Shape out_shape{g.batch, g.in_channels, g.in_dims[0], g.in_dims[1], g.in_dims[2]};
    return make_result<T>(std::move(out_shape), std::move(out), "conv_transpose3d", {input, weight, bias},
                          [input, weight, bias, g](std::span<const T> grad_out) mutable {
                              if (needs_grad(input)) {
                                  std::vector<T> tmp(input.numel());
                                  conv_forward_kernel<T>(g, grad_out.data(), weight.data().data(), nullptr,
                                                         tmp.data());
                                  auto gi = input.grad_buffer();
                                  for (std::size_t i = 0; i < tmp.size(); ++i) gi[i] += tmp[i];
                              }
                              if (needs_grad(weight)) {
                                  conv_backward_weight_kernel(g, input.data().data(), grad_out.data(),
                                                              weight.grad_buffer().data(), weight.numel());
                              }
                              if (needs_grad(bias)) {
                                  bias_backward(g.batch, g.in_channels, g.in_plane(), grad_out.data(),
                                                bias.grad_buffer().data());
                              }
                          });
}

template <typename T>
BasicTensor<T> batch_norm3d(const BasicTensor<T>& input, const BasicTensor<T>& gamma, const BasicTensor<T>& beta,
                            BatchNormStats<T>& stats, Mode mode) {
    require_rank(input.shape(), 5, "batch_norm3d input");
    const auto& is = input.shape();
    const std::size_t B = is[0], C = is[1];
    const std::size_t plane = is[2] * is[3] * is[4];
    if (gamma.shape() != Shape{C} || beta.shape() != Shape{C}) {
        throw DimensionError("batch_norm3d: affine parameters must have shape [" + std::to_string(C) + "]");
    }
    if (stats.running_mean.size() != C || stats.running_var.size() != C) {
        throw DimensionError("batch_norm3d: running statistics sized for " +
                             std::to_string(stats.running_mean.size()) + " channels, input has " + std::to_string(C));
    }

    const auto x = input.data();
    const auto gm = gamma.data();
    const auto bt = beta.data();
    const std::size_t count = B * plane;
    std::vector<T> mean(C), inv_std(C);

    for (std::size_t c = 0; c < C; ++c) {
        if (mode == Mode::train) {
            double s = 0.0;
            for (std::size_t b = 0; b < B; ++b) {
                const T* p = x.data() + (b * C + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) s += p[i];
            }
            const double m = s / static_cast<double>(count);
            double v = 0.0;
            for (std::size_t b = 0; b < B; ++b) {
                const T* p = x.data() + (b * C + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    const double d = p[i] - m;
                    v += d * d;
                }
            }
            const double biased = v / static_cast<double>(count);
            const double unbiased = count > 1 ? v / static_cast<double>(count - 1) : biased;
            mean[c] = static_cast<T>(m);
            inv_std[c] = static_cast<T>(1.0 / std::sqrt(biased + stats.eps));
            stats.running_mean[c] =
                static_cast<T>((1.0 - stats.momentum) * stats.running_mean[c] + stats.momentum * m);
            stats.running_var[c] =
                static_cast<T>((1.0 - stats.momentum) * stats.running_var[c] + stats.momentum * unbiased);
        } else {
            mean[c] = stats.running_mean[c];
            inv_std[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(stats.running_var[c]) + stats.eps));
        }
    }

    std::vector<T> normalized(input.numel());
    std::vector<T> out(input.numel());
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t c = 0; c < C; ++c) {
            const std::size_t base = (b * C + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                const T n = (x[base + i] - mean[c]) * inv_std[c];
                normalized[base + i] = n;
                out[base + i] = gm[c] * n + bt[c];
            }
        }
    }

    return make_result<T>(
        is, std::move(out), "batch_norm3d", {input, gamma, beta},
        [input, gamma, beta, normalized = std::move(normalized), inv_std = std::move(inv_std), mode, B, C,
         plane](std::span<const T> grad_out) mutable {
            const auto gm = gamma.data();
            const double count = static_cast<double>(B * plane);
            std::vector<double> sum_dy(C, 0.0), sum_dy_xhat(C, 0.0);
            for (std::size_t b = 0; b < B; ++b) {
                for (std::size_t c = 0; c < C; ++c) {
                    const std::size_t base = (b * C + c) * plane;
                    for (std::size_t i = 0; i < plane; ++i) {
                        sum_dy[c] += grad_out[base + i];
                        sum_dy_xhat[c] += static_cast<double>(grad_out[base + i]) * normalized[base + i];
                    }
                }
            }
            if (needs_grad(gamma)) {
                auto gg = gamma.grad_buffer();
                for (std::size_t c = 0; c < C; ++c) gg[c] += static_cast<T>(sum_dy_xhat[c]);
            }
            if (needs_grad(beta)) {
                auto gb = beta.grad_buffer();
                for (std::size_t c = 0; c < C; ++c) gb[c] += static_cast<T>(sum_dy[c]);
            }
            if (needs_grad(input)) {
                auto gi = input.grad_buffer();
                for (std::size_t b = 0; b < B; ++b) {
                    for (std::size_t c = 0; c < C; ++c) {
                        const std::size_t base = (b * C + c) * plane;
                        const T k = gm[c] * inv_std[c];
                        if (mode == Mode::train) {
                            const T mean_dy = static_cast<T>(sum_dy[c] / count);
                            const T mean_dy_xhat = static_cast<T>(sum_dy_xhat[c] / count);
                            for (std::size_t i = 0; i < plane; ++i) {
                                gi[base + i] += k * (grad_out[base + i] - mean_dy - normalized[base + i] * mean_dy_xhat);
                            }
                        } else {
                            for (std::size_t i = 0; i < plane; ++i) gi[base + i] += k * grad_out[base + i];
                        }
                    }
                }
            }
        });
}

namespace {
thread_local ReluPatternRecorder* g_relu_recorder = nullptr;
}

ReluPatternRecorder::ReluPatternRecorder() : previous_(g_relu_recorder) { g_relu_recorder = this; }
ReluPatternRecorder::~ReluPatternRecorder() { g_relu_recorder = previous_; }
ReluPatternRecorder* detail::active_relu_recorder() { return g_relu_recorder; }

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& input) {
    const auto x = input.data();
    std::vector<T> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
    if (auto* rec = g_relu_recorder) {
        for (auto v : x) rec->record(v > T(0));
    }
    return make_result<T>(input.shape(), std::move(out), "relu", {input},
                          [input](std::span<const T> grad_out) mutable {
                              const auto x = input.data();
                              auto gi = input.grad_buffer();
                              for (std::size_t i = 0; i < x.size(); ++i) {
                                  if (x[i] > T(0)) gi[i] += grad_out[i];
                              }
                          });
}

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    require_same_shape(a.shape(), b.shape(), "add");
    const auto x = a.data();
    const auto y = b.data();
    std::vector<T> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
    return make_result<T>(a.shape(), std::move(out), "add", {a, b}, [a, b](std::span<const T> g) mutable {
        for (auto* t : {&a, &b}) {
            if (!needs_grad(*t)) continue;
            auto gt = t->grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) gt[i] += g[i];
        }
    });
}

template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    require_same_shape(a.shape(), b.shape(), "sub");
    const auto x = a.data();
    const auto y = b.data();
    std::vector<T> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
    return make_result<T>(a.shape(), std::move(out), "sub", {a, b}, [a, b](std::span<const T> g) mutable {
        if (needs_grad(a)) {
            auto ga = a.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (needs_grad(b)) {
            auto gb = b.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
    });
}

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    require_same_shape(a.shape(), b.shape(), "mul");
    const auto x = a.data();
    const auto y = b.data();
    std::vector<T> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
    return make_result<T>(a.shape(), std::move(out), "mul", {a, b}, [a, b](std::span<const T> g) mutable {
        const auto x = a.data();
        const auto y = b.data();
        if (needs_grad(a)) {
            auto ga = a.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
        }
        if (needs_grad(b)) {
            auto gb = b.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x[i];
        }
    });
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& input, T factor) {
    const auto x = input.data();
    std::vector<T> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * factor;
    return make_result<T>(input.shape(), std::move(out), "scale", {input},
                          [input, factor](std::span<const T> g) mutable {
                              auto gi = input.grad_buffer();
                              for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i] * factor;
                          });
}

template <typename T>
BasicTensor<T> concat_channels(const std::vector<BasicTensor<T>>& inputs) {
    if (inputs.empty()) throw DimensionError("concat_channels: no inputs");
    const Shape& first = inputs.front().shape();
    if (first.size() < 2) throw DimensionError("concat_channels: inputs need a channel axis");
    std::size_t channels = 0;
    for (const auto& t : inputs) {
        const auto& s = t.shape();
        if (s.size() != first.size() || s[0] != first[0] || !std::equal(s.begin() + 2, s.end(), first.begin() + 2)) {
            throw DimensionError("concat_channels: " + to_string(s) + " incompatible with " + to_string(first));
        }
        channels += s[1];
    }
    const std::size_t B = first[0];
    std::size_t plane = 1;
    for (std::size_t a = 2; a < first.size(); ++a) plane *= first[a];

    Shape out_shape = first;
    out_shape[1] = channels;
    std::vector<T> out(B * channels * plane);
    std::size_t offset = 0;
    for (const auto& t : inputs) {
        const std::size_t c = t.dim(1);
        const auto d = t.data();
        for (std::size_t b = 0; b < B; ++b) {
            std::copy_n(d.begin() + static_cast<std::ptrdiff_t>(b * c * plane), c * plane,
                        out.begin() + static_cast<std::ptrdiff_t>((b * channels + offset) * plane));
        }
        offset += c;
    }
    return make_result<T>(std::move(out_shape), std::move(out), "concat_channels", inputs,
                          [inputs, B, channels, plane](std::span<const T> g) mutable {
                              std::size_t offset = 0;
                              for (auto& t : inputs) {
                                  const std::size_t c = t.dim(1);
                                  if (needs_grad(t)) {
                                      auto gt = t.grad_buffer();
                                      for (std::size_t b = 0; b < B; ++b) {
                                          const T* src = g.data() + (b * channels + offset) * plane;
                                          T* dst = gt.data() + b * c * plane;
                                          for (std::size_t i = 0; i < c * plane; ++i) dst[i] += src[i];
                                      }
                                  }
                                  offset += c;
                              }
                          });
}

template <typename T>
BasicTensor<T> scale_channels(const BasicTensor<T>& input, const BasicTensor<T>& attention) {
    const auto& s = input.shape();
    if (s.size() < 2) throw DimensionError("scale_channels: input needs a channel axis");
    const std::size_t B = s[0], C = s[1];
    if (attention.shape() != Shape{C}) {
        throw DimensionError("scale_channels: attention " + to_string(attention.shape()) + " vs " +
                             std::to_string(C) + " channels");
    }
    const std::size_t plane = input.numel() / (B * C);
    const auto x = input.data();
    const auto a = attention.data();
    std::vector<T> out(x.size());
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t c = 0; c < C; ++c) {
            const std::size_t base = (b * C + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) out[base + i] = x[base + i] * a[c];
        }
    }
    return make_result<T>(s, std::move(out), "scale_channels", {input, attention},
                          [input, attention, B, C, plane](std::span<const T> g) mutable {
                              const auto x = input.data();
                              const auto a = attention.data();
                              if (needs_grad(input)) {
                                  auto gi = input.grad_buffer();
                                  for (std::size_t b = 0; b < B; ++b)
                                      for (std::size_t c = 0; c < C; ++c) {
                                          const std::size_t base = (b * C + c) * plane;
                                          for (std::size_t i = 0; i < plane; ++i) gi[base + i] += g[base + i] * a[c];
                                      }
                              }
                              if (needs_grad(attention)) {
                                  auto ga = attention.grad_buffer();
                                  for (std::size_t c = 0; c < C; ++c) {
                                      double acc = 0.0;
                                      for (std::size_t b = 0; b < B; ++b) {
                                          const std::size_t base = (b * C + c) * plane;
                                          for (std::size_t i = 0; i < plane; ++i)
                                              acc += static_cast<double>(g[base + i]) * x[base + i];
                                      }
                                      ga[c] += static_cast<T>(acc);
                                  }
                              }
                          });
}

template <typename T>
BasicTensor<T> channel_softmax(const BasicTensor<T>& input) {
    const auto& s = input.shape();
    if (s.size() < 2 || s[1] < 2) throw DimensionError("channel_softmax: needs at least 2 channels, got " + to_string(s));
    const std::size_t B = s[0], C = s[1];
    const std::size_t plane = input.numel() / (B * C);
    const auto x = input.data();
    std::vector<T> out(x.size());
    for (std::size_t b = 0; b < B; ++b) {
        const std::size_t base = b * C * plane;
        for (std::size_t i = 0; i < plane; ++i) {
            T mx = x[base + i];
            for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, x[base + c * plane + i]);
            T denom = 0;
            for (std::size_t c = 0; c < C; ++c) {
                const T e = std::exp(x[base + c * plane + i] - mx);
                out[base + c * plane + i] = e;
                denom += e;
            }
            for (std::size_t c = 0; c < C; ++c) out[base + c * plane + i] /= denom;
        }
    }
    auto probs = out;
    return make_result<T>(s, std::move(out), "channel_softmax", {input},
                          [input, probs = std::move(probs), B, C, plane](std::span<const T> g) mutable {
                              auto gi = input.grad_buffer();
                              for (std::size_t b = 0; b < B; ++b) {
                                  const std::size_t base = b * C * plane;
                                  for (std::size_t i = 0; i < plane; ++i) {
                                      T dot = 0;
                                      for (std::size_t c = 0; c < C; ++c)
                                          dot += probs[base + c * plane + i] * g[base + c * plane + i];
                                      for (std::size_t c = 0; c < C; ++c) {
                                          const std::size_t k = base + c * plane + i;
                                          gi[k] += probs[k] * (g[k] - dot);
                                      }
                                  }
                              }
                          });
}

template <typename T>
BasicTensor<T> select_channel(const BasicTensor<T>& input, std::size_t channel) {
    const auto& s = input.shape();
    if (s.size() < 2 || channel >= s[1]) {
        throw DimensionError("select_channel: channel " + std::to_string(channel) + " out of range for " + to_string(s));
    }
    const std::size_t B = s[0], C = s[1];
    const std::size_t plane = input.numel() / (B * C);
    const auto x = input.data();
    std::vector<T> out(B * plane);
    for (std::size_t b = 0; b < B; ++b) {
        std::copy_n(x.begin() + static_cast<std::ptrdiff_t>((b * C + channel) * plane), plane,
                    out.begin() + static_cast<std::ptrdiff_t>(b * plane));
    }
    Shape out_shape = s;
    out_shape[1] = 1;
    return make_result<T>(std::move(out_shape), std::move(out), "select_channel", {input},
                          [input, channel, B, C, plane](std::span<const T> g) mutable {
                              auto gi = input.grad_buffer();
                              for (std::size_t b = 0; b < B; ++b) {
                                  T* dst = gi.data() + (b * C + channel) * plane;
                                  for (std::size_t i = 0; i < plane; ++i) dst[i] += g[b * plane + i];
                              }
                          });
}

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& input) {
    double acc = 0.0;
    for (auto v : input.data()) acc += v;
    return make_result<T>(Shape{1}, std::vector<T>{static_cast<T>(acc)}, "sum", {input},
                          [input](std::span<const T> g) mutable {
                              for (auto& v : input.grad_buffer()) v += g[0];
                          });
}

template <typename T>
BasicTensor<T> sum_squares(const BasicTensor<T>& input) {
    double acc = 0.0;
    for (auto v : input.data()) acc += static_cast<double>(v) * v;
    return make_result<T>(Shape{1}, std::vector<T>{static_cast<T>(acc)}, "sum_squares", {input},
                          [input](std::span<const T> g) mutable {
                              const auto x = input.data();
                              auto gi = input.grad_buffer();
                              for (std::size_t i = 0; i < x.size(); ++i) gi[i] += T(2) * x[i] * g[0];
                          });
}

#define AUTOCENET_INSTANTIATE_OPS(T)                                                                              \
    template BasicTensor<T> conv3d(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&, int, int); \
    template BasicTensor<T> conv_transpose3d(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&,  \
                                             int);                                                                 \
    template BasicTensor<T> batch_norm3d(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&,      \
                                         BatchNormStats<T>&, Mode);                                                \
    template BasicTensor<T> relu(const BasicTensor<T>&);                                                           \
    template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);                                     \
    template BasicTensor<T> sub(const BasicTensor<T>&, const BasicTensor<T>&);                                     \
    template BasicTensor<T> mul(const BasicTensor<T>&, const BasicTensor<T>&);                                     \
    template BasicTensor<T> scale(const BasicTensor<T>&, T);                                                       \
    template BasicTensor<T> concat_channels(const std::vector<BasicTensor<T>>&);                                   \
    template BasicTensor<T> scale_channels(const BasicTensor<T>&, const BasicTensor<T>&);                          \
    template BasicTensor<T> channel_softmax(const BasicTensor<T>&);                                                \
    template BasicTensor<T> select_channel(const BasicTensor<T>&, std::size_t);                                    \
    template BasicTensor<T> sum(const BasicTensor<T>&);                                                            \
    template BasicTensor<T> sum_squares(const BasicTensor<T>&);

AUTOCENET_INSTANTIATE_OPS(float)
AUTOCENET_INSTANTIATE_OPS(double)

}  // namespace autocenet
