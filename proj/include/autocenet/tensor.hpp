#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "autocenet/errors.hpp"

namespace autocenet {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

template <typename T>
class BasicTensor;

namespace detail {

template <typename T>
struct Storage;

// One recorded operation. The output storage owns its producing node; the node
// owns its inputs, so a graph stays alive exactly as long as its root does.
template <typename T>
struct OpNode {
    std::string name;
    std::vector<std::shared_ptr<Storage<T>>> inputs;
    Storage<T>* output = nullptr;
    std::function<void(std::span<const T> grad_out)> backward;
};

template <typename T>
struct Storage {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;
    bool requires_grad = false;
    std::shared_ptr<OpNode<T>> producer;
};

}  // namespace detail

/// Whether newly executed operations are recorded for differentiation (per thread).
bool grad_enabled();

/// Disables operation recording for the lifetime of the guard.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

/// Dense row-major array (last dimension fastest) with an optional gradient
/// buffer. Copies are shallow: two handles refer to the same storage.
/// Activations use the layout [batch, channel, x, y, z].
template <typename T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;
    BasicTensor(Shape shape, std::vector<T> data, bool requires_grad = false);

    static BasicTensor zeros(const Shape& shape, bool requires_grad = false);
    static BasicTensor full(const Shape& shape, T value, bool requires_grad = false);
    static BasicTensor scalar(T value, bool requires_grad = false);

    bool defined() const noexcept { return storage_ != nullptr; }
    const Shape& shape() const;
    std::size_t dim(std::size_t axis) const;
    std::size_t rank() const { return shape().size(); }
    std::size_t numel() const;

    std::span<T> data();
    std::span<const T> data() const;
    T item() const;

    bool requires_grad() const;
    void set_requires_grad(bool value);
    bool is_leaf() const;

    bool has_grad() const;
    std::span<const T> grad() const;
    /// Gradient buffer, allocated (zero-filled) on first access.
    std::span<T> grad_buffer() const;
    void zero_grad();

    /// New leaf holding a copy of the values, cut from any graph.
    BasicTensor detach() const;
    /// Deep copy including requires_grad, without graph or gradient.
    BasicTensor clone() const;

    /// Identity of the underlying storage, for comparisons in tests.
    const void* id() const noexcept { return storage_.get(); }

    const std::shared_ptr<detail::Storage<T>>& storage() const noexcept { return storage_; }

private:
    explicit BasicTensor(std::shared_ptr<detail::Storage<T>> storage) : storage_(std::move(storage)) {}

    detail::Storage<T>& checked() const;

    std::shared_ptr<detail::Storage<T>> storage_;

    template <typename U>
    friend BasicTensor<U> make_result(Shape, std::vector<U>, std::string, const std::vector<BasicTensor<U>>&,
                                      std::function<void(std::span<const U>)>);
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

/// Wraps freshly computed values as the output of an operation. The backward
/// callback receives the output gradient and must accumulate into the grad
/// buffers of whichever inputs require gradients. Nothing is recorded when
/// recording is disabled or no input requires gradients.
template <typename T>
BasicTensor<T> make_result(Shape shape, std::vector<T> data, std::string name,
                           const std::vector<BasicTensor<T>>& inputs,
                           std::function<void(std::span<const T>)> backward);

/// The operations reachable from a root, in topological order (inputs first).
template <typename T>
class Tape {
public:
    explicit Tape(BasicTensor<T> root);

    std::size_t size() const { return ops_.size(); }
    const std::vector<detail::OpNode<T>*>& ops() const { return ops_; }
    std::vector<std::string> op_names() const;

    /// Seeds d(root)/d(root) = 1 and visits every recorded operation once in
    /// reverse order. Leaf gradients accumulate across calls; intermediate
    /// gradients are reset first.
    void backward();

private:
    BasicTensor<T> root_;
    std::vector<detail::OpNode<T>*> ops_;
};

/// Reverse-mode differentiation from a scalar loss.
template <typename T>
void backward(const BasicTensor<T>& loss);

}  // namespace autocenet
