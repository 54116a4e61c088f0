#include "autocenet/tensor.hpp"

#include <algorithm>
#include <unordered_set>

namespace autocenet {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string to_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data, bool requires_grad) {
    for (auto d : shape) {
        if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + to_string(shape));
    }
    if (data.size() != autocenet::numel(shape)) {
        throw DimensionError("tensor data has " + std::to_string(data.size()) + " values but shape " +
                             to_string(shape) + " needs " + std::to_string(autocenet::numel(shape)));
    }
    storage_ = std::make_shared<detail::Storage<T>>();
    storage_->shape = std::move(shape);
    storage_->data = std::move(data);
    storage_->requires_grad = requires_grad;
}

template <typename T>
BasicTensor<T> BasicTensor<T>::zeros(const Shape& shape, bool requires_grad) {
    return full(shape, T(0), requires_grad);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::full(const Shape& shape, T value, bool requires_grad) {
    return BasicTensor(shape, std::vector<T>(autocenet::numel(shape), value), requires_grad);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::scalar(T value, bool requires_grad) {
    return BasicTensor(Shape{1}, std::vector<T>{value}, requires_grad);
}

template <typename T>
detail::Storage<T>& BasicTensor<T>::checked() const {
    if (!storage_) throw UsageError("use of an undefined tensor");
    return *storage_;
}

template <typename T>
const Shape& BasicTensor<T>::shape() const {
    return checked().shape;
}

template <typename T>
std::size_t BasicTensor<T>::dim(std::size_t axis) const {
    const auto& s = shape();
    if (axis >= s.size()) throw DimensionError("axis " + std::to_string(axis) + " out of range for " + to_string(s));
    return s[axis];
}

template <typename T>
std::size_t BasicTensor<T>::numel() const {
    return checked().data.size();
}

template <typename T>
std::span<T> BasicTensor<T>::data() {
    return checked().data;
}

template <typename T>
std::span<const T> BasicTensor<T>::data() const {
    return checked().data;
}

template <typename T>
T BasicTensor<T>::item() const {
    const auto& s = checked();
    if (s.data.size() != 1) throw UsageError("item() on a tensor with " + std::to_string(s.data.size()) + " values");
    return s.data[0];
}

template <typename T>
bool BasicTensor<T>::requires_grad() const {
    return checked().requires_grad;
}

template <typename T>
void BasicTensor<T>::set_requires_grad(bool value) {
    auto& s = checked();
    if (s.producer && !value) throw UsageError("cannot clear requires_grad on a non-leaf tensor");
    s.requires_grad = value;
}

template <typename T>
bool BasicTensor<T>::is_leaf() const {
    return checked().producer == nullptr;
}

template <typename T>
bool BasicTensor<T>::has_grad() const {
    return !checked().grad.empty();
}

template <typename T>
std::span<const T> BasicTensor<T>::grad() const {
    return checked().grad;
}

template <typename T>
std::span<T> BasicTensor<T>::grad_buffer() const {
    auto& s = checked();
    if (s.grad.empty()) s.grad.assign(s.data.size(), T(0));
    return s.grad;
}

template <typename T>
void BasicTensor<T>::zero_grad() {
    auto& s = checked();
    std::fill(s.grad.begin(), s.grad.end(), T(0));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::detach() const {
    const auto& s = checked();
    return BasicTensor(s.shape, s.data, false);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::clone() const {
    const auto& s = checked();
    return BasicTensor(s.shape, s.data, s.requires_grad && s.producer == nullptr);
}

template <typename T>
BasicTensor<T> make_result(Shape shape, std::vector<T> data, std::string name,
                           const std::vector<BasicTensor<T>>& inputs,
                           std::function<void(std::span<const T>)> backward) {
    BasicTensor<T> out(std::move(shape), std::move(data), false);
    if (!g_grad_enabled) return out;
    const bool any = std::any_of(inputs.begin(), inputs.end(),
                                 [](const BasicTensor<T>& t) { return t.defined() && t.requires_grad(); });
    if (!any) return out;

    auto node = std::make_shared<detail::OpNode<T>>();
    node->name = std::move(name);
    for (const auto& t : inputs) {
        if (t.defined()) node->inputs.push_back(t.storage());
    }
    node->output = out.storage_.get();
    node->backward = std::move(backward);
    out.storage_->requires_grad = true;
    out.storage_->producer = std::move(node);
    return out;
}

template <typename T>
Tape<T>::Tape(BasicTensor<T> root) : root_(std::move(root)) {
    if (!root_.defined()) throw UsageError("tape root is undefined");
    // Iterative post-order DFS: a node is emitted after all its input producers.
    std::unordered_set<const detail::OpNode<T>*> seen;
    struct Frame {
        detail::OpNode<T>* node;
        std::size_t next_input;
    };
    std::vector<Frame> stack;
    if (auto* start = root_.storage()->producer.get()) {
        stack.push_back({start, 0});
        seen.insert(start);
    }
    while (!stack.empty()) {
        auto& top = stack.back();
        if (top.next_input < top.node->inputs.size()) {
            auto* child = top.node->inputs[top.next_input++]->producer.get();
            if (child && seen.insert(child).second) stack.push_back({child, 0});
        } else {
            ops_.push_back(top.node);
            stack.pop_back();
        }
    }
}

template <typename T>
std::vector<std::string> Tape<T>::op_names() const {
    std::vector<std::string> names;
    names.reserve(ops_.size());
    for (const auto* op : ops_) names.push_back(op->name);
    return names;
}

template <typename T>
void Tape<T>::backward() {
    auto& root = *root_.storage();
    if (root.data.size() != 1) {
        throw UsageError("backward requires a scalar loss, got shape " + to_string(root.shape));
    }
    if (!root.requires_grad) throw UsageError("backward on a tensor that does not require grad");

    for (auto* op : ops_) {
        auto& g = op->output->grad;
        g.assign(op->output->data.size(), T(0));
    }
    if (root.grad.empty()) root.grad.assign(1, T(0));
    root.grad[0] += T(1);

    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
        auto* op = *it;
        op->backward(std::span<const T>(op->output->grad));
    }
}

template <typename T>
void backward(const BasicTensor<T>& loss) {
    Tape<T>(loss).backward();
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template class Tape<float>;
template class Tape<double>;
template BasicTensor<float> make_result(Shape, std::vector<float>, std::string, const std::vector<BasicTensor<float>>&,
                                        std::function<void(std::span<const float>)>);
template BasicTensor<double> make_result(Shape, std::vector<double>, std::string,
                                         const std::vector<BasicTensor<double>>&,
                                         std::function<void(std::span<const double>)>);
template void backward(const BasicTensor<float>&);
template void backward(const BasicTensor<double>&);

}  // namespace autocenet
