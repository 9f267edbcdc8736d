#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "senc/tensor.hpp"

namespace senc {

// A named, optionally trainable tensor owned by a model. `grad` always has
// the same shape as `value`; backward passes accumulate into it.
template <typename T>
struct BasicParameter {
    std::string name;
    BasicTensor<T> value;
    BasicTensor<T> grad;
    bool trainable = true;
};

// Append-only collection of parameters with stable addresses.
template <typename T>
class BasicParameterStore {
public:
    using Param = BasicParameter<T>;

    Param& add(std::string name, BasicTensor<T> value, bool trainable = true);
    Param& get(const std::string& name);
    const Param& get(const std::string& name) const;
    Param* find(const std::string& name);
    const Param* find(const std::string& name) const;

    void zero_grad();
    std::size_t size() const { return params_.size(); }
    std::size_t total_floats() const;

    Param& operator[](std::size_t i) { return *params_[i]; }
    const Param& operator[](std::size_t i) const { return *params_[i]; }

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.cbegin(); }
    auto end() const { return params_.cend(); }

private:
    std::vector<std::unique_ptr<Param>> params_;
};

template <typename T>
class BasicTape;

// Handle to a value recorded on a tape. Cheap to copy; valid while the tape
// lives.
template <typename T>
class BasicVar {
public:
    BasicVar() = default;
    BasicVar(BasicTape<T>* tape, std::uint32_t id) : tape_(tape), id_(id) {}

    BasicTape<T>& tape() const { return *tape_; }
    std::uint32_t id() const { return id_; }
    const BasicTensor<T>& value() const { return tape_->value(id_); }
    const Shape& shape() const { return value().shape(); }
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }

private:
    BasicTape<T>* tape_ = nullptr;
    std::uint32_t id_ = 0;
};

// Dynamic reverse-mode tape, rebuilt for every forward pass. Ops append
// nodes in execution order, so node order is a topological order and
// backward() is a single reverse sweep visiting each op once.
//
// The tape also carries the instrumentation used by the resource benchmark:
// counted multiply-adds (matrix products and pooling sums) and the number of
// floats held by op outputs. Leaves (parameters, constants) are not counted
// as activations.
template <typename T>
class BasicTape {
public:
    using Tensor = BasicTensor<T>;
    using Var = BasicVar<T>;
    using BackwardFn = std::function<void(BasicTape&, std::uint32_t self)>;

    explicit BasicTape(bool record_backward = true) : record_backward_(record_backward) {}
    BasicTape(const BasicTape&) = delete;
    BasicTape& operator=(const BasicTape&) = delete;

    Var constant(Tensor value);
    // Leaf for a model parameter. On a gradient-recording tape, trainable
    // parameters receive gradients in Parameter::grad during backward().
    Var param(const BasicParameter<T>& p);

    const Tensor& value(std::uint32_t id) const { return *nodes_[id].value; }
    const Tensor& value(Var v) const { return value(v.id()); }

    // Gradient of the last backward() target with respect to `v`. Empty
    // tensor when no gradient reached it.
    const Tensor& grad(Var v) const;

    void backward(Var scalar);

    bool needs_grad(std::uint32_t id) const { return nodes_[id].needs_grad; }
    bool records_backward() const { return record_backward_; }

    // Gradient buffer for node `id`, allocated on first use. Parameter
    // leaves accumulate straight into Parameter::grad.
    Tensor& grad_buffer(std::uint32_t id);

    Var record(Tensor out, std::span<const Var> inputs, BackwardFn fn, const char* op_name);

    void count_multiply_adds(std::uint64_t n) { multiply_adds_ += n; }
    // Floats an op keeps alive besides its output (e.g. attention weights).
    void count_activation_floats(std::size_t n) { activation_floats_ += n; }
    std::uint64_t multiply_adds() const { return multiply_adds_; }
    std::size_t activation_floats() const { return activation_floats_; }
    std::size_t num_nodes() const { return nodes_.size(); }

private:
    struct Node {
        std::optional<Tensor> owned;
        const Tensor* value = nullptr;
        BasicParameter<T>* param = nullptr;
        Tensor grad;
        bool needs_grad = false;
        BackwardFn backward;
    };

    std::deque<Node> nodes_;
    bool record_backward_;
    std::uint64_t multiply_adds_ = 0;
    std::size_t activation_floats_ = 0;
    Tensor empty_;
};

using Parameter = BasicParameter<float>;
using ParameterStore = BasicParameterStore<float>;
using Var = BasicVar<float>;
using Tape = BasicTape<float>;

extern template class BasicParameterStore<float>;
extern template class BasicParameterStore<double>;
extern template class BasicTape<float>;
extern template class BasicTape<double>;

}  // namespace senc
