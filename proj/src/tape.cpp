#include "senc/tape.hpp"

#include <algorithm>

#include "senc/errors.hpp"

namespace senc {

template <typename T>
BasicParameter<T>& BasicParameterStore<T>::add(std::string name, BasicTensor<T> value, bool trainable) {
    if (find(name)) throw ConfigError("duplicate parameter name: " + name);
    auto p = std::make_unique<Param>();
    p->name = std::move(name);
    p->grad = BasicTensor<T>(value.shape());
    p->value = std::move(value);
    p->trainable = trainable;
    params_.push_back(std::move(p));
    return *params_.back();
}

template <typename T>
BasicParameter<T>* BasicParameterStore<T>::find(const std::string& name) {
    for (auto& p : params_)
        if (p->name == name) return p.get();
    return nullptr;
}

template <typename T>
const BasicParameter<T>* BasicParameterStore<T>::find(const std::string& name) const {
    for (const auto& p : params_)
        if (p->name == name) return p.get();
    return nullptr;
}

template <typename T>
BasicParameter<T>& BasicParameterStore<T>::get(const std::string& name) {
    if (auto* p = find(name)) return *p;
    throw ConfigError("unknown parameter: " + name);
}

template <typename T>
const BasicParameter<T>& BasicParameterStore<T>::get(const std::string& name) const {
    if (const auto* p = find(name)) return *p;
    throw ConfigError("unknown parameter: " + name);
}

template <typename T>
void BasicParameterStore<T>::zero_grad() {
    for (auto& p : params_) p->grad.fill(T(0));
}

template <typename T>
std::size_t BasicParameterStore<T>::total_floats() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p->value.size();
    return n;
}

template <typename T>
BasicVar<T> BasicTape<T>::constant(Tensor value) {
    Node& node = nodes_.emplace_back();
    node.owned = std::move(value);
    node.value = &*node.owned;
    return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
BasicVar<T> BasicTape<T>::param(const BasicParameter<T>& p) {
    Node& node = nodes_.emplace_back();
    node.value = &p.value;
    node.param = const_cast<BasicParameter<T>*>(&p);
    node.needs_grad = record_backward_ && p.trainable;
    return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
BasicVar<T> BasicTape<T>::record(Tensor out, std::span<const Var> inputs, BackwardFn fn, const char* op_name) {
    require_finite(out, op_name);
    bool needs = false;
    if (record_backward_) {
        for (const Var& in : inputs) {
            if (&in.tape() != this) throw InputError(std::string(op_name) + ": input from another tape");
            needs = needs || nodes_[in.id()].needs_grad;
        }
    }
    activation_floats_ += out.size();
    Node& node = nodes_.emplace_back();
    node.owned = std::move(out);
    node.value = &*node.owned;
    node.needs_grad = needs;
    if (needs) node.backward = std::move(fn);
    return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
BasicTensor<T>& BasicTape<T>::grad_buffer(std::uint32_t id) {
    Node& node = nodes_[id];
    if (node.param) {
        Tensor& g = node.param->grad;
        if (g.shape() != node.param->value.shape()) g = Tensor(node.param->value.shape());
        return g;
    }
    if (node.grad.shape() != node.value->shape()) node.grad = Tensor(node.value->shape());
    return node.grad;
}

template <typename T>
const BasicTensor<T>& BasicTape<T>::grad(Var v) const {
    const Node& node = nodes_[v.id()];
    if (node.param) return node.param->grad;
    return node.grad.empty() ? empty_ : node.grad;
}

template <typename T>
void BasicTape<T>::backward(Var scalar) {
    if (!record_backward_) throw InputError("backward() on a tape recorded without gradients");
    if (value(scalar).size() != 1) {
        throw DimensionError("backward() needs a scalar, got shape " +
                             shape_str(value(scalar).shape()));
    }
    if (!nodes_[scalar.id()].needs_grad) return;
    grad_buffer(scalar.id())[0] += T(1);
    for (std::uint32_t id = scalar.id() + 1; id-- > 0;) {
        Node& node = nodes_[id];
        if (node.backward && !node.grad.empty()) node.backward(*this, id);
    }
}

template class BasicParameterStore<float>;
template class BasicParameterStore<double>;
template class BasicTape<float>;
template class BasicTape<double>;

}  // namespace senc
