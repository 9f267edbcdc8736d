#include "senc/optim.hpp"

#include <cmath>

#include "senc/errors.hpp"

namespace senc {

void check_gradients(const ParameterStore& params) {
    for (const auto& p : params) {
        if (!p->trainable) continue;
        if (!p->grad.all_finite()) throw TrainingError("non-finite gradient in parameter " + p->name);
    }
}

void Sgd::step(ParameterStore& params) {
    check_gradients(params);
    for (auto& p : params) {
        if (!p->trainable) continue;
        for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] -= lr_ * p->grad[i];
    }
}

void Adam::step(ParameterStore& params) {
    ParameterStore* one[] = {&params};
    step(one);
}

void Adam::step(std::span<ParameterStore* const> stores) {
    for (auto* s : stores) check_gradients(*s);
    ++t_;
    const double bc1 = 1.0 - std::pow(static_cast<double>(opts_.beta1), static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(static_cast<double>(opts_.beta2), static_cast<double>(t_));
    const float step_size = static_cast<float>(opts_.lr / bc1);
    const float inv_bc2 = static_cast<float>(1.0 / bc2);
    std::size_t slot = 0;
    for (auto* store : stores) {
        for (std::size_t k = 0; k < store->size(); ++k, ++slot) {
            Parameter& p = (*store)[k];
            if (slot >= m_.size()) {
                m_.resize(slot + 1);
                v_.resize(slot + 1);
            }
            if (!p.trainable) continue;
            auto& m = m_[slot];
            auto& v = v_[slot];
            if (m.size() != p.value.size()) {
                m.assign(p.value.size(), 0.0f);
                v.assign(p.value.size(), 0.0f);
            }
            for (std::size_t i = 0; i < p.value.size(); ++i) {
                const float g = p.grad[i];
                m[i] = opts_.beta1 * m[i] + (1.0f - opts_.beta1) * g;
                v[i] = opts_.beta2 * v[i] + (1.0f - opts_.beta2) * g * g;
                p.value[i] -= step_size * m[i] / (std::sqrt(v[i] * inv_bc2) + opts_.eps);
            }
        }
    }
}

}  // namespace senc
