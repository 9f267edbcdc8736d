#pragma once

#include <span>
#include <vector>

#include "senc/tape.hpp"

namespace senc {

// Plain gradient descent: p -= lr * g.
class Sgd {
public:
    explicit Sgd(float lr) : lr_(lr) {}
    void step(ParameterStore& params);

private:
    float lr_;
};

struct AdamOptions {
    float lr = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

// Adam with bias-corrected moments. Moment buffers follow the store's
// parameter order, which is append-only.
class Adam {
public:
    explicit Adam(AdamOptions opts = {}) : opts_(opts) {}
    void step(ParameterStore& params);
    // Several stores updated as one parameter list (encoder + heads).
    void step(std::span<ParameterStore* const> stores);
    long steps() const { return t_; }

private:
    AdamOptions opts_;
    long t_ = 0;
    std::vector<std::vector<float>> m_, v_;
};

// Throws TrainingError naming the first trainable parameter whose gradient
// holds a NaN or infinity.
void check_gradients(const ParameterStore& params);

}  // namespace senc
