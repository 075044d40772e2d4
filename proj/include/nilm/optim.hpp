#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "nilm/error.hpp"
#include "nilm/tensor.hpp"

namespace nilm {

enum class OptimizerAlgo { adam, adamax };

inline std::string optimizer_name(OptimizerAlgo a) {
    return a == OptimizerAlgo::adam ? "adam" : "adamax";
}

inline OptimizerAlgo optimizer_from_name(const std::string& name) {
    if (name == "adam") return OptimizerAlgo::adam;
    if (name == "adamax") return OptimizerAlgo::adamax;
    throw ValidationError("unknown optimizer: " + name);
}

struct OptimizerConfig {
    OptimizerAlgo algo = OptimizerAlgo::adam;
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const {
        if (learning_rate <= 0) throw ValidationError("learning rate must be positive");
        if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
            throw ValidationError("betas must lie in [0, 1)");
        if (epsilon <= 0) throw ValidationError("epsilon must be positive");
    }
};

/// First/second moment estimates plus the step counter. For Adamax the second
/// slot holds the exponentially weighted infinity norm instead of v.
template <typename T>
class Optimizer {
public:
    explicit Optimizer(const std::vector<Tensor<T>>& params, OptimizerConfig cfg) : cfg_(cfg) {
        cfg_.validate();
        m_.reserve(params.size());
        v_.reserve(params.size());
        for (const auto& p : params) {
            m_.emplace_back(p.shape);
            v_.emplace_back(p.shape);
        }
    }

    std::int64_t step_count() const { return t_; }
    const OptimizerConfig& config() const { return cfg_; }

    void step(std::vector<Tensor<T>>& params, const std::vector<Tensor<T>>& grads) {
        if (grads.size() != params.size()) throw Error("optimizer: gradient/parameter count mismatch");
        for (const auto& g : grads)
            if (!g.finite()) throw Error("optimizer: non-finite gradient");
        ++t_;
        const double b1 = cfg_.beta1, b2 = cfg_.beta2;
        const double bias1 = 1.0 - std::pow(b1, static_cast<double>(t_));
        if (cfg_.algo == OptimizerAlgo::adam) {
            const double bias2 = 1.0 - std::pow(b2, static_cast<double>(t_));
            for (std::size_t p = 0; p < params.size(); ++p) {
                T* w = params[p].data.data();
                T* m = m_[p].data.data();
                T* v = v_[p].data.data();
                const T* g = grads[p].data.data();
                for (std::size_t i = 0; i < params[p].numel(); ++i) {
                    double gi = static_cast<double>(g[i]);
                    double mi = b1 * static_cast<double>(m[i]) + (1.0 - b1) * gi;
                    double vi = b2 * static_cast<double>(v[i]) + (1.0 - b2) * gi * gi;
                    m[i] = static_cast<T>(mi);
                    v[i] = static_cast<T>(vi);
                    double update = cfg_.learning_rate * (mi / bias1) / (std::sqrt(vi / bias2) + cfg_.epsilon);
                    w[i] = static_cast<T>(static_cast<double>(w[i]) - update);
                }
            }
        } else {
            // Adamax stores the bias-corrected first moment directly:
            // m_hat_t = a_t m_hat_{t-1} + c_t g with a_t = b1 (1-b1^{t-1})/(1-b1^t)
            // and c_t = (1-b1)/(1-b1^t). At t=1 the coefficients are exactly 0
            // and 1, which makes the first step exactly -lr sign(g).
            const double bias_prev = 1.0 - std::pow(b1, static_cast<double>(t_ - 1));
            const double a = b1 * bias_prev / bias1;
            const double c = (1.0 - b1) / bias1;
            for (std::size_t p = 0; p < params.size(); ++p) {
                T* w = params[p].data.data();
                T* m = m_[p].data.data();
                T* u = v_[p].data.data();
                const T* g = grads[p].data.data();
                for (std::size_t i = 0; i < params[p].numel(); ++i) {
                    double gi = static_cast<double>(g[i]);
                    double m_hat = a * static_cast<double>(m[i]) + c * gi;
                    double ui = std::max(b2 * static_cast<double>(u[i]), std::abs(gi));
                    m[i] = static_cast<T>(m_hat);
                    u[i] = static_cast<T>(ui);
                    if (ui == 0.0) continue;  // zero gradient history: no update
                    w[i] = static_cast<T>(static_cast<double>(w[i]) - cfg_.learning_rate * (m_hat / ui));
                }
            }
        }
    }

    const std::vector<Tensor<T>>& first_moments() const { return m_; }
    const std::vector<Tensor<T>>& second_moments() const { return v_; }

private:
    OptimizerConfig cfg_;
    std::vector<Tensor<T>> m_, v_;
    std::int64_t t_ = 0;
};

}  // namespace nilm
