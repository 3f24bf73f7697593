#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "odflow/autodiff.hpp"
#include "odflow/errors.hpp"

namespace odflow::ad {

enum class OptimizerKind { adam, rmsprop };

inline std::string to_string(OptimizerKind k) {
    return k == OptimizerKind::adam ? "adam" : "rmsprop";
}

inline OptimizerKind optimizer_from_string(const std::string& s) {
    if (s == "adam") return OptimizerKind::adam;
    if (s == "rmsprop") return OptimizerKind::rmsprop;
    throw ConfigError("unknown optimizer '" + s + "'");
}

struct OptimizerState {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double decay = 0.9;  // rmsprop
    long step_count = 0;
    std::vector<std::vector<double>> m1;  // first moments (adam only)
    std::vector<std::vector<double>> m2;  // second moments

    void attach(const std::vector<Tensor*>& params) {
        m1.clear();
        m2.clear();
        for (const Tensor* p : params) {
            m1.emplace_back(p->size(), 0.0);
            m2.emplace_back(p->size(), 0.0);
        }
        step_count = 0;
    }
};

/// One update from the gradients currently accumulated on the parameters.
/// Gradients are zeroed afterwards.
inline void optimizer_step(OptimizerState& state, const std::vector<Tensor*>& params) {
    if (state.m2.size() != params.size())
        throw StateError("optimizer_step: state not attached to these parameters");
    state.step_count += 1;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = *params[pi];
        if (!p.requires_grad)
            throw StateError("optimizer_step: parameter without gradients");
        if (state.m2[pi].size() != p.size())
            throw ShapeError("optimizer_step: accumulator shape mismatch");
        auto& m1 = state.m1[pi];
        auto& m2 = state.m2[pi];
        if (state.kind == OptimizerKind::adam) {
            const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
            const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double g = p.grad[i];
                m1[i] = state.beta1 * m1[i] + (1.0 - state.beta1) * g;
                m2[i] = state.beta2 * m2[i] + (1.0 - state.beta2) * g * g;
                const double mhat = m1[i] / c1;
                const double vhat = m2[i] / c2;
                p.val[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.eps);
            }
        } else {
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double g = p.grad[i];
                m2[i] = state.decay * m2[i] + (1.0 - state.decay) * g * g;
                p.val[i] -= state.learning_rate * g / (std::sqrt(m2[i]) + state.eps);
            }
        }
        for (double v : p.val)
            if (!std::isfinite(v)) throw NumericError("optimizer_step: non-finite parameter");
        p.zero_grad();
    }
}

}  // namespace odflow::ad
