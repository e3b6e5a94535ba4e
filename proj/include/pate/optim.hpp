#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "pate/masks.hpp"
#include "pate/network.hpp"

namespace pate {

// ---------------------------------------------------------------------------
// Learning-rate schedules. Pure functions of (t, T) and their parameters;
// t counts batch iterations.
// ---------------------------------------------------------------------------

/// Step-linear parent schedule: eta1 for the first half of the budget, then
/// linear decay to eta2 at 90%, constant eta2 for the final 10%.
inline double parent_lr(double t, double total, double eta1 = 0.1, double eta2 = 0.001) {
    if (total <= 0) throw std::invalid_argument("parent_lr: total must be positive");
    const double frac = t / total;
    if (frac < 0.5) return eta1;
    if (frac >= 0.9) return eta2;
    return eta1 + (eta2 - eta1) * (frac - 0.5) / 0.4;
}

/// Two-phase one-cycle schedule: a cosine ramp from eta_min to eta_max over
/// the warmup window, then cosine decay from the peak down to eta_final.
/// Both phases equal eta_max at the junction.
inline double one_cycle_lr(double t, double total, double eta_min, double eta_max,
                           double eta_final = 1e-7, double warmup_frac = 0.10) {
    if (total <= 0) throw std::invalid_argument("one_cycle_lr: total must be positive");
    if (!(warmup_frac > 0.0 && warmup_frac < 1.0))
        throw std::invalid_argument("one_cycle_lr: warmup fraction must be in (0,1)");
    const double peak = warmup_frac * total;
    if (t < peak) {
        const double x = t / peak;  // 0 at start, 1 at the peak
        return eta_min + 0.5 * (eta_max - eta_min) * (1.0 + std::cos((1.0 - x) * 3.14159265358979323846));
    }
    const double t_cur = t - peak;
    const double t_max = total - peak;
    const double x = t_max > 0 ? t_cur / t_max : 1.0;
    return eta_final + 0.5 * (eta_max - eta_final) * (1.0 + std::cos(x * 3.14159265358979323846));
}

enum class ScheduleKind { constant, step_linear, one_cycle };

/// Declarative schedule bound to a training run; immutable and shareable.
struct Schedule {
    ScheduleKind kind = ScheduleKind::constant;
    double eta = 0.001;        // constant
    double lr_start = 0.1;     // step-linear
    double lr_end = 0.001;     // step-linear
    double eta_min = 0.001;    // one-cycle
    double eta_max = 0.1;      // one-cycle
    double eta_final = 1e-7;   // one-cycle
    double warmup_frac = 0.1;  // one-cycle

    static Schedule constant(double eta) {
        Schedule s;
        s.kind = ScheduleKind::constant;
        s.eta = eta;
        return s;
    }
    static Schedule step_linear(double lr_start = 0.1, double lr_end = 0.001) {
        Schedule s;
        s.kind = ScheduleKind::step_linear;
        s.lr_start = lr_start;
        s.lr_end = lr_end;
        return s;
    }
    static Schedule one_cycle(double eta_min = 0.001, double eta_max = 0.1,
                              double eta_final = 1e-7, double warmup_frac = 0.1) {
        Schedule s;
        s.kind = ScheduleKind::one_cycle;
        s.eta_min = eta_min;
        s.eta_max = eta_max;
        s.eta_final = eta_final;
        s.warmup_frac = warmup_frac;
        return s;
    }

    double at(double t, double total) const {
        switch (kind) {
            case ScheduleKind::constant: return eta;
            case ScheduleKind::step_linear: return parent_lr(t, total, lr_start, lr_end);
            case ScheduleKind::one_cycle:
                return one_cycle_lr(t, total, eta_min, eta_max, eta_final, warmup_frac);
        }
        return eta;
    }
};

// ---------------------------------------------------------------------------
// Optimizers. Both honor the mask contract: gradients at masked indices are
// zeroed before the update so masked parameters stay exactly 0.0. Weight
// decay applies to weight entries only, never biases.
// ---------------------------------------------------------------------------

template <typename T>
struct SgdConfig {
    T momentum = T(0.9);
    T weight_decay = T(0.0005);
    bool nesterov = true;
};

template <typename T>
struct SgdStateT {
    std::vector<T> velocity;
    explicit SgdStateT(std::size_t n) : velocity(n, T(0)) {}
};

using SgdState = SgdStateT<float>;

template <typename T>
struct AdamConfig {
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T epsilon = T(1e-8);
    T weight_decay = T(0);
};

template <typename T>
struct AdamStateT {
    std::vector<T> m, v;
    long step = 0;
    explicit AdamStateT(std::size_t n) : m(n, T(0)), v(n, T(0)) {}
};

using AdamState = AdamStateT<float>;

namespace detail {

template <typename T>
std::vector<T> effective_grads(const NetworkT<T>& net, const GradientsT<T>& grads, T weight_decay,
                               const PrunableSet* prunable, const PruneMask* mask) {
    if (grads.size() != net.params.size())
        throw std::invalid_argument("optimizer: gradient size does not mirror parameter store");
    std::vector<T> g = grads;
    if (weight_decay != T(0)) {
        for (const auto& e : net.entries) {
            if (e.role != ParamRole::weight) continue;
            for (std::size_t i = e.offset; i < e.offset + e.size; ++i)
                g[i] += weight_decay * net.params[i];
        }
    }
    if (mask != nullptr) {
        if (prunable == nullptr)
            throw std::invalid_argument("optimizer: mask supplied without its prunable set");
        zero_masked(g, *prunable, *mask);
    }
    return g;
}

}  // namespace detail

/// SGD with Nesterov momentum; weight decay folded into the gradient
/// (g <- g + wd*w) before the momentum update.
template <typename T>
void sgd_step(NetworkT<T>& net, const GradientsT<T>& grads, SgdStateT<T>& state,
              const SgdConfig<T>& cfg, T lr, const PrunableSet* prunable = nullptr,
              const PruneMask* mask = nullptr) {
    if (state.velocity.size() != net.params.size())
        throw std::invalid_argument("sgd_step: state does not mirror parameter store");
    if (!(lr > T(0))) throw std::invalid_argument("sgd_step: lr must be positive");
    const std::vector<T> g = detail::effective_grads(net, grads, cfg.weight_decay, prunable, mask);
    const T mu = cfg.momentum;
    for (std::size_t i = 0; i < net.params.size(); ++i) {
        T v = mu * state.velocity[i] + g[i];
        state.velocity[i] = v;
        const T update = cfg.nesterov ? g[i] + mu * v : v;
        net.params[i] -= lr * update;
    }
}

/// Bias-corrected ADAM.
template <typename T>
void adam_step(NetworkT<T>& net, const GradientsT<T>& grads, AdamStateT<T>& state,
               const AdamConfig<T>& cfg, T lr, const PrunableSet* prunable = nullptr,
               const PruneMask* mask = nullptr) {
    if (state.m.size() != net.params.size())
        throw std::invalid_argument("adam_step: state does not mirror parameter store");
    if (!(lr > T(0))) throw std::invalid_argument("adam_step: lr must be positive");
    const std::vector<T> g = detail::effective_grads(net, grads, cfg.weight_decay, prunable, mask);
    state.step += 1;
    const T bc1 = T(1) - std::pow(cfg.beta1, static_cast<T>(state.step));
    const T bc2 = T(1) - std::pow(cfg.beta2, static_cast<T>(state.step));
    for (std::size_t i = 0; i < net.params.size(); ++i) {
        state.m[i] = cfg.beta1 * state.m[i] + (T(1) - cfg.beta1) * g[i];
        state.v[i] = cfg.beta2 * state.v[i] + (T(1) - cfg.beta2) * g[i] * g[i];
        const T mhat = state.m[i] / bc1;
        const T vhat = state.v[i] / bc2;
        net.params[i] -= lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
}

}  // namespace pate
