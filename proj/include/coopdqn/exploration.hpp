#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "coopdqn/error.hpp"
#include "coopdqn/game.hpp"
#include "coopdqn/rng.hpp"
#include "coopdqn/tinynet.hpp"

namespace coopdqn {

/// Linear temperature annealing from tau_init at t=1 to tau_final at t=t_anneal.
struct AnnealSchedule {
    double tau_init = 1.0;
    double tau_final = 0.1;
    std::int64_t t_anneal = 95000;

    void validate() const {
        detail::require(tau_final > 0.0, "tau_final must be positive");
        detail::require(tau_init >= tau_final, "tau_init must be >= tau_final");
        detail::require(t_anneal >= 1, "t_anneal must be >= 1");
    }
};

inline double temperature(const AnnealSchedule& s, std::int64_t t) {
    detail::require(t >= 1, "temperature: t must be >= 1");
    if (s.t_anneal == 1) return t == 1 ? s.tau_init : s.tau_final;
    if (t >= s.t_anneal) return s.tau_final;
    const double frac = static_cast<double>(t - 1) / static_cast<double>(s.t_anneal - 1);
    return s.tau_init + (s.tau_final - s.tau_init) * frac;
}

/// Mean temperature over the first floor(t_anneal/2) steps.
inline double exploration_strength(const AnnealSchedule& s) {
    detail::require(s.t_anneal >= 2, "exploration_strength: t_anneal must be >= 2");
    const std::int64_t k = s.t_anneal / 2;
    double sum = 0.0;
    for (std::int64_t t = 1; t <= k; ++t) sum += temperature(s, t);
    return sum / static_cast<double>(k);
}

struct SoftmaxDraw {
    Action action;
    QPair probs;
};

/// Boltzmann probabilities with the max logit subtracted first.
inline QPair softmax_probs(const QPair& q, double tau) {
    if (!std::isfinite(q[0]) || !std::isfinite(q[1])) throw NumericFault("softmax_policy: non-finite Q-value");
    detail::require(tau > 0.0, "softmax temperature must be positive");
    const double m = q[0] > q[1] ? q[0] : q[1];
    const double e0 = std::exp((q[0] - m) / tau);
    const double e1 = std::exp((q[1] - m) / tau);
    const double z = e0 + e1;
    return {e0 / z, e1 / z};
}

inline SoftmaxDraw softmax_policy(const QPair& q, double tau, Rng& rng) {
    const QPair probs = softmax_probs(q, tau);
    const Action a = rng.uniform01() < probs[0] ? Action::Cooperate : Action::Defect;
    return {a, probs};
}

/// Argmax with ties going to Cooperate.
inline Action greedy_action(const QPair& q) noexcept { return q[1] > q[0] ? Action::Defect : Action::Cooperate; }

enum class EvalMode { Softmax, Greedy };

struct EvalPolicy {
    EvalMode mode = EvalMode::Softmax;
    double tau_eval = 0.10;

    void validate() const {
        if (mode == EvalMode::Softmax) detail::require(tau_eval > 0.0, "tau_eval must be positive");
    }
};

inline std::string to_string(EvalMode m) { return m == EvalMode::Softmax ? "softmax" : "greedy"; }

inline EvalMode eval_mode_from_string(const std::string& s) {
    if (s == "softmax") return EvalMode::Softmax;
    if (s == "greedy") return EvalMode::Greedy;
    throw ConfigError("unknown eval mode '" + s + "'");
}

} // namespace coopdqn
