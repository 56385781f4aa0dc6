#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "coopdqn/error.hpp"
#include "coopdqn/topology.hpp"

namespace coopdqn {

enum class Action : std::uint8_t { Cooperate = 0, Defect = 1 };

constexpr int encode(Action a) noexcept { return static_cast<int>(a); }

inline Action decode_action(int v) {
    if (v == 0) return Action::Cooperate;
    if (v == 1) return Action::Defect;
    throw ConfigError("action encoding must be 0 or 1");
}

/// Dilemma strengths: S = -d_r, T = 1 + d_g, with R = 1 and P = 0.
class PayoffParams {
public:
    PayoffParams(double d_r, double d_g) : d_r_(d_r), d_g_(d_g) {
        if (!(d_r >= 0.0 && d_r <= 1.0)) throw ConfigError("d_r must lie in [0,1]");
        if (!(d_g >= 0.0 && d_g <= 1.0)) throw ConfigError("d_g must lie in [0,1]");
    }
    static PayoffParams diagonal(double d) { return {d, d}; }

    double d_r() const noexcept { return d_r_; }
    double d_g() const noexcept { return d_g_; }

private:
    double d_r_;
    double d_g_;
};

constexpr double kReward = 1.0;
constexpr double kPunishment = 0.0;

inline double payoff(Action self, Action other, const PayoffParams& p) noexcept {
    if (self == Action::Cooperate) return other == Action::Cooperate ? kReward : -p.d_r();
    return other == Action::Cooperate ? 1.0 + p.d_g() : kPunishment;
}

/// Mean payoff of each agent over its four neighbors.
inline std::vector<double> step_rewards(std::span<const Action> actions, const Topology& topo,
                                        const PayoffParams& p) {
    if (actions.size() != topo.n_agents())
        throw ConfigError("step_rewards: action profile size does not match topology");
    std::vector<double> r(actions.size());
    for (std::size_t i = 0; i < actions.size(); ++i) {
        double sum = 0.0;
        for (auto j : topo.neighbors(i)) sum += payoff(actions[i], actions[j], p);
        r[i] = sum / static_cast<double>(kDegree);
    }
    return r;
}

inline double cooperation_rate(std::span<const Action> actions) {
    if (actions.empty()) throw ConfigError("cooperation_rate: empty action profile");
    const auto n = std::count(actions.begin(), actions.end(), Action::Cooperate);
    return static_cast<double>(n) / static_cast<double>(actions.size());
}

enum class AugMode { None, Tau, Progress, Joint };

inline std::string to_string(AugMode m) {
    switch (m) {
        case AugMode::None: return "none";
        case AugMode::Tau: return "tau";
        case AugMode::Progress: return "progress";
        case AugMode::Joint: return "joint";
    }
    return "?";
}

inline AugMode aug_mode_from_string(const std::string& s) {
    if (s == "none") return AugMode::None;
    if (s == "tau") return AugMode::Tau;
    if (s == "progress") return AugMode::Progress;
    if (s == "joint") return AugMode::Joint;
    throw ConfigError("unknown augmentation mode '" + s + "'");
}

constexpr std::size_t kBaseStateDim = kDegree + 1;
constexpr std::size_t kMaxStateDim = kBaseStateDim + 2;

constexpr std::size_t aug_width(AugMode m) noexcept {
    switch (m) {
        case AugMode::None: return 0;
        case AugMode::Tau:
        case AugMode::Progress: return 1;
        case AugMode::Joint: return 2;
    }
    return 0;
}

constexpr std::size_t state_dim(AugMode m) noexcept { return kBaseStateDim + aug_width(m); }

/// Augmentation scalars in [0,1]: the temperature ratio and the training progress.
struct AugValues {
    double tau_signal = 0.0;
    double progress = 0.0;
};

inline AugValues training_aug_values(double tau, double tau_init, std::int64_t t, std::int64_t t_anneal) {
    return {std::clamp(tau / tau_init, 0.0, 1.0),
            std::min(static_cast<double>(t) / static_cast<double>(t_anneal), 1.0)};
}

inline AugValues eval_aug_values(double tau_eval, double tau_init) {
    return {std::clamp(tau_eval / tau_init, 0.0, 1.0), 1.0};
}

/// Observation of one agent: previous actions of neighbors j1..j4, its own
/// previous action, then 0-2 augmentation scalars.
struct AgentState {
    std::array<double, kMaxStateDim> values{};
    std::uint8_t dim = 0;

    std::span<const double> view() const noexcept { return {values.data(), dim}; }
    std::span<const double> base() const noexcept { return {values.data(), kBaseStateDim}; }
    friend bool operator==(const AgentState&, const AgentState&) = default;
};

inline AgentState build_state(std::size_t agent, std::span<const Action> prev_actions, const Topology& topo,
                              AugMode mode, AugValues aug = {}) {
    if (agent >= topo.n_agents()) throw ConfigError("build_state: unknown agent " + std::to_string(agent));
    if (prev_actions.size() != topo.n_agents()) throw ConfigError("build_state: action profile size mismatch");
    AgentState s;
    const auto& nb = topo.neighbors(agent);
    for (std::size_t k = 0; k < kDegree; ++k) s.values[k] = encode(prev_actions[nb[k]]);
    s.values[kDegree] = encode(prev_actions[agent]);
    std::size_t d = kBaseStateDim;
    switch (mode) {
        case AugMode::None: break;
        case AugMode::Tau: s.values[d++] = aug.tau_signal; break;
        case AugMode::Progress: s.values[d++] = aug.progress; break;
        case AugMode::Joint:
            s.values[d++] = aug.tau_signal;
            s.values[d++] = aug.progress;
            break;
    }
    s.dim = static_cast<std::uint8_t>(d);
    return s;
}

} // namespace coopdqn
