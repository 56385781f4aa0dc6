#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "coopdqn/analysis.hpp"
#include "coopdqn/error.hpp"
#include "coopdqn/exploration.hpp"
#include "coopdqn/game.hpp"
#include "coopdqn/qlearner.hpp"
#include "coopdqn/rng.hpp"
#include "coopdqn/tinynet.hpp"
#include "coopdqn/topology.hpp"

namespace coopdqn {

struct TopologySpec {
    TopologyKind kind = TopologyKind::Grid;
    std::size_t L = 30;
    /// Agent count for non-grid kinds; 0 means L*L.
    std::size_t n = 0;
    double p_rewire = 0.1;
    std::size_t n_modules = 9;
    std::size_t n_cross = 20;

    std::size_t n_agents() const noexcept { return kind == TopologyKind::Grid || n == 0 ? L * L : n; }
};

inline Topology build_topology(const TopologySpec& spec, std::uint64_t seed) {
    switch (spec.kind) {
        case TopologyKind::Grid: return make_grid(spec.L);
        case TopologyKind::RandomRegular: return make_random_regular(spec.n_agents(), seed);
        case TopologyKind::SmallWorld: return make_small_world(spec.n_agents(), spec.p_rewire, seed);
        case TopologyKind::Modular: return make_modular(spec.n_agents(), spec.n_modules, spec.n_cross, seed);
    }
    throw ConfigError("unknown topology kind");
}

enum class Architecture { Shared, Grouped };

inline std::string to_string(Architecture a) { return a == Architecture::Shared ? "shared" : "grouped"; }

inline Architecture architecture_from_string(const std::string& s) {
    if (s == "shared") return Architecture::Shared;
    if (s == "grouped") return Architecture::Grouped;
    throw ConfigError("unknown architecture '" + s + "'");
}

struct RunConfig {
    TopologySpec topology;
    double d_r = 0.25;
    double d_g = 0.25;
    AnnealSchedule schedule{1.0, 0.10, 95000};
    EvalPolicy eval;
    std::int64_t t_train = 95000;
    std::int64_t t_eval = 5000;
    TDConfig td;
    LossConfig loss;
    OptimizerConfig optimizer;
    std::size_t hidden_dim = 96;
    Architecture architecture = Architecture::Shared;
    std::size_t n_groups = 10;
    /// Grouped mode only: all groups draw from one population-wide buffer.
    bool shared_replay = false;
    std::size_t updates_per_step = 1;
    AugMode augmentation = AugMode::None;
    std::size_t activation_samples = 2000;
    double initial_coop_prob = 0.5;
    std::uint64_t seed = 0;

    std::size_t group_count() const noexcept { return architecture == Architecture::Shared ? 1 : n_groups; }

    void validate() const {
        (void)PayoffParams{d_r, d_g};
        schedule.validate();
        eval.validate();
        td.validate();
        detail::require(loss.delta > 0.0, "loss delta must be positive");
        detail::require(t_train >= 0, "t_train must be >= 0");
        detail::require(t_eval >= 1, "t_eval must be >= 1");
        detail::require(hidden_dim >= 1, "hidden_dim must be >= 1");
        detail::require(optimizer.lr > 0.0, "learning rate must be positive");
        detail::require(optimizer.weight_decay >= 0.0, "weight_decay must be >= 0");
        detail::require(initial_coop_prob >= 0.0 && initial_coop_prob <= 1.0, "initial_coop_prob must lie in [0,1]");
        detail::require(group_count() >= 1, "n_groups must be >= 1");
        detail::require(group_count() <= topology.n_agents(), "n_groups exceeds the number of agents");
        if (topology.kind == TopologyKind::Grid) detail::require(topology.L >= 3, "grid side L must be >= 3");
    }
};

struct ActivationSample {
    PointSet hidden;
    std::vector<Action> actions;
    std::vector<std::int64_t> steps;
    std::vector<QPair> q_values;
};

struct RunResult {
    std::vector<double> coop_trace;
    std::vector<double> tau_trace;
    double exploration_strength = 0.0;
    double coop_mean = 0.0;
    double q_mean = 0.0;
    double q_gap = 0.0;
    /// NaN when the activation sample has fewer than two distinct points.
    double silhouette = std::numeric_limits<double>::quiet_NaN();
    ActivationSample activations;
    std::vector<std::uint64_t> final_hashes;
    std::vector<QNetworkParams> final_params;
    std::uint64_t train_updates = 0;
    double wall_time = 0.0;
};

/// Each agent cooperates independently with probability p_coop.
inline std::vector<Action> initial_actions(std::size_t n_agents, std::uint64_t seed, double p_coop = 0.5) {
    Rng rng(seed);
    std::vector<Action> a(n_agents);
    for (auto& x : a) x = rng.uniform01() < p_coop ? Action::Cooperate : Action::Defect;
    return a;
}

/// Synchronous update: every agent's new action is chosen from a state built
/// from `prev` only. `choose(agent, state)` returns the action.
template <typename Chooser>
std::vector<Action> select_actions(std::span<const Action> prev, const Topology& topo, AugMode mode, AugValues aug,
                                   Chooser&& choose) {
    std::vector<Action> next(prev.size());
    for (std::size_t i = 0; i < prev.size(); ++i) next[i] = choose(i, build_state(i, prev, topo, mode, aug));
    return next;
}

/// Read-only view passed to an observer after every step.
struct StepView {
    std::int64_t t;
    bool training;
    std::span<const Action> actions;
    std::span<const PolicyGroup> groups;
};

using StepObserver = std::function<void(const StepView&)>;

/// Runs one seeded configuration: t_train learning steps with annealed softmax
/// exploration, then t_eval frozen steps under the evaluation policy.
/// Per step: observe, select, reward, store, learn, sync target, anneal.
inline RunResult run(const RunConfig& cfg, const StepObserver& observer = {}) {
    cfg.validate();
    const auto started = std::chrono::steady_clock::now();
    const Topology topo = build_topology(cfg.topology, stream_seed(cfg.seed, Stream::Topology));
    const PayoffParams payoff_params(cfg.d_r, cfg.d_g);
    const std::size_t n = topo.n_agents();
    const std::size_t in_dim = state_dim(cfg.augmentation);

    const auto memberships = assign_groups(n, cfg.group_count(), stream_seed(cfg.seed, Stream::Groups));
    std::vector<std::uint32_t> group_of(n);
    std::vector<PolicyGroup> groups;
    groups.reserve(memberships.size());
    std::shared_ptr<ReplayBuffer> common;
    if (cfg.shared_replay) common = std::make_shared<ReplayBuffer>(cfg.td.buffer_capacity);
    for (std::size_t g = 0; g < memberships.size(); ++g) {
        for (auto i : memberships[g]) group_of[i] = static_cast<std::uint32_t>(g);
        auto buf = common ? common : std::make_shared<ReplayBuffer>(cfg.td.buffer_capacity);
        groups.emplace_back(g, memberships[g], init_params(in_dim, cfg.hidden_dim, stream_seed(cfg.seed, Stream::Init, g)),
                            cfg.optimizer, std::move(buf), stream_seed(cfg.seed, Stream::Replay, g));
    }

    const std::int64_t total = cfg.t_train + cfg.t_eval;
    RunResult res;
    res.coop_trace.reserve(static_cast<std::size_t>(total));
    res.tau_trace.reserve(static_cast<std::size_t>(total));
    res.exploration_strength =
        cfg.schedule.t_anneal >= 2 ? exploration_strength(cfg.schedule) : cfg.schedule.tau_init;

    // (eval step offset, agent) pairs for the representation sample, sorted by step
    std::vector<std::pair<std::int64_t, std::uint32_t>> picks(cfg.activation_samples);
    {
        Rng rng(stream_seed(cfg.seed, Stream::ActivationSample));
        for (auto& p : picks) {
            p.first = static_cast<std::int64_t>(rng.index(static_cast<std::uint64_t>(cfg.t_eval)));
            p.second = static_cast<std::uint32_t>(rng.index(n));
        }
        std::stable_sort(picks.begin(), picks.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
    }
    std::size_t next_pick = 0;

    Rng action_rng(stream_seed(cfg.seed, Stream::Actions));
    std::vector<Action> prev = initial_actions(n, stream_seed(cfg.seed, Stream::InitialActions), cfg.initial_coop_prob);
    std::vector<Action> actions(n);
    std::vector<AgentState> states(n), next_states(n);
    std::vector<QEvaluator> evals;
    evals.reserve(groups.size());
    for (const auto& g : groups) evals.emplace_back(g.online);
    std::vector<TrainScratch> scratch(groups.size());

    for (std::int64_t t = 1; t <= total; ++t) {
        const bool training = t <= cfg.t_train;
        const double tau = training ? temperature(cfg.schedule, t) : cfg.eval.tau_eval;
        const AugValues aug = training ? training_aug_values(tau, cfg.schedule.tau_init, t, cfg.schedule.t_anneal)
                                       : eval_aug_values(cfg.eval.tau_eval, cfg.schedule.tau_init);
        for (std::size_t i = 0; i < n; ++i) states[i] = build_state(i, prev, topo, cfg.augmentation, aug);

        const bool greedy = !training && cfg.eval.mode == EvalMode::Greedy;
        const std::int64_t eval_offset = t - cfg.t_train - 1;
        for (std::size_t i = 0; i < n; ++i) {
            auto& ev = evals[group_of[i]];
            const QPair q = ev(states[i]);
            actions[i] = greedy ? greedy_action(q) : softmax_policy(q, tau, action_rng).action;
        }
        while (!training && next_pick < picks.size() && picks[next_pick].first == eval_offset) {
            const auto i = picks[next_pick].second;
            auto& ev = evals[group_of[i]];
            const QPair q = ev(states[i]);
            res.activations.hidden.push(ev.hidden());
            res.activations.actions.push_back(actions[i]);
            res.activations.steps.push_back(t);
            res.activations.q_values.push_back(q);
            ++next_pick;
        }

        const std::vector<double> rewards = step_rewards(actions, topo, payoff_params);
        res.coop_trace.push_back(cooperation_rate(actions));
        res.tau_trace.push_back(tau);

        if (training) {
            const double tau_next = temperature(cfg.schedule, t + 1);
            const AugValues aug_next =
                training_aug_values(tau_next, cfg.schedule.tau_init, t + 1, cfg.schedule.t_anneal);
            for (std::size_t i = 0; i < n; ++i) {
                next_states[i] = build_state(i, actions, topo, cfg.augmentation, aug_next);
                groups[group_of[i]].buffer->push(
                    {static_cast<std::uint32_t>(i), t, states[i], actions[i], rewards[i], next_states[i]});
            }
            for (std::size_t g = 0; g < groups.size(); ++g)
                for (std::size_t u = 0; u < cfg.updates_per_step; ++u)
                    if (train_step(groups[g], cfg.td, cfg.loss, scratch[g])) ++res.train_updates;
            for (auto& g : groups) maybe_sync_target(g, t, cfg.td.target_sync_interval);
        }
        if (observer) observer({t, training, actions, groups});
        std::swap(prev, actions);
    }

    res.coop_mean = mean_cooperation(res.coop_trace, static_cast<std::size_t>(cfg.t_eval));
    if (!res.activations.q_values.empty()) {
        const QStats qs = q_stats(res.activations.q_values);
        res.q_mean = qs.q_mean;
        res.q_gap = qs.q_gap;
        if (res.activations.hidden.size() >= 2 && detail::has_two_distinct(res.activations.hidden)) {
            const auto cl = kmeans2(res.activations.hidden, stream_seed(cfg.seed, Stream::Clustering));
            if (std::count(cl.assignments.begin(), cl.assignments.end(), 0) > 0 &&
                std::count(cl.assignments.begin(), cl.assignments.end(), 1) > 0)
                res.silhouette = silhouette(res.activations.hidden, cl.assignments);
        }
    } else {
        res.q_mean = res.q_gap = std::numeric_limits<double>::quiet_NaN();
    }
    for (auto& g : groups) {
        res.final_hashes.push_back(params_hash(g.online));
        res.final_params.push_back(g.online);
    }
    res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return res;
}

} // namespace coopdqn
