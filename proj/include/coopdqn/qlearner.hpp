#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "coopdqn/error.hpp"
#include "coopdqn/exploration.hpp"
#include "coopdqn/replay.hpp"
#include "coopdqn/rng.hpp"
#include "coopdqn/tinynet.hpp"

namespace coopdqn {

struct TDConfig {
    double gamma = 0.99;
    std::size_t n_step = 5;
    std::size_t batch_size = 256;
    std::int64_t target_sync_interval = 2000;
    std::size_t buffer_capacity = 90000;
    /// Learning starts once the buffer holds this many transitions (at least 1).
    std::size_t warmup = 256;
    double grad_clip = 0.5;

    void validate() const {
        detail::require(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0,1]");
        detail::require(n_step >= 1, "n_step must be >= 1");
        detail::require(batch_size >= 1, "batch_size must be >= 1");
        detail::require(target_sync_interval >= 1, "target_sync_interval must be >= 1");
        detail::require(buffer_capacity >= 1, "buffer_capacity must be >= 1");
        detail::require(grad_clip > 0.0, "grad_clip must be positive");
    }
};

/// Bootstrap value Q_target(s, argmax_a Q_online(s, a)); ties select Cooperate.
template <typename OnlineQ, typename TargetQ>
double double_dqn_bootstrap(const AgentState& s, OnlineQ&& online, TargetQ&& target) {
    const Action a_star = greedy_action(online(s));
    return target(s)[static_cast<std::size_t>(encode(a_star))];
}

/// y = r + gamma * Q_target(s', argmax_a Q_online(s', a)). The task never terminates.
template <typename OnlineQ, typename TargetQ>
double double_dqn_target_1step(const Transition& tr, OnlineQ&& online, TargetQ&& target, double gamma) {
    return tr.r + gamma * double_dqn_bootstrap(tr.s_next, online, target);
}

/// n-step Double-DQN target from the transition at `start`, or nullopt when the
/// agent does not have n live transitions at consecutive time steps from there.
///
/// Accumulation order is fixed: ret += discount * r_k; discount *= gamma, for
/// k = 0..n-1, then ret += discount * bootstrap.
template <typename OnlineQ, typename TargetQ>
std::optional<double> nstep_target(const ReplayBuffer& buf, ReplayBuffer::Seq start, std::size_t n,
                                   OnlineQ&& online, TargetQ&& target, double gamma) {
    if (n == 0) throw ConfigError("nstep_target: n must be >= 1");
    ReplayBuffer::Seq cur = start;
    const Transition* tr = &buf.at(cur);
    double ret = 0.0;
    double discount = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) {
            const auto nxt = buf.next_of(cur);
            if (!nxt) return std::nullopt;
            const Transition& cand = buf.at(*nxt);
            if (cand.t != tr->t + 1) return std::nullopt;
            cur = *nxt;
            tr = &cand;
        }
        ret += discount * tr->r;
        discount *= gamma;
    }
    return ret + discount * double_dqn_bootstrap(tr->s_next, online, target);
}

/// One shared network with its target copy, optimizer, replay source and sampling stream.
struct PolicyGroup {
    std::size_t id = 0;
    std::vector<std::uint32_t> members;
    QNetworkParams online;
    QNetworkParams target;
    OptimizerState optimizer;
    std::shared_ptr<ReplayBuffer> buffer;
    Rng replay_rng;

    PolicyGroup(std::size_t id_, std::vector<std::uint32_t> members_, QNetworkParams init,
                const OptimizerConfig& opt, std::shared_ptr<ReplayBuffer> buf, std::uint64_t replay_seed)
        : id(id_), members(std::move(members_)), online(std::move(init)), target(copy_params(online)),
          optimizer(opt, online.size()), buffer(std::move(buf)), replay_rng(replay_seed) {}
};

struct TrainScratch {
    std::vector<ReplayBuffer::Seq> seqs;
    std::vector<Sample> samples;
    QNetworkParams grads;
};

/// One mini-batch update of the group's online network. Returns the batch loss,
/// or nullopt when the buffer is still below the warm-up size.
inline std::optional<double> train_step(PolicyGroup& g, const TDConfig& cfg, const LossConfig& loss,
                                        TrainScratch& scratch) {
    const ReplayBuffer& buf = *g.buffer;
    if (buf.empty() || buf.size() < std::max<std::size_t>(cfg.warmup, 1)) return std::nullopt;
    buf.sample_batch_into(cfg.batch_size, g.replay_rng, scratch.seqs);
    QEvaluator online(g.online);
    QEvaluator target(g.target);
    scratch.samples.clear();
    for (auto seq : scratch.seqs) {
        const Transition& tr = buf.at(seq);
        std::optional<double> y;
        if (cfg.n_step > 1) y = nstep_target(buf, seq, cfg.n_step, online, target, cfg.gamma);
        if (!y) y = double_dqn_target_1step(tr, online, target, cfg.gamma);
        scratch.samples.push_back({tr.s.view(), tr.a, *y});
    }
    const double l = loss_and_grad_into(g.online, scratch.samples, loss, scratch.grads);
    if (!std::isfinite(l)) throw NumericFault("train_step: non-finite loss");
    clip_global_norm_inplace(scratch.grads, cfg.grad_clip);
    optimizer_step(g.online, g.optimizer, scratch.grads);
    return l;
}

inline std::optional<double> train_step(PolicyGroup& g, const TDConfig& cfg, const LossConfig& loss) {
    TrainScratch scratch;
    return train_step(g, cfg, loss, scratch);
}

/// Copies online into target when t is a multiple of the interval.
inline bool maybe_sync_target(PolicyGroup& g, std::int64_t t, std::int64_t interval = 2000) {
    detail::require(t >= 1, "maybe_sync_target: t must be >= 1");
    detail::require(interval >= 1, "maybe_sync_target: interval must be >= 1");
    if (t % interval != 0) return false;
    g.target = copy_params(g.online);
    return true;
}

/// Random partition of agents into n_groups sets whose sizes differ by at most one.
/// Each set is returned in ascending order.
inline std::vector<std::vector<std::uint32_t>> assign_groups(std::size_t n_agents, std::size_t n_groups,
                                                             std::uint64_t seed) {
    detail::require(n_groups >= 1, "n_groups must be >= 1");
    if (n_groups > n_agents) throw ConfigError("n_groups exceeds the number of agents");
    std::vector<std::uint32_t> order(n_agents);
    for (std::size_t i = 0; i < n_agents; ++i) order[i] = static_cast<std::uint32_t>(i);
    if (n_groups > 1) {
        Rng rng(seed);
        rng.shuffle(order.begin(), order.end());
    }
    std::vector<std::vector<std::uint32_t>> groups(n_groups);
    std::size_t pos = 0;
    for (std::size_t g = 0; g < n_groups; ++g) {
        const std::size_t sz = n_agents / n_groups + (g < n_agents % n_groups ? 1 : 0);
        groups[g].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                         order.begin() + static_cast<std::ptrdiff_t>(pos + sz));
        std::sort(groups[g].begin(), groups[g].end());
        pos += sz;
    }
    return groups;
}

} // namespace coopdqn
