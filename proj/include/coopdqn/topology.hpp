#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "coopdqn/error.hpp"
#include "coopdqn/rng.hpp"

namespace coopdqn {

inline constexpr std::size_t kDegree = 4;

enum class TopologyKind { Grid, RandomRegular, Modular, SmallWorld };

inline std::string to_string(TopologyKind k) {
    switch (k) {
        case TopologyKind::Grid: return "grid";
        case TopologyKind::RandomRegular: return "random_regular";
        case TopologyKind::Modular: return "modular";
        case TopologyKind::SmallWorld: return "small_world";
    }
    return "?";
}

inline TopologyKind topology_kind_from_string(const std::string& s) {
    if (s == "grid") return TopologyKind::Grid;
    if (s == "random_regular") return TopologyKind::RandomRegular;
    if (s == "modular") return TopologyKind::Modular;
    if (s == "small_world") return TopologyKind::SmallWorld;
    throw ConfigError("unknown topology kind '" + s + "'");
}

using Neighbors = std::array<std::uint32_t, kDegree>;

/// Immutable degree-4 interaction graph.
///
/// Grid neighbors are stored as (up, down, left, right) with periodic wraparound;
/// every other kind stores neighbors in ascending index order.
class Topology {
public:
    Topology(TopologyKind kind, std::vector<Neighbors> neighbors, std::size_t side = 0)
        : kind_(kind), side_(side), neighbors_(std::move(neighbors)) {
        validate();
    }

    TopologyKind kind() const noexcept { return kind_; }
    std::size_t n_agents() const noexcept { return neighbors_.size(); }
    /// Lattice side length for grids, 0 otherwise.
    std::size_t side() const noexcept { return side_; }
    const Neighbors& neighbors(std::size_t i) const { return neighbors_.at(i); }

    /// Undirected edges (i < j), sorted ascending.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges() const {
        std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
        out.reserve(n_agents() * kDegree / 2);
        for (std::uint32_t i = 0; i < n_agents(); ++i)
            for (auto j : neighbors_[i])
                if (i < j) out.emplace_back(i, j);
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Writes one "i j" pair per line, ascending.
    void write_edge_list(std::ostream& os) const {
        for (auto [i, j] : edges()) os << i << ' ' << j << '\n';
    }

    std::size_t connected_components() const {
        std::vector<std::uint32_t> label(n_agents(), UINT32_MAX);
        std::vector<std::uint32_t> stack;
        std::size_t count = 0;
        for (std::uint32_t s = 0; s < n_agents(); ++s) {
            if (label[s] != UINT32_MAX) continue;
            label[s] = static_cast<std::uint32_t>(count);
            stack.push_back(s);
            while (!stack.empty()) {
                auto u = stack.back();
                stack.pop_back();
                for (auto v : neighbors_[u])
                    if (label[v] == UINT32_MAX) {
                        label[v] = label[u];
                        stack.push_back(v);
                    }
            }
            ++count;
        }
        return count;
    }

private:
    void validate() const {
        const auto n = n_agents();
        detail::require(n > kDegree, "topology needs more than 4 agents");
        for (std::size_t i = 0; i < n; ++i) {
            const auto& nb = neighbors_[i];
            for (std::size_t a = 0; a < kDegree; ++a) {
                detail::require(nb[a] < n, "neighbor index out of range");
                detail::require(nb[a] != i, "self-loop at agent " + std::to_string(i));
                for (std::size_t b = a + 1; b < kDegree; ++b)
                    detail::require(nb[a] != nb[b], "duplicate edge at agent " + std::to_string(i));
                const auto& back = neighbors_[nb[a]];
                detail::require(std::find(back.begin(), back.end(), i) != back.end(),
                                "asymmetric adjacency at agent " + std::to_string(i));
            }
        }
    }

    TopologyKind kind_;
    std::size_t side_;
    std::vector<Neighbors> neighbors_;
};

/// L x L periodic lattice, neighbor order (up, down, left, right). Agent index = row * L + col.
inline Topology make_grid(std::size_t L) {
    if (L < 3) throw ConfigError("grid side L must be >= 3 (got " + std::to_string(L) + ")");
    std::vector<Neighbors> nb(L * L);
    for (std::size_t r = 0; r < L; ++r)
        for (std::size_t c = 0; c < L; ++c) {
            auto id = [L](std::size_t rr, std::size_t cc) { return static_cast<std::uint32_t>(rr * L + cc); };
            nb[r * L + c] = {id((r + L - 1) % L, c), id((r + 1) % L, c), id(r, (c + L - 1) % L), id(r, (c + 1) % L)};
        }
    return Topology(TopologyKind::Grid, std::move(nb), L);
}

namespace detail {

using AdjSets = std::vector<std::vector<std::uint32_t>>;

inline bool has_edge(const AdjSets& adj, std::uint32_t a, std::uint32_t b) {
    return std::find(adj[a].begin(), adj[a].end(), b) != adj[a].end();
}

inline void replace_neighbor(AdjSets& adj, std::uint32_t node, std::uint32_t from, std::uint32_t to) {
    *std::find(adj[node].begin(), adj[node].end(), from) = to;
}

inline std::vector<Neighbors> sorted_neighbors(AdjSets adj) {
    std::vector<Neighbors> out(adj.size());
    for (std::size_t i = 0; i < adj.size(); ++i) {
        std::sort(adj[i].begin(), adj[i].end());
        std::copy(adj[i].begin(), adj[i].end(), out[i].begin());
    }
    return out;
}

/// Configuration model: pair 4n stubs uniformly, reject any pairing with a
/// self-loop or multi-edge and start over.
inline AdjSets random_regular_adjacency(std::size_t n, Rng& rng, std::size_t max_attempts) {
    std::vector<std::uint32_t> stubs(n * kDegree);
    for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
        for (std::size_t i = 0; i < stubs.size(); ++i) stubs[i] = static_cast<std::uint32_t>(i / kDegree);
        rng.shuffle(stubs.begin(), stubs.end());
        AdjSets adj(n);
        bool ok = true;
        for (std::size_t k = 0; ok && k < stubs.size(); k += 2) {
            const auto a = stubs[k], b = stubs[k + 1];
            if (a == b || has_edge(adj, a, b)) ok = false;
            else {
                adj[a].push_back(b);
                adj[b].push_back(a);
            }
        }
        if (ok) return adj;
    }
    throw GenerationError("random 4-regular construction failed after " + std::to_string(max_attempts) +
                          " attempts (n=" + std::to_string(n) + ")");
}

/// Degree-preserving double-edge swap: (a-b, c-d) -> (a-d, c-b). Returns false
/// when the swap would create a self-loop or a multi-edge.
inline bool try_swap(AdjSets& adj, std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t d) {
    if (a == c || a == d || b == c || b == d) return false;
    if (has_edge(adj, a, d) || has_edge(adj, c, b)) return false;
    replace_neighbor(adj, a, b, d);
    replace_neighbor(adj, b, a, c);
    replace_neighbor(adj, c, d, b);
    replace_neighbor(adj, d, c, a);
    return true;
}

} // namespace detail

inline constexpr std::size_t kMaxRegularAttempts = 100000;

/// Uniform-style random simple 4-regular graph (configuration model with rejection).
inline Topology make_random_regular(std::size_t n, std::uint64_t seed) {
    if (n < 5) throw ConfigError("random 4-regular graph needs n >= 5");
    Rng rng(seed);
    return Topology(TopologyKind::RandomRegular,
                    detail::sorted_neighbors(detail::random_regular_adjacency(n, rng, kMaxRegularAttempts)));
}

/// Ring lattice (two nearest on each side) whose edges are each, with
/// probability p_rewire, swapped against a uniformly chosen edge by a
/// degree-preserving double-edge swap. Degrees stay exactly 4.
inline Topology make_small_world(std::size_t n, double p_rewire, std::uint64_t seed) {
    if (n < 5) throw ConfigError("small-world graph needs n >= 5");
    if (!(p_rewire >= 0.0 && p_rewire <= 1.0)) throw ConfigError("p_rewire must lie in [0,1]");
    detail::AdjSets adj(n);
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t k = 1; k <= 2; ++k) {
            const auto j = static_cast<std::uint32_t>((i + k) % n);
            adj[i].push_back(j);
            adj[j].push_back(i);
        }
    Rng rng(seed);
    const std::size_t tries_per_edge = 32;
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t k = 1; k <= 2; ++k) {
            if (!rng.bernoulli(p_rewire)) continue;
            const auto j = static_cast<std::uint32_t>((i + k) % n);
            if (!detail::has_edge(adj, i, j)) continue; // already rewired by an earlier swap
            for (std::size_t t = 0; t < tries_per_edge; ++t) {
                const auto c = static_cast<std::uint32_t>(rng.index(n));
                const auto d = adj[c][rng.index(kDegree)];
                if (detail::try_swap(adj, i, j, c, d)) break;
            }
        }
    return Topology(TopologyKind::SmallWorld, detail::sorted_neighbors(std::move(adj)));
}

/// n_modules equal blocks, each an independent random 4-regular graph, then
/// n_cross degree-preserving swaps between edges of two different modules.
/// Each successful swap adds two cross-module edges.
inline Topology make_modular(std::size_t n, std::size_t n_modules, std::size_t n_cross, std::uint64_t seed) {
    if (n_modules == 0 || n % n_modules != 0)
        throw ConfigError("modular topology: n must be divisible by n_modules");
    const std::size_t block = n / n_modules;
    if (block < 5) throw ConfigError("modular topology: each module needs >= 5 agents");
    if (n_cross > 0 && n_modules < 2) throw ConfigError("modular topology: cross edges need >= 2 modules");
    Rng rng(seed);
    detail::AdjSets adj(n);
    for (std::size_t m = 0; m < n_modules; ++m) {
        auto local = detail::random_regular_adjacency(block, rng, kMaxRegularAttempts);
        const auto base = static_cast<std::uint32_t>(m * block);
        for (std::size_t i = 0; i < block; ++i)
            for (auto j : local[i]) adj[base + i].push_back(base + j);
    }
    const std::size_t max_tries = 1000 * (n_cross + 1);
    std::size_t done = 0;
    for (std::size_t t = 0; done < n_cross && t < max_tries; ++t) {
        const auto a = static_cast<std::uint32_t>(rng.index(n));
        const auto b = adj[a][rng.index(kDegree)];
        const auto c = static_cast<std::uint32_t>(rng.index(n));
        const auto d = adj[c][rng.index(kDegree)];
        // only swap two intra-module edges from different modules
        if (a / block != b / block || c / block != d / block || a / block == c / block) continue;
        if (detail::try_swap(adj, a, b, c, d)) ++done;
    }
    if (done < n_cross) throw GenerationError("modular topology: could not place all cross-module swaps");
    return Topology(TopologyKind::Modular, detail::sorted_neighbors(std::move(adj)));
}

} // namespace coopdqn
