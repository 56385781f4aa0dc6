#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "coopdqn/error.hpp"
#include "coopdqn/game.hpp"
#include "coopdqn/rng.hpp"

namespace coopdqn {

struct Transition {
    std::uint32_t agent = 0;
    std::int64_t t = 0;
    AgentState s;
    Action a = Action::Cooperate;
    double r = 0.0;
    AgentState s_next;
};

/// Fixed-capacity FIFO ring of transitions with per-agent links for n-step lookup.
///
/// Every pushed transition gets a global sequence number; the live window is
/// [total_pushed - size, total_pushed). Links between an agent's consecutive
/// entries are stored as sequence numbers and are only followed while live.
class ReplayBuffer {
public:
    using Seq = std::uint64_t;
    static constexpr Seq kNone = std::numeric_limits<Seq>::max();

    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        detail::require(capacity > 0, "replay capacity must be positive");
        slots_.reserve(std::min<std::size_t>(capacity, 1u << 20));
    }

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t size() const noexcept { return slots_.size(); }
    bool empty() const noexcept { return slots_.empty(); }
    Seq total_pushed() const noexcept { return total_; }
    Seq oldest() const noexcept { return total_ - slots_.size(); }

    bool is_live(Seq seq) const noexcept { return seq != kNone && seq < total_ && seq >= oldest(); }

    void push(const Transition& tr) {
        if (tr.s.dim != tr.s_next.dim) throw ConfigError("transition state dimensions differ");
        if (!std::isfinite(tr.r)) throw NumericFault("transition reward is not finite");
        const Seq seq = total_;
        if (tr.agent >= last_by_agent_.size()) last_by_agent_.resize(tr.agent + 1, kNone);
        Seq prev = last_by_agent_[tr.agent];
        // the previous entry may be the one about to be overwritten
        if (slots_.size() == capacity_ && prev == oldest()) prev = kNone;
        if (!is_live(prev)) prev = kNone;
        if (prev != kNone) slot(prev).next = seq;
        Entry e{tr, seq, prev, kNone};
        if (slots_.size() < capacity_) slots_.push_back(e);
        else slots_[seq % capacity_] = e;
        last_by_agent_[tr.agent] = seq;
        ++total_;
    }

    const Transition& at(Seq seq) const {
        if (!is_live(seq)) throw ConfigError("replay: sequence number is not live");
        return slot(seq).tr;
    }

    /// Live successor of `seq` from the same agent, if any.
    std::optional<Seq> next_of(Seq seq) const {
        const Seq n = slot(seq).next;
        if (!is_live(n)) return std::nullopt;
        return n;
    }

    /// Live entries of one agent, oldest first, reconstructed by walking the links.
    std::vector<Seq> agent_chain(std::uint32_t agent) const {
        std::vector<Seq> out;
        if (agent >= last_by_agent_.size()) return out;
        for (Seq s = last_by_agent_[agent]; is_live(s); s = slot(s).prev) out.push_back(s);
        std::reverse(out.begin(), out.end());
        return out;
    }

    /// `batch` live sequence numbers drawn uniformly with replacement.
    std::vector<Seq> sample_batch(std::size_t batch, Rng& rng) const {
        std::vector<Seq> out;
        sample_batch_into(batch, rng, out);
        return out;
    }

    void sample_batch_into(std::size_t batch, Rng& rng, std::vector<Seq>& out) const {
        out.clear();
        if (empty()) return;
        out.reserve(batch);
        const Seq base = oldest();
        for (std::size_t k = 0; k < batch; ++k) out.push_back(base + rng.index(slots_.size()));
    }

private:
    struct Entry {
        Transition tr;
        Seq seq;
        Seq prev;
        Seq next;
    };

    Entry& slot(Seq seq) { return slots_[seq % capacity_]; }
    const Entry& slot(Seq seq) const { return slots_[seq % capacity_]; }

    std::size_t capacity_;
    std::vector<Entry> slots_;
    std::vector<Seq> last_by_agent_;
    Seq total_ = 0;
};

} // namespace coopdqn
