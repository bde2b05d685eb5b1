#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "dsm/plan.hpp"
#include "dsm/rng.hpp"

namespace dsm {

/// A non-preferred slot an agent wants to trade away.
struct Advertisement {
    int agent = 0;
    int slot = 0;
    double current_value = 0.0;  // value held in the selected plan
    double desired_value = 0.0;  // value in the preferred plan
};

/// One completed slot swap.
struct ExchangeRecord {
    int initiator = 0;
    int acceptor = 0;
    int slot = 0;
    double initiator_gave = 0.0;
    double initiator_received = 0.0;
    double acceptor_gave = 0.0;
    double acceptor_received = 0.0;
    double initiator_comfort_delta = 0.0;
    double acceptor_comfort_delta = 0.0;
    int sweep = 0;
};

enum class ExchangeMode {
    literal,  // decline only when the requested slot is the acceptor's preferred slot
    strict,   // additionally decline when the acceptor's discomfort would increase
};

enum class ExchangeStatus {
    completed,
    rejected_locked,      // retriable
    declined_preferred,   // acceptor already holds its preferred value there
    declined_stale,       // advertisement no longer matches the live plan
    declined_worse,       // strict mode: acceptor would lose comfort
};

struct ExchangeOutcome {
    ExchangeStatus status = ExchangeStatus::completed;
    std::optional<ExchangeRecord> record;
};

/// Matchmaking index over advertised slots: (slot, current value) ->
/// advertising agents. Informs matches, never decides them.
class Blackboard {
public:
    explicit Blackboard(double value_tolerance = 0.0)
        : tolerance_(value_tolerance) {}

    double tolerance() const { return tolerance_; }

    /// Rebuilds the index from every agent's live selected plan and
    /// returns the number of advertisements registered.
    std::size_t advertise(const Population& p) {
        slots_.assign(p.slot_count(), {});
        locks_.clear();
        ad_count_ = 0;
        for (const AgentState& a : p.agents) {
            register_agent(a);
        }
        return ad_count_;
    }

    /// Drops and re-registers one agent's advertisements (after its
    /// selected plan changed).
    void refresh_agent(const AgentState& a) {
        for (auto& by_value : slots_) {
            for (auto it = by_value.begin(); it != by_value.end();) {
                it->second.erase(a.id);
                if (it->second.empty()) {
                    it = by_value.erase(it);
                } else {
                    ++it;
                }
            }
        }
        recount();
        register_agent(a);
    }

    /// Lowest-id unlocked agent (other than the requester) advertising
    /// the desired value at the slot. Absence is a normal outcome.
    /// `exclude` lists candidates that already declined this request.
    std::optional<int> find_match(int requester, int slot, double desired_value,
                                  const std::set<int>* exclude = nullptr) const {
        if (locked(requester)) {
            throw std::invalid_argument("find_match: requester is locked");
        }
        const auto& by_value = slots_.at(static_cast<std::size_t>(slot));
        std::optional<int> best;
        auto lo = by_value.lower_bound(desired_value - tolerance_);
        auto hi = by_value.upper_bound(desired_value + tolerance_);
        for (auto it = lo; it != hi; ++it) {
            for (int candidate : it->second) {
                if (candidate == requester || locked(candidate)) continue;
                if (exclude != nullptr && exclude->count(candidate)) continue;
                if (!best || candidate < *best) best = candidate;
            }
        }
        return best;
    }

    std::optional<Advertisement> advertisement_at(int agent, int slot) const {
        for (const auto& [value, agents] : slots_.at(static_cast<std::size_t>(slot))) {
            if (agents.count(agent)) {
                Advertisement ad;
                ad.agent = agent;
                ad.slot = slot;
                ad.current_value = value;
                return ad;
            }
        }
        return std::nullopt;
    }

    void purge(int agent, int slot) {
        auto& by_value = slots_.at(static_cast<std::size_t>(slot));
        for (auto it = by_value.begin(); it != by_value.end();) {
            it->second.erase(agent);
            if (it->second.empty()) {
                it = by_value.erase(it);
            } else {
                ++it;
            }
        }
        recount();
    }

    void lock(int agent) { locks_.insert(agent); }
    void unlock(int agent) { locks_.erase(agent); }
    bool locked(int agent) const { return locks_.count(agent) != 0; }
    std::size_t lock_count() const { return locks_.size(); }
    std::size_t ad_count() const { return ad_count_; }

    /// Checks every indexed advertisement against the live plans;
    /// throws when the blackboard has gone stale.
    void verify_synchronized(const Population& p) const {
        for (std::size_t slot = 0; slot < slots_.size(); ++slot) {
            for (const auto& [value, agents] : slots_[slot]) {
                for (int id : agents) {
                    const AgentState& a = p.agents[static_cast<std::size_t>(id)];
                    if (a.selected.slots[slot] != value) {
                        throw std::runtime_error("blackboard stale: advertisement does not match live plan");
                    }
                }
            }
        }
    }

private:
    void register_agent(const AgentState& a) {
        for (std::size_t i = 0; i < a.selected.size(); ++i) {
            const double held = a.selected.slots[i];
            // only non-preferred slots are advertised
            if (held == a.preferred().slots[i]) continue;
            slots_[i][held].insert(a.id);
            ++ad_count_;
        }
    }

    void recount() {
        ad_count_ = 0;
        for (const auto& by_value : slots_) {
            for (const auto& [value, agents] : by_value) {
                ad_count_ += agents.size();
            }
        }
    }

    std::vector<std::map<double, std::set<int>>> slots_;
    std::set<int> locks_;
    double tolerance_ = 0.0;
    std::size_t ad_count_ = 0;
};

/// Counts advertisements for every (agent, slot) where the selected
/// value differs from the preferred one, rebuilding the blackboard.
inline std::size_t advertise(const Population& p, Blackboard& bb) {
    return bb.advertise(p);
}

inline std::optional<int> find_match(const Blackboard& bb, int requester, int slot,
                                     double desired_value) {
    return bb.find_match(requester, slot, desired_value);
}

/// Atomically swaps the values two agents hold at one slot index:
/// lock both, validate, swap, refresh advertisements, unlock. Per-slot
/// global totals are untouched, so any inefficiency cost over g is
/// invariant.
inline ExchangeOutcome exchange_slot(Population& p, Blackboard& bb, int a1, int a2,
                                     int slot, int sweep = 0,
                                     ExchangeMode mode = ExchangeMode::literal) {
    if (a1 == a2) {
        throw std::invalid_argument("exchange_slot: self-exchange");
    }
    if (bb.locked(a1) || bb.locked(a2)) {
        return {ExchangeStatus::rejected_locked, std::nullopt};
    }
    AgentState& initiator = p.agents[static_cast<std::size_t>(a1)];
    AgentState& acceptor = p.agents[static_cast<std::size_t>(a2)];
    const std::size_t i = static_cast<std::size_t>(slot);

    bb.lock(a1);
    bb.lock(a2);
    initiator.available = false;
    acceptor.available = false;
    auto release = [&]() {
        bb.unlock(a1);
        bb.unlock(a2);
        initiator.available = true;
        acceptor.available = true;
    };

    const auto ad = bb.advertisement_at(a2, slot);
    if (!ad || ad->current_value != acceptor.selected.slots[i]) {
        bb.purge(a2, slot);
        release();
        return {ExchangeStatus::declined_stale, std::nullopt};
    }
    if (acceptor.selected.slots[i] == acceptor.preferred().slots[i]) {
        release();
        return {ExchangeStatus::declined_preferred, std::nullopt};
    }

    const double initiator_before = agent_comfort(initiator);
    const double acceptor_before = agent_comfort(acceptor);
    const double v1 = initiator.selected.slots[i];
    const double v2 = acceptor.selected.slots[i];

    if (mode == ExchangeMode::strict) {
        Plan trial = acceptor.selected;
        trial.slots[i] = v1;
        const double after = comfort(trial, acceptor.preferred(), acceptor.discomfort_scale);
        if (after < acceptor_before) {
            release();
            return {ExchangeStatus::declined_worse, std::nullopt};
        }
    }

    initiator.selected.slots[i] = v2;
    acceptor.selected.slots[i] = v1;
    bb.refresh_agent(initiator);
    bb.refresh_agent(acceptor);

    ExchangeRecord rec;
    rec.initiator = a1;
    rec.acceptor = a2;
    rec.slot = slot;
    rec.initiator_gave = v1;
    rec.initiator_received = v2;
    rec.acceptor_gave = v2;
    rec.acceptor_received = v1;
    rec.initiator_comfort_delta = agent_comfort(initiator) - initiator_before;
    rec.acceptor_comfort_delta = agent_comfort(acceptor) - acceptor_before;
    rec.sweep = sweep;
    release();
    return {ExchangeStatus::completed, rec};
}

struct ExchangePhaseStats {
    std::size_t requests_issued = 0;    // proposals sent after a match was found
    std::size_t completed = 0;
    std::size_t declined = 0;
    std::size_t sweeps = 0;

    double success_rate() const {
        return requests_issued == 0
                   ? 1.0
                   : static_cast<double>(completed) / static_cast<double>(requests_issued);
    }
};

/// Runs exchange sweeps until a full sweep completes zero exchanges.
/// Agents take the initiator role in a seeded order reshuffled every
/// sweep; no request queue is kept. Per-exchange declines are recorded
/// in the stats and skipped.
inline std::vector<ExchangeRecord> run_exchange_phase(
    Population& p, Blackboard& bb, std::uint64_t seed,
    ExchangeMode mode = ExchangeMode::literal,
    ExchangePhaseStats* stats_out = nullptr) {
    bb.verify_synchronized(p);

    std::vector<ExchangeRecord> log;
    ExchangePhaseStats stats;
    Rng rng(seed);
    std::vector<int> order(p.size());
    std::iota(order.begin(), order.end(), 0);

    const std::size_t d = p.slot_count();
    // Exact matching terminates on its own (a slot brought to its
    // preferred value is never advertised again). Approximate matching
    // can oscillate, so it gets a sweep cap on top of the
    // strictly-improving request rule below.
    const std::size_t max_sweeps =
        bb.tolerance() > 0.0 ? 100 * d : std::numeric_limits<std::size_t>::max();
    bool progressed = true;
    while (progressed && stats.sweeps < max_sweeps) {
        progressed = false;
        ++stats.sweeps;
        rng.shuffle(order);
        for (int id : order) {
            AgentState& agent = p.agents[static_cast<std::size_t>(id)];
            for (std::size_t i = 0; i < d; ++i) {
                const double held = agent.selected.slots[i];
                const double desired = agent.preferred().slots[i];
                if (held == desired) continue;
                // Work down the candidate list until one accepts; a
                // decline moves on to the next-lowest advertiser.
                std::set<int> declined_by;
                while (true) {
                    const auto partner =
                        bb.find_match(id, static_cast<int>(i), desired, &declined_by);
                    if (!partner) break;
                    const auto offer = bb.advertisement_at(*partner, static_cast<int>(i));
                    if (!offer || std::abs(offer->current_value - desired) >=
                                      std::abs(held - desired)) {
                        // would not bring this slot closer to preferred
                        declined_by.insert(*partner);
                        continue;
                    }
                    ++stats.requests_issued;
                    ExchangeOutcome outcome =
                        exchange_slot(p, bb, id, *partner, static_cast<int>(i),
                                      static_cast<int>(stats.sweeps), mode);
                    if (outcome.status == ExchangeStatus::completed) {
                        ++stats.completed;
                        log.push_back(*outcome.record);
                        progressed = true;
                        break;
                    }
                    ++stats.declined;
                    declined_by.insert(*partner);
                }
            }
        }
    }
    if (stats_out != nullptr) *stats_out = stats;
    return log;
}

}  // namespace dsm
