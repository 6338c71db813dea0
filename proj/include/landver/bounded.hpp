#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "landver/abstraction.hpp"
#include "landver/errors.hpp"

namespace landver {

enum class SpecKind { Invariant, Reach };

// Bounded fragment checked against the abstraction: either no path of length
// at most `horizon` from the initial set reaches a bad state, or every
// initial state can reach the target set within the horizon.
struct BoundedSpec {
    SpecKind kind = SpecKind::Invariant;
    int horizon = 20;
    std::vector<std::uint32_t> initial;
    std::vector<std::uint32_t> target; // unsafe set for Invariant, goal set for Reach

    void validate(const Fsm& fsm) const {
        if (horizon < 0) throw ContractError("horizon must be >= 0");
        if (initial.empty()) throw ContractError("initial set must not be empty");
        for (std::uint32_t s : initial)
            if (s >= fsm.num_states()) throw ContractError("initial state out of range");
        for (std::uint32_t s : target)
            if (s >= fsm.num_states()) throw ContractError("target state out of range");
    }
};

enum class CheckStatus { Holds, Fails };

struct CheckResult {
    CheckStatus status = CheckStatus::Holds;
    // Invariant + Fails: a shortest path from the initial set into the bad
    // set. Reach + Holds: a longest-among-shortest witness path to the goal.
    std::vector<std::uint32_t> witness;
    // Reach only: per initial state, steps to the goal (-1 when unreachable
    // within the horizon), in the order of spec.initial.
    std::vector<int> per_initial_steps;
};

inline bool path_is_valid(const Fsm& fsm, const std::vector<std::uint32_t>& path) {
    if (path.empty()) return false;
    for (std::size_t k = 0; k + 1 < path.size(); ++k)
        if (!std::binary_search(fsm.succ[path[k]].begin(), fsm.succ[path[k]].end(), path[k + 1]))
            return false;
    return true;
}

namespace detail {

struct Bfs {
    std::vector<int> dist;     // -1 unreached
    std::vector<std::int64_t> parent; // -1 none
};

inline Bfs bfs_layers(const Fsm& fsm, const std::vector<std::uint32_t>& sources, int horizon) {
    Bfs b;
    b.dist.assign(fsm.num_states(), -1);
    b.parent.assign(fsm.num_states(), -1);
    std::deque<std::uint32_t> frontier;
    for (std::uint32_t s : sources) {
        if (b.dist[s] == -1) {
            b.dist[s] = 0;
            frontier.push_back(s);
        }
    }
    int depth = 0;
    while (!frontier.empty() && depth < horizon) {
        std::deque<std::uint32_t> next;
        for (std::uint32_t s : frontier) {
            for (std::uint32_t d : fsm.succ[s]) {
                if (b.dist[d] == -1) {
                    b.dist[d] = depth + 1;
                    b.parent[d] = s;
                    next.push_back(d);
                }
            }
        }
        frontier = std::move(next);
        ++depth;
    }
    return b;
}

inline std::vector<std::uint32_t> extract_path(const Bfs& b, std::uint32_t end) {
    std::vector<std::uint32_t> path;
    std::int64_t cur = end;
    while (cur != -1) {
        path.push_back(static_cast<std::uint32_t>(cur));
        cur = b.parent[static_cast<std::size_t>(cur)];
    }
    std::reverse(path.begin(), path.end());
    return path;
}

} // namespace detail

// Explicit-state frontier search; a failing verdict carries a shortest
// counterexample path.
inline CheckResult check_bounded_safety(const Fsm& fsm, const BoundedSpec& spec) {
    if (spec.kind != SpecKind::Invariant)
        throw ContractError("check_bounded_safety wants an Invariant spec");
    spec.validate(fsm);
    std::vector<std::uint8_t> bad(fsm.num_states(), 0);
    for (std::uint32_t s : spec.target) bad[s] = 1;

    const auto b = detail::bfs_layers(fsm, spec.initial, spec.horizon);
    CheckResult res;
    std::int64_t best = -1;
    for (std::uint32_t s = 0; s < fsm.num_states(); ++s) {
        if (!bad[s] || b.dist[s] < 0) continue;
        if (best == -1 || b.dist[s] < b.dist[static_cast<std::size_t>(best)]) best = s;
    }
    if (best == -1) {
        res.status = CheckStatus::Holds;
        return res;
    }
    res.status = CheckStatus::Fails;
    res.witness = detail::extract_path(b, static_cast<std::uint32_t>(best));
    return res;
}

// Bounded reachability, universal over the initial set: holds iff every
// initial state has some path into the goal set within the horizon. Verdicts
// are reported per initial state as well.
inline CheckResult check_bounded_reach(const Fsm& fsm, const BoundedSpec& spec) {
    if (spec.kind != SpecKind::Reach)
        throw ContractError("check_bounded_reach wants a Reach spec");
    spec.validate(fsm);
    std::vector<std::uint8_t> goal(fsm.num_states(), 0);
    for (std::uint32_t s : spec.target) goal[s] = 1;

    CheckResult res;
    res.status = CheckStatus::Holds;
    int hardest_steps = -1;
    std::vector<std::uint32_t> hardest_path;
    for (std::uint32_t s0 : spec.initial) {
        const auto b = detail::bfs_layers(fsm, {s0}, spec.horizon);
        int steps = -1;
        std::int64_t hit = -1;
        for (std::uint32_t s = 0; s < fsm.num_states(); ++s) {
            if (!goal[s] || b.dist[s] < 0) continue;
            if (steps == -1 || b.dist[s] < steps) {
                steps = b.dist[s];
                hit = s;
            }
        }
        res.per_initial_steps.push_back(steps);
        if (steps == -1) {
            res.status = CheckStatus::Fails;
        } else if (steps > hardest_steps) {
            hardest_steps = steps;
            hardest_path = detail::extract_path(b, static_cast<std::uint32_t>(hit));
        }
    }
    if (res.status == CheckStatus::Holds) res.witness = hardest_path;
    return res;
}

inline CheckResult check_bounded(const Fsm& fsm, const BoundedSpec& spec) {
    return spec.kind == SpecKind::Invariant ? check_bounded_safety(fsm, spec)
                                            : check_bounded_reach(fsm, spec);
}

struct MuOutcome {
    double mu = 0.0;
    bool holds = false;
    std::size_t transitions = 0;
};

struct MuSearchResult {
    std::optional<double> mu_max; // empty: no feasible mu
    std::vector<MuOutcome> outcomes;
    bool prefix_ok = true;      // pass set is a prefix of the list
    bool monotonic = true;      // consecutive machines nested (exhaustive mode)
};

// Backward design search: sweep the candidate deviations in ascending order
// and keep the largest one whose abstraction still satisfies the spec. In
// early-exit mode the sweep stops at the first failure; exhaustive mode
// evaluates the whole list and asserts the pass set is a prefix, checking
// transition monotonicity across consecutive machines.
inline MuSearchResult mu_search(const std::vector<double>& mu_values,
                                const std::function<Fsm(double)>& build,
                                const std::function<bool(const Fsm&)>& satisfies,
                                bool exhaustive = false) {
    if (mu_values.empty()) throw ContractError("mu_search wants a non-empty list");
    if (!std::is_sorted(mu_values.begin(), mu_values.end()))
        throw ContractError("mu_search wants an ascending list");
    MuSearchResult res;
    bool failed_before = false;
    std::optional<Fsm> previous;
    for (double mu : mu_values) {
        if (failed_before && !exhaustive) break;
        Fsm fsm = build(mu);
        const bool ok = satisfies(fsm);
        res.outcomes.push_back({mu, ok, fsm.transition_count()});
        if (ok) {
            if (failed_before) res.prefix_ok = false; // pass after a failure
            else res.mu_max = mu;
        } else {
            failed_before = true;
        }
        if (exhaustive && previous) {
            if (!transition_monotonicity_check(*previous, fsm).is_subset) res.monotonic = false;
        }
        if (exhaustive) previous = std::move(fsm);
    }
    return res;
}

} // namespace landver
