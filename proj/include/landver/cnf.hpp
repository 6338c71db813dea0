#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "landver/bounded.hpp"

// DIMACS export of the bounded reachability question: the formula is
// satisfiable exactly when some run of the machine, starting in the initial
// set, visits the target set within the horizon. For an Invariant spec the
// target set is the bad set, so SAT corresponds to a safety violation.
//
// Variable numbering (documented in the file header as comments):
//   x(s,t) = 1 + t*S + s     state s held at step t,  s in [0,S), t in [0,T]
//   a(k,t)                   sequential at-most-one chain auxiliaries
//
// Constraints: exactly one state per step (at-least-one clause plus a Sinz
// chain), the initial clause at t=0 with all other states forced off,
// successor implications between consecutive steps, and one target clause
// across all steps. State totality guarantees every prefix extends to a full
// run, so truncation at T loses nothing.

namespace landver {

inline std::string export_cnf(const Fsm& fsm, const BoundedSpec& spec) {
    spec.validate(fsm);
    fsm.validate();
    const std::uint64_t S = fsm.num_states();
    const std::uint64_t T = static_cast<std::uint64_t>(spec.horizon);

    auto var = [S](std::uint64_t s, std::uint64_t t) -> std::int64_t {
        return static_cast<std::int64_t>(1 + t * S + s);
    };
    const std::uint64_t aux_base = S * (T + 1);
    auto aux = [&](std::uint64_t k, std::uint64_t t) -> std::int64_t {
        return static_cast<std::int64_t>(1 + aux_base + t * (S - 1) + k);
    };

    std::vector<std::vector<std::int64_t>> clauses;
    // Exactly-one per step.
    for (std::uint64_t t = 0; t <= T; ++t) {
        std::vector<std::int64_t> alo;
        for (std::uint64_t s = 0; s < S; ++s) alo.push_back(var(s, t));
        clauses.push_back(std::move(alo));
        if (S >= 2) {
            clauses.push_back({-var(0, t), aux(0, t)});
            for (std::uint64_t s = 1; s + 1 < S; ++s) {
                clauses.push_back({-var(s, t), aux(s, t)});
                clauses.push_back({-aux(s - 1, t), aux(s, t)});
                clauses.push_back({-var(s, t), -aux(s - 1, t)});
            }
            clauses.push_back({-var(S - 1, t), -aux(S - 2, t)});
        }
    }
    // Initial step.
    std::vector<std::uint8_t> is_initial(S, 0);
    for (std::uint32_t s : spec.initial) is_initial[s] = 1;
    std::vector<std::int64_t> init_clause;
    for (std::uint64_t s = 0; s < S; ++s) {
        if (is_initial[s])
            init_clause.push_back(var(s, 0));
        else
            clauses.push_back({-var(s, 0)});
    }
    clauses.push_back(std::move(init_clause));
    // Transitions.
    for (std::uint64_t t = 0; t < T; ++t) {
        for (std::uint64_t s = 0; s < S; ++s) {
            std::vector<std::int64_t> cl{-var(s, t)};
            for (std::uint32_t d : fsm.succ[s]) cl.push_back(var(d, t + 1));
            clauses.push_back(std::move(cl));
        }
    }
    // Target visited at some step.
    std::vector<std::int64_t> target_clause;
    for (std::uint64_t t = 0; t <= T; ++t)
        for (std::uint32_t s : spec.target) target_clause.push_back(var(s, t));
    clauses.push_back(std::move(target_clause));

    const std::uint64_t n_vars = aux_base + (S >= 2 ? (T + 1) * (S - 1) : 0);
    std::ostringstream out;
    out << "c bounded " << (spec.kind == SpecKind::Invariant ? "safety-violation" : "reach")
        << " query, horizon " << spec.horizon << "\n";
    out << "c states " << S << " (sink " << fsm.sink() << ")\n";
    out << "c var x(s,t) = 1 + t*" << S << " + s, s in [0," << S << "), t in [0," << T << "]\n";
    out << "c vars beyond " << aux_base << " are at-most-one chain auxiliaries\n";
    out << "c satisfiable iff a run from the initial set visits the target set\n";
    out << "p cnf " << n_vars << ' ' << clauses.size() << "\n";
    for (const auto& cl : clauses) {
        for (std::int64_t lit : cl) out << lit << ' ';
        out << "0\n";
    }
    return out.str();
}

} // namespace landver
