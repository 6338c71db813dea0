#include <catch2/catch.hpp>

#include <set>

#include "landver/bounded.hpp"
#include "landver/cnf.hpp"

#include "support/dpll.hpp"
#include "support/oracles.hpp"
#include "support/test_rng.hpp"

using namespace landver;

namespace {

Fsm make_fsm(std::vector<std::vector<std::uint32_t>> succ, std::uint32_t num_regions) {
    Fsm fsm;
    fsm.num_regions = num_regions;
    fsm.succ = std::move(succ);
    fsm.labels.assign(num_regions + 1, RegionLabel::Normal);
    fsm.labels.back() = RegionLabel::Sink;
    for (auto& s : fsm.succ) std::sort(s.begin(), s.end());
    fsm.validate();
    return fsm;
}

// Random total machine: every state keeps at least one successor.
Fsm random_fsm(testsupport::Rng& rng, std::uint32_t n_regions, int max_degree) {
    std::vector<std::vector<std::uint32_t>> succ(n_regions + 1);
    for (std::uint32_t s = 0; s < n_regions; ++s) {
        const int deg = rng.uniform_int(1, max_degree);
        std::set<std::uint32_t> d;
        for (int k = 0; k < deg; ++k)
            d.insert(static_cast<std::uint32_t>(rng.uniform_int(0, static_cast<int>(n_regions))));
        succ[s].assign(d.begin(), d.end());
    }
    succ[n_regions] = {n_regions};
    return make_fsm(std::move(succ), n_regions);
}

} // namespace

TEST_CASE("unreachable bad state holds") {
    auto fsm = make_fsm({{0}, {1}, {2}}, 2); // two independent self-loops + sink
    BoundedSpec spec;
    spec.kind = SpecKind::Invariant;
    spec.horizon = 10;
    spec.initial = {0};
    spec.target = {1};
    auto res = check_bounded_safety(fsm, spec);
    CHECK(res.status == CheckStatus::Holds);
}

TEST_CASE("bad initial state fails with a zero-length witness") {
    auto fsm = make_fsm({{1}, {1}, {2}}, 2);
    BoundedSpec spec;
    spec.kind = SpecKind::Invariant;
    spec.horizon = 5;
    spec.initial = {0};
    spec.target = {0};
    auto res = check_bounded_safety(fsm, spec);
    REQUIRE(res.status == CheckStatus::Fails);
    REQUIRE(res.witness.size() == 1);
    CHECK(res.witness[0] == 0);
}

TEST_CASE("safety verdicts match the boolean-power oracle on random machines") {
    testsupport::Rng rng(101);
    for (int trial = 0; trial < 60; ++trial) {
        const std::uint32_t n = static_cast<std::uint32_t>(rng.uniform_int(2, 200));
        auto fsm = random_fsm(rng, n, 4);
        BoundedSpec spec;
        spec.kind = SpecKind::Invariant;
        spec.horizon = rng.uniform_int(0, 25);
        spec.initial = {static_cast<std::uint32_t>(rng.uniform_int(0, static_cast<int>(n) - 1))};
        spec.target = {static_cast<std::uint32_t>(rng.uniform_int(0, static_cast<int>(n) - 1))};
        auto res = check_bounded_safety(fsm, spec);

        std::vector<bool> from(fsm.num_states(), false);
        for (auto s : spec.initial) from[s] = true;
        auto reach = testsupport::matrix_power_reachable(fsm.succ, from, spec.horizon);
        bool bad_reachable = false;
        for (auto s : spec.target) bad_reachable = bad_reachable || reach[s];
        CHECK((res.status == CheckStatus::Fails) == bad_reachable);
        if (res.status == CheckStatus::Fails) {
            CHECK(path_is_valid(fsm, res.witness));
            CHECK(static_cast<int>(res.witness.size()) - 1 <= spec.horizon);
            CHECK(res.witness.front() == spec.initial[0]);
            CHECK(res.witness.back() == spec.target[0]);
        }
    }
}

TEST_CASE("reach holds when the goal covers the initial set") {
    auto fsm = make_fsm({{1}, {0}, {2}}, 2);
    BoundedSpec spec;
    spec.kind = SpecKind::Reach;
    spec.horizon = 0;
    spec.initial = {0, 1};
    spec.target = {0, 1};
    auto res = check_bounded_reach(fsm, spec);
    CHECK(res.status == CheckStatus::Holds);
    CHECK(res.per_initial_steps == std::vector<int>{0, 0});
}

TEST_CASE("disconnected goal fails reach") {
    auto fsm = make_fsm({{0}, {1}, {2}}, 2);
    BoundedSpec spec;
    spec.kind = SpecKind::Reach;
    spec.horizon = 20;
    spec.initial = {0};
    spec.target = {1};
    auto res = check_bounded_reach(fsm, spec);
    CHECK(res.status == CheckStatus::Fails);
    CHECK(res.per_initial_steps == std::vector<int>{-1});
}

TEST_CASE("reach verdicts match the boolean-power oracle") {
    testsupport::Rng rng(102);
    for (int trial = 0; trial < 40; ++trial) {
        const std::uint32_t n = static_cast<std::uint32_t>(rng.uniform_int(2, 120));
        auto fsm = random_fsm(rng, n, 3);
        BoundedSpec spec;
        spec.kind = SpecKind::Reach;
        spec.horizon = rng.uniform_int(0, 20);
        spec.initial = {static_cast<std::uint32_t>(rng.uniform_int(0, static_cast<int>(n) - 1)),
                        static_cast<std::uint32_t>(rng.uniform_int(0, static_cast<int>(n) - 1))};
        spec.target = {static_cast<std::uint32_t>(rng.uniform_int(0, static_cast<int>(n) - 1))};
        auto res = check_bounded_reach(fsm, spec);

        bool all = true;
        for (auto s0 : spec.initial) {
            std::vector<bool> from(fsm.num_states(), false);
            from[s0] = true;
            auto reach = testsupport::matrix_power_reachable(fsm.succ, from, spec.horizon);
            bool ok = false;
            for (auto g : spec.target) ok = ok || reach[g];
            all = all && ok;
        }
        CHECK((res.status == CheckStatus::Holds) == all);
        if (res.status == CheckStatus::Holds && res.witness.size() > 1)
            CHECK(path_is_valid(fsm, res.witness));
    }
}

TEST_CASE("mu sweep keeps the last passing value") {
    auto pass_all = [](double) {
        Fsm fsm;
        fsm.num_regions = 1;
        fsm.succ = {{0}, {1}};
        fsm.labels = {RegionLabel::Normal, RegionLabel::Sink};
        return fsm;
    };
    auto always = [](const Fsm&) { return true; };
    auto res = mu_search({0.1, 0.2, 0.3}, pass_all, always);
    REQUIRE(res.mu_max.has_value());
    CHECK(*res.mu_max == 0.3);
    CHECK(res.prefix_ok);

    auto never = [](const Fsm&) { return false; };
    auto res2 = mu_search({0.1, 0.2}, pass_all, never);
    CHECK_FALSE(res2.mu_max.has_value());
    CHECK(res2.outcomes.size() == 1); // early exit after the first failure

    // Threshold behaviour: pass below 0.25 only.
    auto thresh = [](const Fsm& f) { return f.succ[0].size() == 1; };
    auto build = [&](double mu) {
        Fsm fsm;
        fsm.num_regions = 1;
        fsm.succ = {mu < 0.25 ? std::vector<std::uint32_t>{0}
                              : std::vector<std::uint32_t>{0, 1}};
        fsm.succ.push_back({1});
        fsm.labels = {RegionLabel::Normal, RegionLabel::Sink};
        return fsm;
    };
    auto res3 = mu_search({0.1, 0.2, 0.3, 0.6}, build, thresh, /*exhaustive=*/true);
    REQUIRE(res3.mu_max.has_value());
    CHECK(*res3.mu_max == 0.2);
    CHECK(res3.prefix_ok);
    CHECK(res3.monotonic);
    CHECK(res3.outcomes.size() == 4);
}

TEST_CASE("cnf of a one-state self-loop with the state bad is satisfiable") {
    Fsm fsm;
    fsm.num_regions = 1;
    fsm.succ = {{0}, {1}};
    fsm.labels = {RegionLabel::Normal, RegionLabel::Sink};
    BoundedSpec spec;
    spec.kind = SpecKind::Invariant;
    spec.horizon = 0;
    spec.initial = {0};
    spec.target = {0};
    const std::string cnf = export_cnf(fsm, spec);
    CHECK(testsupport::Dpll::satisfiable_dimacs(cnf));
}

TEST_CASE("cnf of an unreachable bad state is unsatisfiable") {
    auto fsm = make_fsm({{0}, {1}, {2}}, 2);
    BoundedSpec spec;
    spec.kind = SpecKind::Invariant;
    spec.horizon = 8;
    spec.initial = {0};
    spec.target = {1};
    const std::string cnf = export_cnf(fsm, spec);
    CHECK_FALSE(testsupport::Dpll::satisfiable_dimacs(cnf));
}

TEST_CASE("cnf satisfiability equals the explicit verdict on random machines") {
    testsupport::Rng rng(103);
    for (int trial = 0; trial < 60; ++trial) {
        const std::uint32_t n = static_cast<std::uint32_t>(rng.uniform_int(2, 40));
        auto fsm = random_fsm(rng, n, 2);
        BoundedSpec spec;
        spec.kind = SpecKind::Invariant;
        spec.horizon = rng.uniform_int(0, 12);
        spec.initial = {static_cast<std::uint32_t>(rng.uniform_int(0, static_cast<int>(n) - 1))};
        spec.target = {static_cast<std::uint32_t>(rng.uniform_int(0, static_cast<int>(n) - 1))};
        const bool fails = check_bounded_safety(fsm, spec).status == CheckStatus::Fails;
        const bool sat = testsupport::Dpll::satisfiable_dimacs(export_cnf(fsm, spec));
        REQUIRE(sat == fails);
    }
}
