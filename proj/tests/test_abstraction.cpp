#include <catch2/catch.hpp>

#include <set>
#include <sstream>

#include "landver/abstraction.hpp"
#include "landver/partition.hpp"

#include "support/desk.hpp"
#include "support/suites.hpp"
#include "support/test_rng.hpp"

using namespace landver;

TEST_CASE("the sixteen-cube partition of the unit-side grid") {
    auto spec = PartitionSpec::uniform(Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(16, 16, 16), 1.0);
    auto regions = partition(spec);
    CHECK(regions.size() == 4096);
    CHECK(spec.radius(0) == 0.5);
}

TEST_CASE("one-dimensional layout of centers") {
    PartitionSpec spec;
    spec.lower = Eigen::Vector3d(0, 0, 0);
    spec.upper = Eigen::Vector3d(2, 1, 1);
    spec.cells = {2, 1, 1};
    auto regions = partition(spec);
    REQUIRE(regions.size() == 2);
    CHECK(regions[0].center[0] == 0.5);
    CHECK(regions[1].center[0] == 1.5);
}

TEST_CASE("non-integral uniform extent is rejected") {
    CHECK_THROWS_AS(
        PartitionSpec::uniform(Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(2.5, 2, 2), 1.0),
        ConfigError);
}

TEST_CASE("every sampled point locates to exactly one cell that contains it") {
    auto spec = testsupport::desk_partition();
    testsupport::Rng rng(81);
    for (int t = 0; t < 5000; ++t) {
        Eigen::Vector3d p;
        for (int d = 0; d < 3; ++d) p[d] = rng.uniform(spec.lower[d], spec.upper[d]);
        auto id = spec.locate(p);
        REQUIRE(id.has_value());
        const Eigen::Vector3d lo = spec.box_lower(*id);
        const Eigen::Vector3d hi = spec.box_upper(*id);
        for (int d = 0; d < 3; ++d) {
            CHECK(p[d] >= lo[d] - 1e-12);
            CHECK(p[d] <= hi[d] + 1e-12);
        }
    }
    CHECK_FALSE(spec.locate(spec.upper + Eigen::Vector3d(1, 0, 0)).has_value());
}

TEST_CASE("inflation radius combines the two bound terms") {
    auto b = DeltaFcBounds::for_dynamics(DynamicsParams{25.0, 0.1});
    CHECK(delta_zeta(1.0, 0.0, 0.1, b) ==
          Approx(b.beta(Eigen::Vector3d(1, 1, 1), 0.1)).epsilon(1e-12));
    CHECK(delta_zeta(1.0, 1.0, 0.1, b) == Approx(7.7670).margin(5e-4));
    // Monotone in both arguments on a sampled grid.
    double prev = -1.0;
    for (double eps = 0.1; eps <= 1.6; eps += 0.25) {
        const double v = delta_zeta(eps, 0.4, 0.1, b);
        CHECK(v > prev);
        prev = v;
    }
    prev = -1.0;
    for (double mu = 0.0; mu <= 2.0; mu += 0.25) {
        const double v = delta_zeta(0.5, mu, 0.1, b);
        CHECK(v > prev);
        prev = v;
    }
}

namespace {

// Toy bounds that keep the inflation ball strictly inside a cell.
DeltaFcBounds tiny_bounds() {
    DeltaFcBounds b;
    b.beta = [](const Eigen::Vector3d&, double) { return 1e-6; };
    b.gamma = [](double mu, double) { return 1e-3 * mu; };
    return b;
}

} // namespace

TEST_CASE("a ball inside one cell yields exactly one successor") {
    Scenario sc = testsupport::desk_scenario();
    sc.dynamics.tau = 1e-9; // near-frozen flow keeps the successor at the center
    auto spec = testsupport::desk_partition();
    LayeredReluNetwork zero;
    zero.input_dim = 10;
    zero.output_dim = 1;
    zero.layers.push_back(Layer::dense(Mat::Zero(1, 10), Vec::Zero(1), Activation::Identity));
    zero.validate();
    auto built = build_fsm(spec, sc, zero, 0.0, tiny_bounds(), 0.0);
    int checked = 0;
    for (int id = 0; id < spec.total(); ++id) {
        if (!built.traversable[static_cast<std::size_t>(id)]) continue;
        REQUIRE(built.fsm.succ[static_cast<std::size_t>(id)].size() == 1);
        ++checked;
    }
    CHECK(checked > 0);
}

TEST_CASE("a ball spanning the whole domain reaches every region") {
    Scenario sc = testsupport::desk_scenario();
    auto spec = testsupport::desk_partition();
    DeltaFcBounds huge;
    huge.beta = [](const Eigen::Vector3d&, double) { return 1e9; };
    huge.gamma = [](double, double) { return 0.0; };
    auto aug = testsupport::desk_augmented();
    auto built = build_fsm(spec, sc, aug, 0.0, huge, 0.0);
    for (int id = 0; id < spec.total(); ++id) {
        if (!built.traversable[static_cast<std::size_t>(id)]) continue;
        // All regions plus the sink.
        REQUIRE(built.fsm.succ[static_cast<std::size_t>(id)].size() ==
                static_cast<std::size_t>(spec.total()) + 1);
    }
}

TEST_CASE("fsm construction is deterministic") {
    Scenario sc = testsupport::desk_scenario();
    auto spec = testsupport::desk_partition();
    auto aug = testsupport::desk_augmented();
    auto a = build_fsm(spec, sc, aug, 0.3);
    auto b = build_fsm(spec, sc, aug, 0.3);
    CHECK(a.fsm == b.fsm);
    CHECK(a.untraversable_count == b.untraversable_count);
    CHECK(a.untraversable_count < spec.total()); // some cells live on the flight band
}

TEST_CASE("one-step containment of concrete transitions") {
    Scenario sc = testsupport::desk_scenario();
    auto spec = testsupport::desk_partition();
    auto aug = testsupport::desk_augmented();
    for (double mu : {0.1, 1.1}) {
        auto built = build_fsm(spec, sc, aug, mu);
        auto res = testsupport::run_containment_suite(spec, sc, built, 2000, mu, 91);
        INFO("mu " << mu << ": " << res.samples << " samples, " << res.escaped_covered
                   << " chart escapes covered by the sink, " << res.skipped_unreconstructed
                   << " skipped");
        CHECK(res.violations == 0);
        CHECK(res.samples > 1000);
    }
}

TEST_CASE("transition sets grow with mu") {
    Scenario sc = testsupport::desk_scenario();
    auto spec = testsupport::desk_partition();
    auto aug = testsupport::desk_augmented();
    auto small = build_fsm(spec, sc, aug, 0.1);
    auto large = build_fsm(spec, sc, aug, 1.1);
    CHECK(transition_monotonicity_check(small.fsm, large.fsm).is_subset);
    CHECK(transition_monotonicity_check(small.fsm, small.fsm).is_subset); // mu 0.1 vs itself
}

TEST_CASE("monotonicity violations carry a witness") {
    Fsm a;
    a.num_regions = 2;
    a.succ = {{0, 1}, {1}, {2}};
    a.labels = {RegionLabel::Normal, RegionLabel::Normal, RegionLabel::Sink};
    Fsm b = a;
    b.succ[0] = {0}; // drops successor 1
    auto rep = transition_monotonicity_check(a, b);
    CHECK_FALSE(rep.is_subset);
    CHECK(rep.witness_state == 0);
}

TEST_CASE("unsafe pose box maps into grid cells") {
    Scenario sc = testsupport::desk_scenario();
    auto spec = testsupport::desk_partition();
    auto ids = cells_meeting_state_box(spec, sc, testsupport::desk_unsafe_box());
    REQUIRE(!ids.empty());
    CHECK(ids.size() < static_cast<std::size_t>(spec.total()));
    // Sampled poses inside the box always land in a listed cell.
    Rng rng(92);
    std::set<std::uint32_t> idset(ids.begin(), ids.end());
    const auto box = testsupport::desk_unsafe_box();
    for (int t = 0; t < 2000; ++t) {
        AircraftState s;
        s.z = rng.uniform(box.z.lo, box.z.hi);
        s.y = rng.uniform(box.y.lo, box.y.hi);
        s.theta = rng.uniform(box.theta.lo, box.theta.hi);
        s.x = sc.x_offset;
        const auto cell = spec.locate(sc.triplet(s));
        REQUIRE(cell.has_value());
        CHECK(idset.count(static_cast<std::uint32_t>(*cell)) == 1);
    }
}

TEST_CASE("fsm text round trip") {
    Fsm fsm;
    fsm.num_regions = 3;
    fsm.succ = {{1, 2}, {0, 3}, {2}, {3}};
    fsm.labels = {RegionLabel::Normal, RegionLabel::Unsafe, RegionLabel::Normal,
                  RegionLabel::Sink};
    std::ostringstream out;
    save_fsm(fsm, out);
    std::istringstream in(out.str());
    Fsm back = load_fsm(in);
    CHECK(back == fsm);
    std::ostringstream out2;
    save_fsm(back, out2);
    CHECK(out2.str() == out.str());
}

TEST_CASE("malformed fsm files report their line") {
    std::istringstream bad_header("landver-fsm 9\n");
    CHECK_THROWS_AS(load_fsm(bad_header), ParseError);
    std::istringstream bad_succ("landver-fsm 1\nstates 2\nsink 1\n0: 5\n1: 1\nlabels: normal sink\n");
    CHECK_THROWS_AS(load_fsm(bad_succ), ParseError);
    std::istringstream bad_label("landver-fsm 1\nstates 2\nsink 1\n0: 1\n1: 1\nlabels: weird sink\n");
    CHECK_THROWS_AS(load_fsm(bad_label), ParseError);
}

TEST_CASE("box cover includes both neighbours on an exact grid plane") {
    PartitionSpec spec;
    spec.lower = Eigen::Vector3d(0, 0, 0);
    spec.upper = Eigen::Vector3d(4, 4, 4);
    spec.cells = {4, 4, 4};
    // Query box with its lower face exactly on the plane x = 2.
    auto cov = spec.cover(Eigen::Vector3d(2.0, 0.5, 0.5), Eigen::Vector3d(2.5, 0.6, 0.6));
    CHECK(cov.lo_idx[0] == 1); // the cell below the plane joins on the tie
    CHECK(cov.hi_idx[0] == 2);
    CHECK_FALSE(cov.leaks_outside);
    // A box poking past the partition is flagged.
    auto leak = spec.cover(Eigen::Vector3d(3.5, 0.5, 0.5), Eigen::Vector3d(4.5, 0.6, 0.6));
    CHECK(leak.leaks_outside);
    CHECK(leak.hi_idx[0] == 3);
    // A fully outside box is empty.
    CHECK(spec.cover(Eigen::Vector3d(5, 5, 5), Eigen::Vector3d(6, 6, 6)).empty);
}
