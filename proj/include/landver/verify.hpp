#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "landver/abstraction.hpp"
#include "landver/interval.hpp"
#include "landver/partition.hpp"
#include "landver/relu_network.hpp"
#include "landver/rng.hpp"
#include "landver/scenario.hpp"

namespace landver {

// Axis-aligned box of network inputs.
struct InputBox {
    Vec lower;
    Vec upper;

    void validate() const {
        if (lower.size() != upper.size()) throw ContractError("input box dimension mismatch");
        for (Eigen::Index i = 0; i < lower.size(); ++i)
            if (!(lower(i) <= upper(i))) throw ContractError("input box bounds out of order");
    }
    Vec mid() const { return 0.5 * (lower + upper); }
    bool contains(const Vec& x) const {
        for (Eigen::Index i = 0; i < lower.size(); ++i)
            if (x(i) < lower(i) || x(i) > upper(i)) return false;
        return true;
    }
};

// Infinity-norm ball of admitted control outputs.
struct ControlEnvelope {
    Vec center;
    double radius = 0.0;

    void validate() const {
        if (radius < 0.0) throw ContractError("envelope radius must be >= 0");
    }
    // Positive means outside; the largest coordinate excess over the radius.
    double violation(const Vec& y) const {
        return (y - center).cwiseAbs().maxCoeff() - radius;
    }
};

struct OutputBox {
    Vec lower;
    Vec upper;
};

// Layerwise interval propagation; sound elementwise output bounds.
inline OutputBox interval_bounds(const LayeredReluNetwork& net, const InputBox& box) {
    box.validate();
    if (box.lower.size() != net.input_dim)
        throw ContractError("interval_bounds: box dimension does not match the network");
    Vec lo = box.lower, hi = box.upper;
    Vec nlo, nhi;
    for (const Layer& l : net.layers) {
        l.apply_interval(lo, hi, nlo, nhi);
        lo.swap(nlo);
        hi.swap(nhi);
    }
    return {lo, hi};
}

enum class VerdictStatus { Proved, Violated, Unknown };

inline const char* to_string(VerdictStatus s) {
    switch (s) {
        case VerdictStatus::Proved: return "PROVED";
        case VerdictStatus::Violated: return "VIOLATED";
        default: return "UNKNOWN";
    }
}

struct Verdict {
    VerdictStatus status = VerdictStatus::Unknown;
    std::optional<Vec> witness; // Violated only; re-evaluates outside the envelope
    double bound_gap = 0.0;     // Unknown only; residual outside-excess of the bounds
    int splits = 0;
    double millis = 0.0;
};

namespace detail {

// Per-input-dimension output sensitivity bound: column norms of the product
// of the layers' |W|.
inline Vec sensitivity_bound(const LayeredReluNetwork& net) {
    Vec s = Vec::Ones(net.output_dim);
    for (auto it = net.layers.rbegin(); it != net.layers.rend(); ++it) {
        // Propagate s_in = |W|^T s_out; block structure keeps this cheap on
        // the perception trunk.
        const Layer& l = *it;
        Vec in = Vec::Zero(l.input_dim());
        if (l.is_dense()) {
            in = l.dense_weight().cwiseAbs().transpose() * s;
        } else {
            for (const LayerBlock& b : l.blocks())
                in.segment(b.col0, b.weight.cols()).noalias() +=
                    b.weight.cwiseAbs().transpose() * s.segment(b.row0, b.weight.rows());
        }
        s.swap(in);
    }
    return s;
}

// Local witness search: greedy coordinate moves toward the box corners that
// increase the envelope violation.
inline std::pair<Vec, double> hunt_witness(const LayeredReluNetwork& net, const InputBox& box,
                                           const ControlEnvelope& env, Rng& rng, int n_samples) {
    Vec best = box.mid();
    double best_v = env.violation(evaluate(net, best));
    for (int t = 0; t < n_samples; ++t) {
        Vec x(box.lower.size());
        for (Eigen::Index i = 0; i < x.size(); ++i)
            x(i) = rng.uniform(box.lower(i), box.upper(i));
        const double v = env.violation(evaluate(net, x));
        if (v > best_v) {
            best_v = v;
            best = x;
        }
    }
    // Coordinate sweeps toward whichever bound improves the violation.
    for (int sweep = 0; sweep < 3; ++sweep) {
        bool improved = false;
        for (Eigen::Index i = 0; i < best.size(); ++i) {
            const double saved = best(i);
            double keep = saved;
            for (double cand : {box.lower(i), box.upper(i), 0.5 * (saved + box.lower(i)),
                                0.5 * (saved + box.upper(i))}) {
                best(i) = cand;
                const double v = env.violation(evaluate(net, best));
                if (v > best_v) {
                    best_v = v;
                    keep = cand;
                    improved = true;
                }
            }
            best(i) = keep;
        }
        if (!improved) break;
    }
    return {best, best_v};
}

} // namespace detail

// Branch-and-bound over the input box: sound interval bounds per leaf,
// bisecting the highest width-times-sensitivity dimension of the worst leaf
// until the envelope is proved, a concrete counterexample is found, or the
// split budget runs out. Proved means every leaf's output bounds sit inside
// the envelope; Violated always carries a forward-evaluated witness.
inline Verdict verify_region(const LayeredReluNetwork& net, const InputBox& box,
                             const ControlEnvelope& env, int budget,
                             std::uint64_t witness_seed = 1) {
    const auto t0 = std::chrono::steady_clock::now();
    box.validate();
    env.validate();
    if (budget <= 0) throw ContractError("verify_region budget must be positive");
    if (env.center.size() != net.output_dim)
        throw ContractError("envelope dimension does not match the network output");

    Rng rng(witness_seed);
    const Vec sens = detail::sensitivity_bound(net);

    struct Leaf {
        InputBox box;
        double excess; // outside-excess of its interval bounds
        std::uint64_t seq;
    };
    struct Worst {
        bool operator()(const Leaf& a, const Leaf& b) const {
            if (a.excess != b.excess) return a.excess < b.excess;
            return a.seq > b.seq; // deterministic tie-break: older first
        }
    };

    auto excess_of = [&](const InputBox& b) {
        const OutputBox out = interval_bounds(net, b);
        double e = 0.0;
        for (Eigen::Index i = 0; i < out.lower.size(); ++i) {
            e = std::max(e, out.upper(i) - (env.center(i) + env.radius));
            e = std::max(e, (env.center(i) - env.radius) - out.lower(i));
        }
        return e;
    };

    Verdict verdict;
    std::priority_queue<Leaf, std::vector<Leaf>, Worst> open;
    std::uint64_t seq = 0;
    {
        const double e = excess_of(box);
        if (e <= 0.0) {
            verdict.status = VerdictStatus::Proved;
            verdict.millis = std::chrono::duration<double, std::milli>(
                                 std::chrono::steady_clock::now() - t0)
                                 .count();
            return verdict;
        }
        open.push({box, e, seq++});
    }

    int splits = 0;
    while (!open.empty()) {
        const Leaf leaf = open.top();

        // Periodically try to settle the region with a concrete point outside
        // the envelope; hunting on every split would dominate the runtime.
        if (splits == 0 || splits % 32 == 0 || splits >= budget) {
            auto [cand, cand_v] = detail::hunt_witness(net, leaf.box, env, rng,
                                                       splits == 0 ? 64 : 16);
            if (cand_v > 1e-9) {
                verdict.status = VerdictStatus::Violated;
                verdict.witness = cand;
                verdict.splits = splits;
                verdict.millis = std::chrono::duration<double, std::milli>(
                                     std::chrono::steady_clock::now() - t0)
                                     .count();
                return verdict;
            }
        }
        if (splits >= budget) break;
        open.pop();

        // Bisect the dimension with the largest width-times-sensitivity.
        Eigen::Index dim = 0;
        double score = -1.0;
        for (Eigen::Index i = 0; i < leaf.box.lower.size(); ++i) {
            const double w = (leaf.box.upper(i) - leaf.box.lower(i)) * sens(i);
            if (w > score) {
                score = w;
                dim = i;
            }
        }
        if (!(score > 0.0)) break; // degenerate box that still exceeds: give up
        const double mid = 0.5 * (leaf.box.lower(dim) + leaf.box.upper(dim));
        for (int half = 0; half < 2; ++half) {
            InputBox child = leaf.box;
            (half == 0 ? child.upper(dim) : child.lower(dim)) = mid;
            const double e = excess_of(child);
            if (e > 0.0) open.push({std::move(child), e, seq++});
        }
        ++splits;
    }

    verdict.splits = splits;
    if (open.empty()) {
        verdict.status = VerdictStatus::Proved;
    } else {
        verdict.status = VerdictStatus::Unknown;
        verdict.bound_gap = open.top().excess;
    }
    verdict.millis =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return verdict;
}

// Lifts a grid cell to the full network input box: the working coordinates
// are the cell box itself; the dependent coordinates (z4, z5 and the second
// line's block) get outward-rounded interval enclosures reconstructed through
// the inverse and forward coordinate maps.
inline InputBox region_to_input_box(const PartitionSpec& pspec, int region_id, const Scenario& sc) {
    const Eigen::Vector3d lo = pspec.box_lower(region_id);
    const Eigen::Vector3d hi = pspec.box_upper(region_id);
    const double cw = sc.camera.rho_w() * sc.camera.f;
    const double ch = sc.camera.rho_h() * sc.camera.f;
    const Interval u0 = Interval::point(sc.camera.u0());
    const Interval v0 = Interval::point(sc.camera.v0());

    const Interval z1(lo[0], hi[0]), z2(lo[1], hi[1]), z3(lo[2], hi[2]);
    const Interval numL = Interval::point(cw * (sc.runway.Lx + sc.x_offset));
    // Inverse map on the cell: start/end depths and the pitch trigonometry.
    const Interval a = numL / (z1 - u0); // throws when the cell straddles the center column
    const Interval b = numL / (z3 - u0);
    if (a.lo <= 0.0 || b.lo <= 0.0)
        throw DegenerateInverseError("cell reconstructs a nonpositive depth");
    Interval cos_theta = (b - a) * Interval::point(1.0 / sc.runway.length);
    cos_theta = intersect(cos_theta, Interval(1e-12, 1.0));
    Interval sin_abs = sqrt(intersect(Interval::point(1.0) - cos_theta * cos_theta,
                                      Interval(0.0, 1.0)));
    const Interval sin_theta = sc.pitch_sign < 0 ? -sin_abs : sin_abs;
    const Interval zpos = a - Interval::point(sc.runway.Lz) * cos_theta;
    const Interval y = -(z2 - v0) * a * Interval::point(1.0 / ch) -
                       Interval::point(sc.runway.Lz) * sin_theta;

    // Forward map for the dependent coordinates of line L.
    const Interval dL2 = Interval::point(sc.runway.Lz + sc.runway.length) * cos_theta + zpos;
    if (dL2.lo <= 0.0) throw DegenerateInverseError("cell reconstructs a nonpositive far depth");
    const Interval z4 =
        -(Interval::point(ch) *
          (Interval::point(sc.runway.Lz + sc.runway.length) * sin_theta + y) / dL2) +
        v0;
    const Interval z5 = z1 * z4 - z2 * z3;

    std::vector<Interval> comps{z1, z2, z3, z4, z5};
    if (sc.lines == 2) {
        const Interval numR = Interval::point(cw * (sc.runway.Rx() + sc.x_offset));
        const Interval dR1 = Interval::point(sc.runway.Rz()) * cos_theta + zpos;
        const Interval dR2 =
            Interval::point(sc.runway.Rz() + sc.runway.length) * cos_theta + zpos;
        if (dR1.lo <= 0.0 || dR2.lo <= 0.0)
            throw DegenerateInverseError("cell reconstructs a nonpositive depth on line R");
        const Interval r1 = numR / dR1 + u0;
        const Interval r2 =
            -(Interval::point(ch) * (Interval::point(sc.runway.Rz()) * sin_theta + y) / dR1) + v0;
        const Interval r3 = numR / dR2 + u0;
        const Interval r4 =
            -(Interval::point(ch) *
              (Interval::point(sc.runway.Rz() + sc.runway.length) * sin_theta + y) / dR2) +
            v0;
        const Interval r5 = r1 * r4 - r2 * r3;
        comps.insert(comps.end(), {r1, r2, r3, r4, r5});
    }

    InputBox box;
    box.lower.resize(static_cast<Eigen::Index>(comps.size()));
    box.upper.resize(static_cast<Eigen::Index>(comps.size()));
    for (std::size_t i = 0; i < comps.size(); ++i) {
        box.lower(static_cast<Eigen::Index>(i)) = comps[i].lo;
        box.upper(static_cast<Eigen::Index>(i)) = comps[i].hi;
    }
    box.validate();
    return box;
}

struct RegionReport {
    int region_id = 0;
    Eigen::Vector3d center;
    Verdict verdict;
    bool unverifiable = false; // box reconstruction failed
};

enum class AggregateStatus { Safe, UnsafeEnvelope, Unknown };

inline const char* to_string(AggregateStatus s) {
    switch (s) {
        case AggregateStatus::Safe: return "SAFE";
        case AggregateStatus::UnsafeEnvelope: return "UNSAFE-ENVELOPE";
        default: return "UNKNOWN";
    }
}

struct BatchVerifyResult {
    std::vector<RegionReport> reports;
    AggregateStatus aggregate = AggregateStatus::Safe;
    std::optional<int> first_violated_region;
};

// Independent per-region verification of the control-deviation property: over
// each region's input box, the network output must stay within mu_max of its
// value at the cell center. A violated envelope refutes the abstraction's
// premise for that region, not system-level safety.
inline BatchVerifyResult batch_verify(const LayeredReluNetwork& nn_aug, const PartitionSpec& pspec,
                                      const std::vector<int>& region_ids, const Scenario& sc,
                                      double mu_max, int budget, std::uint64_t seed = 1) {
    BatchVerifyResult out;
    bool any_unknown = false;
    for (int id : region_ids) {
        RegionReport rep;
        rep.region_id = id;
        rep.center = pspec.center(id);
        const auto st = sc.state_from_triplet(rep.center);
        if (!st) {
            rep.unverifiable = true;
            any_unknown = true;
            out.reports.push_back(std::move(rep));
            continue;
        }
        try {
            const InputBox box = region_to_input_box(pspec, id, sc);
            ControlEnvelope env;
            env.center = evaluate(nn_aug, sc.nn_input(*st));
            env.radius = mu_max;
            rep.verdict = verify_region(nn_aug, box, env, budget,
                                        derived_rng(seed, static_cast<std::uint64_t>(id))
                                            .next_u64());
        } catch (const std::runtime_error&) {
            rep.unverifiable = true;
        }
        if (rep.unverifiable || rep.verdict.status == VerdictStatus::Unknown) any_unknown = true;
        if (rep.verdict.status == VerdictStatus::Violated && !out.first_violated_region)
            out.first_violated_region = id;
        out.reports.push_back(std::move(rep));
    }
    if (out.first_violated_region)
        out.aggregate = AggregateStatus::UnsafeEnvelope;
    else if (any_unknown)
        out.aggregate = AggregateStatus::Unknown;
    else
        out.aggregate = AggregateStatus::Safe;
    return out;
}

// Declarative per-region property text: input bounds and the output envelope
// as disjoint assertions, one file per region.
inline std::string region_property_text(int region_id, const InputBox& box,
                                        const ControlEnvelope& env) {
    std::ostringstream out;
    out.precision(17);
    out << "; control-envelope robustness query for region " << region_id << "\n";
    for (Eigen::Index i = 0; i < box.lower.size(); ++i) {
        out << "(declare-const X_" << i << " Real)\n";
    }
    for (Eigen::Index i = 0; i < env.center.size(); ++i)
        out << "(declare-const Y_" << i << " Real)\n";
    for (Eigen::Index i = 0; i < box.lower.size(); ++i) {
        out << "(assert (>= X_" << i << ' ' << box.lower(i) << "))\n";
        out << "(assert (<= X_" << i << ' ' << box.upper(i) << "))\n";
    }
    out << "; satisfiable iff some input drives an output out of the envelope\n";
    out << "(assert (or";
    for (Eigen::Index i = 0; i < env.center.size(); ++i) {
        out << " (<= Y_" << i << ' ' << env.center(i) - env.radius << ")";
        out << " (>= Y_" << i << ' ' << env.center(i) + env.radius << ")";
    }
    out << "))\n";
    return out.str();
}

} // namespace landver
