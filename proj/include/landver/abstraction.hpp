#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "landver/dynamics.hpp"
#include "landver/interval.hpp"
#include "landver/partition.hpp"
#include "landver/scenario.hpp"

namespace landver {

enum class RegionLabel : std::uint8_t { Normal, Unsafe, Sink };

inline const char* to_string(RegionLabel l) {
    switch (l) {
        case RegionLabel::Normal: return "normal";
        case RegionLabel::Unsafe: return "unsafe";
        default: return "sink";
    }
}

// Finite-state abstraction over the partition cells plus one absorbing sink
// state that stands for everything outside the modeled chart.
struct Fsm {
    std::uint32_t num_regions = 0;
    std::vector<std::vector<std::uint32_t>> succ; // size num_regions + 1, sorted
    std::vector<RegionLabel> labels;              // size num_regions + 1

    std::uint32_t sink() const { return num_regions; }
    std::uint32_t num_states() const { return num_regions + 1; }

    void validate() const {
        if (succ.size() != num_states() || labels.size() != num_states())
            throw ValidationError("fsm arrays do not match the state count");
        for (std::uint32_t s = 0; s < num_states(); ++s) {
            if (succ[s].empty())
                throw ValidationError("state " + std::to_string(s) + " has no successor");
            if (!std::is_sorted(succ[s].begin(), succ[s].end()))
                throw ValidationError("successor set not sorted");
            for (std::uint32_t d : succ[s])
                if (d >= num_states()) throw ValidationError("successor out of range");
        }
        if (labels[sink()] != RegionLabel::Sink)
            throw ValidationError("sink state must carry the sink label");
        if (!std::binary_search(succ[sink()].begin(), succ[sink()].end(), sink()))
            throw ValidationError("sink must self-loop");
    }

    std::size_t transition_count() const {
        std::size_t n = 0;
        for (const auto& s : succ) n += s.size();
        return n;
    }

    bool operator==(const Fsm&) const = default;
};

// Inflation radius covering every concrete one-step trajectory that starts
// inside a cell of the given half-width under controls within mu of the
// cell-center control.
inline double delta_zeta(double epsilon, double mu, double tau, const DeltaFcBounds& bounds) {
    return bounds.beta(Eigen::Vector3d(epsilon, epsilon, epsilon), tau) + bounds.gamma(mu, tau);
}

struct FsmBuildResult {
    Fsm fsm;
    std::vector<std::uint8_t> traversable; // per region
    std::vector<double> center_control;    // per region; 0 when untraversable
    double inflation = 0.0;                // beta + gamma + eta actually used
    int untraversable_count = 0;
};

namespace detail {

// Conservative guard for successor chart escape: bounds the next-step pitch
// over the whole cell and control range and checks the projection
// denominators stay positive. Returns true when escape cannot be ruled out.
inline bool successor_may_escape_chart(const PartitionSpec& pspec, int region_id,
                                       const Scenario& sc, double u_center, double mu) {
    const Eigen::Vector3d lo = pspec.box_lower(region_id);
    const Eigen::Vector3d hi = pspec.box_upper(region_id);
    const double cw = sc.camera.rho_w() * sc.camera.f;
    const double num = cw * (sc.runway.Lx + sc.x_offset);
    try {
        const Interval e1 = Interval(lo[0], hi[0]) - Interval::point(sc.camera.u0());
        const Interval e3 = Interval(lo[2], hi[2]) - Interval::point(sc.camera.u0());
        const Interval a = Interval::point(num) / e1;
        const Interval b = Interval::point(num) / e3;
        if (a.lo <= 0.0 || b.lo <= 0.0) return true;
        const Interval cos_theta =
            intersect((b - a) * Interval::point(1.0 / sc.runway.length), Interval(-1.0, 1.0));
        if (cos_theta.hi <= 0.0) return true;
        const double cos_lo = std::max(cos_theta.lo, -1.0);
        const double theta_absmax = std::acos(std::clamp(cos_lo, -1.0, 1.0));
        const double theta_next_max =
            theta_absmax + sc.dynamics.tau * (std::abs(u_center) + mu);
        if (theta_next_max < M_PI / 2) return false;
        // Past vertical pitch the far-end depth may go nonpositive.
        const double cos_next_min = std::cos(std::min(theta_next_max, M_PI));
        const double z_lo = a.lo - sc.runway.Lz; // z = a - Lz cos, cos <= 1
        const double d2_min = (sc.runway.Lz + sc.runway.length) * cos_next_min + z_lo;
        const double d1_min = std::min(sc.runway.Lz * cos_next_min, sc.runway.Lz) + z_lo;
        return d2_min <= 0.0 || d1_min <= 0.0;
    } catch (const std::runtime_error&) {
        return true;
    }
}

} // namespace detail

// Transition construction: a cell's successors are every cell whose closed box
// meets the infinity-norm ball of radius beta+gamma+eta around the nominal
// successor of the cell center. Cells whose center does not reconstruct to a
// chart-valid pose route to the sink; the sink also joins whenever the ball
// leaves the partition or the one-step pitch range cannot be kept inside the
// projectable chart.
inline FsmBuildResult build_fsm(const PartitionSpec& pspec, const Scenario& sc,
                                const LayeredReluNetwork& nn_aug, double mu,
                                const std::optional<DeltaFcBounds>& bounds_override = {},
                                const std::optional<double>& eta_override = {}) {
    pspec.validate();
    sc.validate();
    if (mu < 0.0) throw ContractError("mu must be >= 0");

    const int P = pspec.total();
    FsmBuildResult out;
    out.fsm.num_regions = static_cast<std::uint32_t>(P);
    out.fsm.succ.assign(static_cast<std::size_t>(P) + 1, {});
    out.fsm.labels.assign(static_cast<std::size_t>(P) + 1, RegionLabel::Normal);
    out.fsm.labels.back() = RegionLabel::Sink;
    out.traversable.assign(static_cast<std::size_t>(P), 0);
    out.center_control.assign(static_cast<std::size_t>(P), 0.0);

    const DeltaFcBounds bounds = bounds_override ? *bounds_override : sc.bounds();
    // Grid-quantization slack; the cell radius by default.
    const double eta = eta_override ? *eta_override : pspec.max_radius();
    out.inflation = bounds.beta(pspec.radius_vector(), sc.dynamics.tau) +
                    bounds.gamma(mu, sc.dynamics.tau) + eta;

    const std::uint32_t sink = out.fsm.sink();
    for (int id = 0; id < P; ++id) {
        auto& succ = out.fsm.succ[static_cast<std::size_t>(id)];
        const auto st = sc.state_from_triplet(pspec.center(id));
        if (!st) {
            succ.push_back(sink);
            ++out.untraversable_count;
            continue;
        }
        Eigen::Vector3d nominal;
        double u_c = 0.0;
        try {
            u_c = evaluate(nn_aug, sc.nn_input(*st))(0);
            nominal = sc.triplet(step(*st, u_c, sc.dynamics));
        } catch (const std::runtime_error&) {
            succ.push_back(sink);
            ++out.untraversable_count;
            continue;
        }
        out.traversable[static_cast<std::size_t>(id)] = 1;
        out.center_control[static_cast<std::size_t>(id)] = u_c;

        const Eigen::Vector3d lo = nominal.array() - out.inflation;
        const Eigen::Vector3d hi = nominal.array() + out.inflation;
        const auto cov = pspec.cover(lo, hi);
        bool add_sink = cov.leaks_outside;
        if (!cov.empty) {
            for (int i0 = cov.lo_idx[0]; i0 <= cov.hi_idx[0]; ++i0)
                for (int i1 = cov.lo_idx[1]; i1 <= cov.hi_idx[1]; ++i1)
                    for (int i2 = cov.lo_idx[2]; i2 <= cov.hi_idx[2]; ++i2)
                        succ.push_back(static_cast<std::uint32_t>(pspec.id_of(i0, i1, i2)));
        }
        if (detail::successor_may_escape_chart(pspec, id, sc, u_c, mu)) add_sink = true;
        if (add_sink) succ.push_back(sink);
    }
    out.fsm.succ[sink].push_back(sink);
    out.fsm.validate();
    return out;
}

inline void apply_labels(Fsm& fsm, const std::vector<std::uint32_t>& unsafe_ids,
                         bool sink_is_unsafe) {
    for (std::uint32_t id : unsafe_ids) {
        if (id >= fsm.num_regions) throw ContractError("unsafe region id out of range");
        fsm.labels[id] = RegionLabel::Unsafe;
    }
    // The sink keeps its label; callers fold sink_is_unsafe into the unsafe
    // state set they hand to the checker.
    (void)sink_is_unsafe;
}

// Axis-aligned box of poses, used to express unsafe neighbourhoods.
struct StateBox {
    Interval z;
    Interval y;
    Interval theta;
};

// Image of a pose box under the working-coordinate map, outward rounded.
inline std::array<Interval, 3> triplet_enclosure(const StateBox& box, const Scenario& sc) {
    const double cw = sc.camera.rho_w() * sc.camera.f;
    const double ch = sc.camera.rho_h() * sc.camera.f;
    const Interval c = cos_pitch(box.theta);
    const Interval sn = sin_pitch(box.theta);
    const Interval d1 = Interval::point(sc.runway.Lz) * c + box.z;
    const Interval d2 = Interval::point(sc.runway.Lz + sc.runway.length) * c + box.z;
    if (d1.lo <= 0.0 || d2.lo <= 0.0)
        throw NonPositiveDepthError("pose box reaches nonpositive projection depth");
    const Interval num = Interval::point(cw * (sc.runway.Lx + sc.x_offset));
    const Interval z1 = num / d1 + Interval::point(sc.camera.u0());
    const Interval z2 = -(Interval::point(ch) * (Interval::point(sc.runway.Lz) * sn + box.y) / d1) +
                        Interval::point(sc.camera.v0());
    const Interval z3 = num / d2 + Interval::point(sc.camera.u0());
    return {z1, z2, z3};
}

// Cells whose closed boxes meet the enclosure of the pose box.
inline std::vector<std::uint32_t> cells_meeting_state_box(const PartitionSpec& pspec,
                                                          const Scenario& sc,
                                                          const StateBox& box) {
    const auto enc = triplet_enclosure(box, sc);
    const Eigen::Vector3d lo(enc[0].lo, enc[1].lo, enc[2].lo);
    const Eigen::Vector3d hi(enc[0].hi, enc[1].hi, enc[2].hi);
    const auto cov = pspec.cover(lo, hi);
    std::vector<std::uint32_t> out;
    if (cov.empty) return out;
    for (int i0 = cov.lo_idx[0]; i0 <= cov.hi_idx[0]; ++i0)
        for (int i1 = cov.lo_idx[1]; i1 <= cov.hi_idx[1]; ++i1)
            for (int i2 = cov.lo_idx[2]; i2 <= cov.hi_idx[2]; ++i2)
                out.push_back(static_cast<std::uint32_t>(pspec.id_of(i0, i1, i2)));
    return out;
}

// Cells whose closed boxes meet an explicit box in the working coordinates.
inline std::vector<std::uint32_t> cells_meeting_zeta_box(const PartitionSpec& pspec,
                                                         const Eigen::Vector3d& lo,
                                                         const Eigen::Vector3d& hi) {
    const auto cov = pspec.cover(lo, hi);
    std::vector<std::uint32_t> out;
    if (cov.empty) return out;
    for (int i0 = cov.lo_idx[0]; i0 <= cov.hi_idx[0]; ++i0)
        for (int i1 = cov.lo_idx[1]; i1 <= cov.hi_idx[1]; ++i1)
            for (int i2 = cov.lo_idx[2]; i2 <= cov.hi_idx[2]; ++i2)
                out.push_back(static_cast<std::uint32_t>(pspec.id_of(i0, i1, i2)));
    return out;
}

struct MonotonicityReport {
    bool is_subset = true;
    std::uint32_t witness_state = 0;
};

// Checks that every successor set of the first machine is contained in the
// corresponding set of the second (built at a larger mu).
inline MonotonicityReport transition_monotonicity_check(const Fsm& small_mu, const Fsm& large_mu) {
    MonotonicityReport rep;
    if (small_mu.num_states() != large_mu.num_states())
        throw ContractError("monotonicity check wants machines over the same partition");
    for (std::uint32_t s = 0; s < small_mu.num_states(); ++s) {
        if (!std::includes(large_mu.succ[s].begin(), large_mu.succ[s].end(),
                           small_mu.succ[s].begin(), small_mu.succ[s].end())) {
            rep.is_subset = false;
            rep.witness_state = s;
            return rep;
        }
    }
    return rep;
}

// Text format: "<state>: succ succ ..." lines plus one labels line.
inline void save_fsm(const Fsm& fsm, std::ostream& out) {
    fsm.validate();
    out << "landver-fsm 1\n";
    out << "states " << fsm.num_states() << "\n";
    out << "sink " << fsm.sink() << "\n";
    for (std::uint32_t s = 0; s < fsm.num_states(); ++s) {
        out << s << ':';
        for (std::uint32_t d : fsm.succ[s]) out << ' ' << d;
        out << "\n";
    }
    out << "labels:";
    for (std::uint32_t s = 0; s < fsm.num_states(); ++s) out << ' ' << to_string(fsm.labels[s]);
    out << "\n";
}

inline void save_fsm(const Fsm& fsm, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot open '" + path + "' for writing");
    save_fsm(fsm, f);
}

inline Fsm load_fsm(std::istream& in) {
    std::string line;
    int line_no = 0;
    auto next_line = [&]() {
        if (!std::getline(in, line)) throw ParseError(line_no + 1, "unexpected end of fsm file");
        ++line_no;
    };
    next_line();
    if (line != "landver-fsm 1") throw ParseError(line_no, "bad fsm header");
    next_line();
    std::uint32_t n_states = 0;
    if (std::sscanf(line.c_str(), "states %u", &n_states) != 1 || n_states < 1)
        throw ParseError(line_no, "bad states line");
    next_line();
    std::uint32_t sink = 0;
    if (std::sscanf(line.c_str(), "sink %u", &sink) != 1 || sink != n_states - 1)
        throw ParseError(line_no, "bad sink line");

    Fsm fsm;
    fsm.num_regions = n_states - 1;
    fsm.succ.assign(n_states, {});
    fsm.labels.assign(n_states, RegionLabel::Normal);
    for (std::uint32_t s = 0; s < n_states; ++s) {
        next_line();
        std::istringstream ss(line);
        std::string head;
        ss >> head;
        if (head != std::to_string(s) + ":") throw ParseError(line_no, "bad adjacency line");
        std::uint32_t d;
        while (ss >> d) {
            if (d >= n_states) throw ParseError(line_no, "successor out of range");
            fsm.succ[s].push_back(d);
        }
    }
    next_line();
    std::istringstream ss(line);
    std::string head;
    ss >> head;
    if (head != "labels:") throw ParseError(line_no, "bad labels line");
    for (std::uint32_t s = 0; s < n_states; ++s) {
        std::string tok;
        if (!(ss >> tok)) throw ParseError(line_no, "missing label");
        if (tok == "normal")
            fsm.labels[s] = RegionLabel::Normal;
        else if (tok == "unsafe")
            fsm.labels[s] = RegionLabel::Unsafe;
        else if (tok == "sink")
            fsm.labels[s] = RegionLabel::Sink;
        else
            throw ParseError(line_no, "unknown label '" + tok + "'");
    }
    fsm.validate();
    return fsm;
}

inline Fsm load_fsm(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open '" + path + "' for reading");
    return load_fsm(f);
}

} // namespace landver
