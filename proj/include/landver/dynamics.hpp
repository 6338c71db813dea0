#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "landver/errors.hpp"
#include "landver/geometry.hpp"
#include "landver/raster.hpp"
#include "landver/relu_network.hpp"
#include "landver/zeta.hpp"

namespace landver {

// Guidance kinematics: constant ground speed, course locked on the runway,
// pitch rate as the single control input, sampled at a fixed period.
struct DynamicsParams {
    double Vg = 25.0; // m/s
    double tau = 0.1; // s

    void validate() const {
        if (!(Vg > 0.0) || !(tau > 0.0))
            throw ConfigError("dynamics parameters must be positive");
    }
};

// One sampled-data step. The along/vertical advance uses the pre-update pitch;
// the lateral position never changes in this scenario.
inline AircraftState step(const AircraftState& s, double u, const DynamicsParams& p) {
    AircraftState n;
    n.x = s.x;
    n.z = s.z + p.Vg * p.tau * std::cos(s.theta);
    n.y = s.y + p.Vg * p.tau * std::sin(s.theta);
    n.theta = s.theta + u * p.tau;
    return n;
}

// Trajectory-divergence bound evaluators derived from the squared-distance
// Lyapunov certificate of the kinematics: beta bounds the growth of an
// initial-state mismatch (given as a per-dimension radius vector), gamma the
// effect of an input mismatch. Both are class-K-infinity in their first
// argument. The fields are function-valued so alternative certificates can be
// plugged in.
struct DeltaFcBounds {
    std::function<double(const Eigen::Vector3d&, double)> beta;
    std::function<double(double, double)> gamma;

    static DeltaFcBounds for_dynamics(const DynamicsParams& p) {
        DeltaFcBounds b;
        b.beta = [](const Eigen::Vector3d& radius_per_dim, double tau) {
            return std::sqrt(8.0) * radius_per_dim.norm() * std::exp(tau);
        };
        b.gamma = [Vg = p.Vg](double mu, double tau) {
            return std::sqrt(Vg * (std::exp(2.0 * tau) - 1.0)) * mu;
        };
        return b;
    }
};

// Network input for the current pose: concatenated zeta vectors of the
// rendered runway lines.
inline Vec zeta_input_vector(const AircraftState& s, const RunwaySpec& rw,
                             const CameraIntrinsics& cam, int lines) {
    Vec x(5 * lines);
    x.segment(0, 5) = state_to_zeta(s, rw, cam, RunwayLine::L).as_vector();
    if (lines == 2) x.segment(5, 5) = state_to_zeta(s, rw, cam, RunwayLine::R).as_vector();
    return x;
}

// One closed-loop step expressed on the pixel-plane coordinates: invert the
// coordinate change, apply the network control, step the kinematics, and map
// back. Geometry failures propagate.
inline ZetaCoords closed_loop_successor_zeta(const ZetaCoords& zl, const LayeredReluNetwork& nn_aug,
                                             const RunwaySpec& rw, const CameraIntrinsics& cam,
                                             const DynamicsParams& params) {
    const AircraftState s = zeta_to_state(zl, rw, cam, RunwayLine::L);
    const int lines = nn_aug.input_dim == 10 ? 2 : 1;
    const Vec u = evaluate(nn_aug, zeta_input_vector(s, rw, cam, lines));
    const AircraftState next = step(s, u(0), params);
    return state_to_zeta(next, rw, cam, RunwayLine::L);
}

struct TraceRecord {
    int step_index = 0;
    AircraftState state;
    double u = 0.0;
    MonoImage image;
};

struct Trajectory {
    std::vector<TraceRecord> records;
    bool completed = true;        // false if geometry failed mid-run
    std::string termination;      // reason code when not completed
};

// Closed-loop rollout through the full pipeline: render, control, step. Emits
// one record per visited state, including the initial one.
inline Trajectory simulate_trajectory(const AircraftState& s0, const LayeredReluNetwork& nn_aug,
                                      int steps, const RunwaySpec& rw, const CameraIntrinsics& cam,
                                      const DynamicsParams& params, int lines,
                                      bool keep_images = true) {
    if (steps < 0) throw ContractError("simulate_trajectory: steps must be >= 0");
    Trajectory out;
    AircraftState s = s0;
    for (int t = 0; t <= steps; ++t) {
        TraceRecord rec;
        rec.step_index = t;
        rec.state = s;
        try {
            if (keep_images) rec.image = render_image_oracle(s, rw, cam, lines).image;
            const Vec u = evaluate(nn_aug, zeta_input_vector(s, rw, cam, lines));
            rec.u = u(0);
        } catch (const BehindCameraError&) {
            out.completed = false;
            out.termination = "behind-camera";
            return out;
        } catch (const NonPositiveDepthError&) {
            out.completed = false;
            out.termination = "non-positive-depth";
            return out;
        }
        out.records.push_back(std::move(rec));
        if (t < steps) s = step(s, out.records.back().u, params);
    }
    return out;
}

} // namespace landver
