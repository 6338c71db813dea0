#pragma once

#include <cmath>
#include <optional>

#include "landver/dynamics.hpp"
#include "landver/geometry.hpp"
#include "landver/rng.hpp"
#include "landver/zeta.hpp"

namespace landver {

// Poses the toolkit treats as chart-valid: pitch bounded away from +-pi/2 and
// position inside a sane box. Reconstructions landing outside are rejected.
struct ValidityBox {
    double theta_abs_max = 1.35;
    double z_min = 1.0;
    double z_max = 50000.0;
    double y_min = -10.0;
    double y_max = 50000.0;

    bool contains(const AircraftState& s) const {
        return std::abs(s.theta) <= theta_abs_max && s.z >= z_min && s.z <= z_max &&
               s.y >= y_min && s.y <= y_max;
    }
};

// Ranges used when drawing random in-domain poses for testing and training.
struct SamplingDomain {
    double z_lo = 300.0;
    double z_hi = 2500.0;
    double ratio_lo = 0.05; // y/z
    double ratio_hi = 1.8;
    double theta_lo = -0.6;
    double theta_hi = 0.6;
};

struct Scenario {
    RunwaySpec runway;
    CameraIntrinsics camera;
    DynamicsParams dynamics;
    double x_offset = 0.0; // fixed lateral position of the aircraft
    int pitch_sign = -1;   // sign assumed when reconstructing pitch from cells
    int lines = 2;
    ValidityBox validity;
    SamplingDomain sampling;

    void validate() const {
        runway.validate();
        camera.validate();
        dynamics.validate();
        if (lines != 1 && lines != 2) throw ConfigError("scenario lines must be 1 or 2");
        if (pitch_sign != 1 && pitch_sign != -1)
            throw ConfigError("pitch_sign must be +1 or -1");
        if (runway.Lx + x_offset == 0.0)
            throw ConfigError("aircraft laterally aligned with line L start; "
                              "the working coordinates degenerate");
    }

    DeltaFcBounds bounds() const { return DeltaFcBounds::for_dynamics(dynamics); }

    Vec nn_input(const AircraftState& s) const {
        return zeta_input_vector(s, runway, camera, lines);
    }

    Eigen::Vector3d triplet(const AircraftState& s) const {
        return working_triplet(s, runway, camera);
    }

    std::optional<AircraftState> state_from_triplet(const Eigen::Vector3d& t) const {
        auto s = zeta123_to_state(t, runway, camera, x_offset, pitch_sign);
        if (s && !validity.contains(*s)) return std::nullopt;
        return s;
    }

    // True when the full zeta vectors of all rendered lines project inside the
    // pixel frame [0, q]^2.
    bool in_frame(const AircraftState& s) const {
        const double q = camera.q();
        for (int li = 0; li < lines; ++li) {
            ZetaCoords z;
            try {
                z = state_to_zeta(s, runway, camera, li == 0 ? RunwayLine::L : RunwayLine::R);
            } catch (const NonPositiveDepthError&) {
                return false;
            }
            for (double c : {z.z1, z.z2, z.z3, z.z4})
                if (c < 0.0 || c > q) return false;
        }
        return true;
    }

    // Rejection sampling of a pose whose runway projection is fully in frame.
    AircraftState sample_in_domain(Rng& rng, int max_tries = 10000) const {
        for (int t = 0; t < max_tries; ++t) {
            AircraftState s;
            s.z = rng.uniform(sampling.z_lo, sampling.z_hi);
            s.y = s.z * rng.uniform(sampling.ratio_lo, sampling.ratio_hi);
            s.theta = rng.uniform(sampling.theta_lo, sampling.theta_hi);
            s.x = x_offset;
            if (in_frame(s) && validity.contains(s)) return s;
        }
        throw ConfigError("in-domain sampler exhausted its tries; "
                          "check camera and sampling ranges");
    }
};

// The defaults mirror the experimental setup: 40 m x 3000 m runway, 25 m/s
// ground speed at a 0.1 s sample time, and a wide-angle camera scaled so the
// working band of poses projects inside the q x q frame.
inline Scenario default_scenario(int q, int lines = 2) {
    Scenario sc;
    sc.camera.WP = q;
    sc.camera.HP = q;
    sc.lines = lines;
    sc.validate();
    return sc;
}

} // namespace landver
