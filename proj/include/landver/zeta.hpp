#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>

#include "landver/errors.hpp"
#include "landver/geometry.hpp"

namespace landver {

// Pixel-plane image of one runway line under the coordinate change: raw
// projections of the line's start (z1,z2) and end (z3,z4), plus the dependent
// cross term z5 = z1*z4 - z2*z3 that keeps the downstream edge tests affine.
struct ZetaCoords {
    double z1 = 0.0, z2 = 0.0, z3 = 0.0, z4 = 0.0, z5 = 0.0;

    Eigen::Matrix<double, 5, 1> as_vector() const {
        Eigen::Matrix<double, 5, 1> v;
        v << z1, z2, z3, z4, z5;
        return v;
    }
    static ZetaCoords from_vector(const Eigen::Matrix<double, 5, 1>& v) {
        return {v[0], v[1], v[2], v[3], v[4]};
    }
};

namespace detail {
inline void line_offsets(const RunwaySpec& rw, RunwayLine line, double& x_off, double& z_off) {
    x_off = line == RunwayLine::L ? rw.Lx : rw.Rx();
    z_off = line == RunwayLine::L ? rw.Lz : rw.Rz();
}
} // namespace detail

inline ZetaCoords state_to_zeta(const AircraftState& s, const RunwaySpec& rw,
                                const CameraIntrinsics& cam, RunwayLine line = RunwayLine::L) {
    double x_off, z_off;
    detail::line_offsets(rw, line, x_off, z_off);
    const double c = std::cos(s.theta);
    const double sn = std::sin(s.theta);
    const double d1 = z_off * c + s.z;
    const double d2 = (z_off + rw.length) * c + s.z;
    if (!(d1 > 0.0) || !(d2 > 0.0))
        throw NonPositiveDepthError("runway line endpoint depth not positive");
    const double cw = cam.rho_w() * cam.f;
    const double ch = cam.rho_h() * cam.f;
    ZetaCoords zc;
    zc.z1 = cw * (x_off + s.x) / d1 + cam.u0();
    zc.z2 = -ch * (z_off * sn + s.y) / d1 + cam.v0();
    zc.z3 = cw * (x_off + s.x) / d2 + cam.u0();
    zc.z4 = -ch * ((z_off + rw.length) * sn + s.y) / d2 + cam.v0();
    zc.z5 = zc.z1 * zc.z4 - zc.z2 * zc.z3;
    return zc;
}

// Closed-form inverse of the coordinate change. Recovers pitch from the
// cross-ratio of the four projections, then the two endpoint depths, then the
// full pose. Singular when the line projects to a point (z1 == z3).
inline AircraftState zeta_to_state(const ZetaCoords& zc, const RunwaySpec& rw,
                                   const CameraIntrinsics& cam, RunwayLine line = RunwayLine::L) {
    double x_off, z_off;
    detail::line_offsets(rw, line, x_off, z_off);
    const double cw = cam.rho_w() * cam.f;
    const double ch = cam.rho_h() * cam.f;
    const double du = zc.z1 - zc.z3;
    const double scale = std::max({std::abs(zc.z1), std::abs(zc.z3), 1.0});
    if (std::abs(du) <= 1e-14 * scale)
        throw DegenerateInverseError("line projects to a point (z1 == z3)");

    const double tan_theta =
        ((zc.z2 - cam.v0()) * (zc.z3 - cam.u0()) - (zc.z4 - cam.v0()) * (zc.z1 - cam.u0())) /
        (ch * du);
    const double theta = std::atan(tan_theta);
    const double c = std::cos(theta);
    const double sn = std::sin(theta);

    const double b = rw.length * c * (zc.z1 - cam.u0()) / du; // depth of line end
    const double a = rw.length * c * (zc.z3 - cam.u0()) / du; // depth of line start
    if (!(a > 0.0) || !(b > 0.0))
        throw DegenerateInverseError("recovered depth not positive");

    AircraftState s;
    s.theta = theta;
    s.z = a - z_off * c;
    s.x = (zc.z1 - cam.u0()) * a / cw - x_off;
    s.y = -(zc.z2 - cam.v0()) * a / ch - z_off * sn;
    return s;
}

// First three coordinates of the line-L image; the working coordinates of the
// finite abstraction.
inline Eigen::Vector3d working_triplet(const AircraftState& s, const RunwaySpec& rw,
                                       const CameraIntrinsics& cam) {
    const ZetaCoords zc = state_to_zeta(s, rw, cam, RunwayLine::L);
    return {zc.z1, zc.z2, zc.z3};
}

// Reconstructs a pose from the working triplet alone. The lateral offset is
// fixed by the scenario, and (z1,z2,z3) are even in the pitch angle when the
// line starts at z_off = 0, so the pitch sign is supplied externally.
inline std::optional<AircraftState> zeta123_to_state(const Eigen::Vector3d& zeta3,
                                                     const RunwaySpec& rw,
                                                     const CameraIntrinsics& cam, double x_fixed,
                                                     int pitch_sign,
                                                     RunwayLine line = RunwayLine::L) {
    double x_off, z_off;
    detail::line_offsets(rw, line, x_off, z_off);
    const double cw = cam.rho_w() * cam.f;
    const double ch = cam.rho_h() * cam.f;
    const double num = cw * (x_off + x_fixed);
    const double e1 = zeta3[0] - cam.u0();
    const double e3 = zeta3[2] - cam.u0();
    if (num == 0.0 || e1 == 0.0 || e3 == 0.0) return std::nullopt;
    const double a = num / e1;
    const double b = num / e3;
    if (!(a > 0.0) || !(b > 0.0)) return std::nullopt;
    double cos_theta = (b - a) / rw.length;
    if (!(cos_theta > 0.0) || cos_theta > 1.0 + 1e-12) return std::nullopt;
    cos_theta = std::min(cos_theta, 1.0);
    const double theta = (pitch_sign < 0 ? -1.0 : 1.0) * std::acos(cos_theta);
    const double sin_theta = std::sin(theta);

    AircraftState s;
    s.theta = theta;
    s.x = x_fixed;
    s.z = a - z_off * cos_theta;
    s.y = -(zeta3[1] - cam.v0()) * a / ch - z_off * sin_theta;
    if (!(s.z > 0.0)) return std::nullopt;
    return s;
}

} // namespace landver
