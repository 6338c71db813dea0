#pragma once

#include <array>
#include <cmath>
#include <string>

#include "landver/errors.hpp"

namespace landver {

// Pose of the aircraft in the runway coordinate frame: pitch about the x axis,
// x across the runway, y altitude, z along the runway.
struct AircraftState {
    double theta = 0.0; // radians, in (-pi/2, pi/2) for supported scenarios
    double x = 0.0;     // meters
    double y = 0.0;     // meters
    double z = 0.0;     // meters
};

// Two parallel edge lines L and R. Each runs from (x_off, 0, z_off) to
// (x_off, 0, z_off + length) in the runway frame; R is L shifted by the width.
struct RunwaySpec {
    double Lx = -20.0;
    double Lz = 0.0;
    double width = 40.0;   // meters
    double length = 3000.0; // meters

    double Rx() const { return Lx + width; }
    double Rz() const { return Lz; }

    void validate() const {
        if (!(width > 0.0) || !(length > 0.0))
            throw ConfigError("runway width and length must be positive");
    }
};

enum class RunwayLine { L, R };

struct CameraIntrinsics {
    double f = 0.4;  // focal length, meters
    double W = 12.8; // sensor width, meters
    double H = 1.6;  // sensor height, meters
    int WP = 16;     // image width, pixels
    int HP = 16;     // image height, pixels

    double u0() const { return 0.5 * WP; }
    double v0() const { return 0.5 * HP; }
    double rho_w() const { return WP / W; }
    double rho_h() const { return HP / H; }
    int q() const { return WP; }

    void validate() const {
        if (!(f > 0.0) || !(W > 0.0) || !(H > 0.0) || WP <= 0 || HP <= 0)
            throw ConfigError("camera parameters must be positive");
        if (WP != HP) throw ConfigError("camera images must be square (WP == HP)");
    }
};

struct Point3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

// Runway frame -> camera frame: pitch rotation about x plus translation by the
// aircraft pose.
inline Point3 rcf_to_ccf(const Point3& p, const AircraftState& s) {
    const double c = std::cos(s.theta);
    const double sn = std::sin(s.theta);
    return {p.x + s.x, c * p.y + sn * p.z + s.y, -sn * p.y + c * p.z + s.z};
}

struct PixelProjection {
    double raw_x = 0.0; // pixel-plane coordinates before flooring
    double raw_y = 0.0;
    int px = 0; // floor of the raw coordinates
    int py = 0;
};

// Camera frame -> pixel frame through the ideal pinhole model. The point must
// be strictly in front of the camera.
inline PixelProjection project_to_pcf(const Point3& p_ccf, const CameraIntrinsics& cam) {
    if (!(p_ccf.z > 0.0))
        throw BehindCameraError("point at depth " + std::to_string(p_ccf.z) +
                                " is not in front of the camera");
    PixelProjection out;
    out.raw_x = cam.rho_w() * cam.f * p_ccf.x / p_ccf.z + cam.u0();
    out.raw_y = -cam.rho_h() * cam.f * p_ccf.y / p_ccf.z + cam.v0();
    out.px = static_cast<int>(std::floor(out.raw_x));
    out.py = static_cast<int>(std::floor(out.raw_y));
    return out;
}

// Visibility is membership of the raw pixel coordinates in [0, WP) x [0, HP).
inline bool is_visible(double raw_x, double raw_y, const CameraIntrinsics& cam) {
    return raw_x >= 0.0 && raw_x < cam.WP && raw_y >= 0.0 && raw_y < cam.HP;
}

// Endpoints of one runway line in the runway frame.
inline std::array<Point3, 2> runway_line_endpoints(const RunwaySpec& rw, RunwayLine line) {
    const double x = line == RunwayLine::L ? rw.Lx : rw.Rx();
    const double z = line == RunwayLine::L ? rw.Lz : rw.Rz();
    return {Point3{x, 0.0, z}, Point3{x, 0.0, z + rw.length}};
}

} // namespace landver
