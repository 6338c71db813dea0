#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "landver/geometry.hpp"
#include "landver/pixel_tests.hpp"
#include "landver/zeta.hpp"

namespace landver {

// Monochrome q x q image. bits[i][j] indexing follows the pixel frame: i runs
// across (raw x), j runs down (raw y); storage is row-major in i.
struct MonoImage {
    int q = 0;
    std::vector<std::uint8_t> bits;

    explicit MonoImage(int q_ = 0) : q(q_), bits(static_cast<std::size_t>(q_) * q_, 0) {}

    std::uint8_t& at(int i, int j) { return bits[static_cast<std::size_t>(i - 1) * q + (j - 1)]; }
    std::uint8_t at(int i, int j) const {
        return bits[static_cast<std::size_t>(i - 1) * q + (j - 1)];
    }

    bool operator==(const MonoImage& other) const = default;

    std::size_t lit_count() const {
        std::size_t n = 0;
        for (auto b : bits) n += b;
        return n;
    }

    // One text row per image row j; '#' marks a lit pixel.
    std::string ascii() const {
        std::string s;
        s.reserve(static_cast<std::size_t>(q) * (q + 1));
        for (int j = 1; j <= q; ++j) {
            for (int i = 1; i <= q; ++i) s.push_back(at(i, j) ? '#' : '.');
            s.push_back('\n');
        }
        return s;
    }
};

struct RenderResult {
    MonoImage image;
    // Per-pixel score, same storage order as the image bits: the min over the
    // rendered lines of the pixel score. Negative within roundoff iff lit;
    // |score| is the decision robustness of a lit pixel, while unlit pixels
    // sit at zero (plus roundoff). Bits come from the exact sign logic.
    std::vector<double> margins;
};

// Reference rasterizer. For each runway line the endpoints are projected to
// raw pixel coordinates, and a pixel lights exactly when the projected
// segment properly crosses one of its four edges. This is the ground truth
// the perception network is checked against, done in plain arithmetic.
inline RenderResult render_image_oracle(const AircraftState& s, const RunwaySpec& rw,
                                        const CameraIntrinsics& cam, int lines = 2) {
    const int q = cam.q();
    RenderResult out{MonoImage(q), std::vector<double>()};
    out.margins.assign(static_cast<std::size_t>(q) * q, std::numeric_limits<double>::infinity());

    for (int li = 0; li < lines; ++li) {
        const RunwayLine line = li == 0 ? RunwayLine::L : RunwayLine::R;
        const auto ends = runway_line_endpoints(rw, line);
        const PixelProjection p0 = project_to_pcf(rcf_to_ccf(ends[0], s), cam);
        const PixelProjection p1 = project_to_pcf(rcf_to_ccf(ends[1], s), cam);
        ZetaCoords z;
        z.z1 = p0.raw_x;
        z.z2 = p0.raw_y;
        z.z3 = p1.raw_x;
        z.z4 = p1.raw_y;
        z.z5 = z.z1 * z.z4 - z.z2 * z.z3;
        for (int i = 1; i <= q; ++i) {
            for (int j = 1; j <= q; ++j) {
                const std::size_t idx = static_cast<std::size_t>(i - 1) * q + (j - 1);
                const double v = pixel_margin(z, i, j);
                out.margins[idx] = std::min(out.margins[idx], v);
                if (pixel_lit(z, i, j)) out.image.bits[idx] = 1;
            }
        }
    }
    return out;
}

} // namespace landver
