#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "landver/errors.hpp"

namespace landver {

// Regular grid over a box in the working coordinates (z1, z2, z3). Cell
// counts are per dimension; the flight band is orders of magnitude narrower
// in z1/z3 than in z2, so the sides generally differ per dimension.
struct PartitionSpec {
    Eigen::Vector3d lower{0, 0, 0};
    Eigen::Vector3d upper{16, 16, 16};
    std::array<int, 3> cells{16, 16, 16};

    void validate() const {
        for (int d = 0; d < 3; ++d) {
            if (!(upper[d] > lower[d]))
                throw ConfigError("partition upper bound must exceed lower bound");
            if (cells[d] < 1) throw ConfigError("partition needs at least one cell per dimension");
        }
    }

    // Uniform-cell construction: the box extent must be an integer multiple of
    // the cell side in every dimension.
    static PartitionSpec uniform(const Eigen::Vector3d& lower, const Eigen::Vector3d& upper,
                                 double side) {
        if (!(side > 0.0)) throw ConfigError("cell side must be positive");
        PartitionSpec p;
        p.lower = lower;
        p.upper = upper;
        for (int d = 0; d < 3; ++d) {
            const double n = (upper[d] - lower[d]) / side;
            const double rounded = std::round(n);
            if (std::abs(n - rounded) > 1e-9 * std::max(1.0, std::abs(n)))
                throw ConfigError("partition extent is not an integer number of cells");
            p.cells[d] = static_cast<int>(rounded);
        }
        p.validate();
        return p;
    }

    double side(int d) const { return (upper[d] - lower[d]) / cells[d]; }
    double radius(int d) const { return 0.5 * side(d); }
    Eigen::Vector3d radius_vector() const { return {radius(0), radius(1), radius(2)}; }
    double max_radius() const { return radius_vector().maxCoeff(); }

    int total() const { return cells[0] * cells[1] * cells[2]; }

    int id_of(int i0, int i1, int i2) const { return (i0 * cells[1] + i1) * cells[2] + i2; }

    std::array<int, 3> indices_of(int id) const {
        std::array<int, 3> ix;
        ix[2] = id % cells[2];
        ix[1] = (id / cells[2]) % cells[1];
        ix[0] = id / (cells[1] * cells[2]);
        return ix;
    }

    Eigen::Vector3d center(int id) const {
        const auto ix = indices_of(id);
        Eigen::Vector3d c;
        for (int d = 0; d < 3; ++d) c[d] = lower[d] + (ix[d] + 0.5) * side(d);
        return c;
    }

    Eigen::Vector3d box_lower(int id) const {
        const auto ix = indices_of(id);
        Eigen::Vector3d c;
        for (int d = 0; d < 3; ++d) c[d] = lower[d] + ix[d] * side(d);
        return c;
    }

    Eigen::Vector3d box_upper(int id) const {
        const auto ix = indices_of(id);
        Eigen::Vector3d c;
        for (int d = 0; d < 3; ++d) c[d] = lower[d] + (ix[d] + 1) * side(d);
        return c;
    }

    // Cells are half-open except the last along each dimension, so every point
    // of the box belongs to exactly one cell.
    std::optional<int> locate(const Eigen::Vector3d& p) const {
        std::array<int, 3> ix;
        for (int d = 0; d < 3; ++d) {
            if (p[d] < lower[d] || p[d] > upper[d]) return std::nullopt;
            int i = static_cast<int>(std::floor((p[d] - lower[d]) / side(d)));
            if (i == cells[d]) i = cells[d] - 1; // upper face belongs to the last cell
            if (i < 0 || i >= cells[d]) return std::nullopt;
            ix[d] = i;
        }
        return id_of(ix[0], ix[1], ix[2]);
    }

    struct BoxCover {
        std::array<int, 3> lo_idx{};
        std::array<int, 3> hi_idx{};  // inclusive
        bool leaks_outside = false;   // box extends beyond the partition
        bool empty = false;           // box entirely outside
    };

    // Cells whose closed boxes intersect the closed query box; boundary ties
    // include both neighbours.
    BoxCover cover(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi) const {
        BoxCover cov;
        for (int d = 0; d < 3; ++d) {
            if (hi[d] < lower[d] || lo[d] > upper[d]) {
                cov.empty = true;
                cov.leaks_outside = true;
                return cov;
            }
            if (lo[d] < lower[d] || hi[d] > upper[d]) cov.leaks_outside = true;
            const double s = side(d);
            double fl = std::floor((lo[d] - lower[d]) / s);
            double fh = std::floor((hi[d] - lower[d]) / s);
            // A query bound sitting exactly on a grid plane touches the cell
            // below it as well.
            if (lo[d] - lower[d] == fl * s) fl -= 1;
            int a = static_cast<int>(std::max(0.0, fl));
            int b = static_cast<int>(std::min<double>(cells[d] - 1, fh));
            cov.lo_idx[d] = std::min(a, cells[d] - 1);
            cov.hi_idx[d] = std::max(b, 0);
        }
        return cov;
    }
};

// An infinity-norm ball cell of the partition.
struct Region {
    int index = 0;
    Eigen::Vector3d center;
    Eigen::Vector3d radius;
};

inline std::vector<Region> partition(const PartitionSpec& spec) {
    spec.validate();
    std::vector<Region> out;
    out.reserve(static_cast<std::size_t>(spec.total()));
    for (int id = 0; id < spec.total(); ++id)
        out.push_back(Region{id, spec.center(id), spec.radius_vector()});
    return out;
}

} // namespace landver
