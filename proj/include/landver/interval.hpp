#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "landver/errors.hpp"

namespace landver {

// Closed interval with outward-rounded arithmetic. Every operation widens the
// result by one ulp per bound, so enclosures stay sound under roundoff.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    Interval() = default;
    Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
        if (!(lo <= hi)) throw ContractError("interval bounds out of order");
    }
    static Interval point(double v) { return Interval(v, v); }

    bool contains(double v) const { return v >= lo && v <= hi; }
    double width() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
};

namespace detail {
inline double down(double v) {
    return std::nextafter(v, -std::numeric_limits<double>::infinity());
}
inline double up(double v) { return std::nextafter(v, std::numeric_limits<double>::infinity()); }
inline Interval outward(double lo, double hi) { return Interval(down(lo), up(hi)); }
} // namespace detail

inline Interval operator+(const Interval& a, const Interval& b) {
    return detail::outward(a.lo + b.lo, a.hi + b.hi);
}
inline Interval operator-(const Interval& a, const Interval& b) {
    return detail::outward(a.lo - b.hi, a.hi - b.lo);
}
inline Interval operator-(const Interval& a) { return Interval(-a.hi, -a.lo); }

inline Interval operator*(const Interval& a, const Interval& b) {
    const double p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
    return detail::outward(std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4}));
}
inline Interval operator*(double s, const Interval& a) { return Interval::point(s) * a; }

inline Interval operator/(const Interval& a, const Interval& b) {
    if (b.lo <= 0.0 && b.hi >= 0.0)
        throw DegenerateInverseError("interval division by a range containing zero");
    const double p1 = a.lo / b.lo, p2 = a.lo / b.hi, p3 = a.hi / b.lo, p4 = a.hi / b.hi;
    return detail::outward(std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4}));
}

inline Interval sqrt(const Interval& a) {
    if (a.hi < 0.0) throw ContractError("interval sqrt of a negative range");
    const double lo = a.lo > 0.0 ? std::sqrt(a.lo) : 0.0;
    return detail::outward(lo, std::sqrt(a.hi));
}

inline Interval intersect(const Interval& a, const Interval& b) {
    const double lo = std::max(a.lo, b.lo);
    const double hi = std::min(a.hi, b.hi);
    if (lo > hi) throw ContractError("empty interval intersection");
    return Interval(lo, hi);
}

// cos over a pitch range inside (-pi/2, pi/2): even, unimodal with max at 0.
inline Interval cos_pitch(const Interval& theta) {
    const double c_lo_end = std::cos(theta.lo);
    const double c_hi_end = std::cos(theta.hi);
    double lo = std::min(c_lo_end, c_hi_end);
    double hi = theta.contains(0.0) ? 1.0 : std::max(c_lo_end, c_hi_end);
    return detail::outward(std::max(lo, -1.0), std::min(hi, 1.0));
}

// sin over a range inside [-pi/2, pi/2]: monotone increasing.
inline Interval sin_pitch(const Interval& theta) {
    return detail::outward(std::sin(theta.lo), std::sin(theta.hi));
}

} // namespace landver
