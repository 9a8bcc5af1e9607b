#pragma once

#include <limits>
#include <stdexcept>

namespace illiq {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Closed interval of the extended real line, endpoints may be +-inf.
struct Interval {
    double lo = -kInf;
    double hi = kInf;

    Interval() = default;
    Interval(double l, double h) : lo(l), hi(h) {
        if (l > h) throw std::invalid_argument("Interval: lo > hi");
    }

    static Interval whole() { return {-kInf, kInf}; }
    static Interval point(double v) { return {v, v}; }

    bool contains(double v, double tol = 0.0) const {
        return v >= lo - tol && v <= hi + tol;
    }
    bool is_point() const { return lo == hi; }
    bool bounded() const { return lo > -kInf && hi < kInf; }

    /// True when s * [lo,hi] is contained in [lo,hi]; s must be >= 0.
    bool scaled_subset_of(const Interval& outer, double s) const {
        auto mul = [](double a, double b) {
            if (a == 0.0) return 0.0;  // 0 * inf = 0 under epi-scaling conventions
            return a * b;
        };
        double l = mul(s, lo), h = mul(s, hi);
        return l >= outer.lo && h <= outer.hi;
    }
};

}  // namespace illiq
