#pragma once

#include <string>
#include <vector>

#include "illiq/interval.hpp"

namespace illiq {

/// Closed proper convex function of one variable.
///
/// Two representation families are supported:
///  * piecewise linear: strictly increasing breakpoints b_1 < ... < b_k and
///    non-decreasing slopes s_0 <= ... <= s_k (one slope per segment, k+1 of
///    them).  s_0 = -inf or s_k = +inf encodes a domain bounded at the first
///    or last breakpoint.  Values are anchored by f(anchor_x) = anchor_f.
///  * smooth families with closed-form conjugates:
///      Exp(a, m):       m * (exp(a*x) - 1) / a             on R
///      Entropy(a, m):   (y*log(y/m) - y + m) / a           on [0, inf)
///      Power(p, m):     m * max(x,0)^p / p                 on R
///      PowerConj(p, m): m * y^p / p on [0, inf), +inf on y < 0
///    Exp/Entropy and Power/PowerConj are conjugate pairs, so every supported
///    function has a representable conjugate (pwl conjugates stay pwl).
///
/// Conjugation of pwl data exchanges breakpoints and slopes exactly; no
/// numerical optimisation is involved anywhere in this class.
class ConvexFunction {
  public:
    enum class Kind { Pwl, Exp, Entropy, Power, PowerConj };

    /// Piecewise linear function; see class comment for the encoding.
    static ConvexFunction pwl(std::vector<double> breakpoints,
                              std::vector<double> slopes,
                              double anchor_x, double anchor_f);
    /// f(x) = f0 + s * (x - x0), finite slope.
    static ConvexFunction affine(double slope, double x0, double f0);
    static ConvexFunction linear(double slope) { return affine(slope, 0.0, 0.0); }
    static ConvexFunction zero() { return linear(0.0); }
    /// Indicator of (-inf, bound].
    static ConvexFunction indicator_leq(double bound);
    /// Indicator of [bound, +inf).
    static ConvexFunction indicator_geq(double bound);
    /// Indicator of the single point {v}.
    static ConvexFunction indicator_point(double v);
    /// m * (exp(a*x) - 1) / a; requires a > 0, m > 0.
    static ConvexFunction exponential(double a, double m = 1.0);
    /// m * max(x,0)^p / p; requires p > 1, m > 0.
    static ConvexFunction power(double p, double m = 1.0);

    Kind kind() const { return kind_; }
    bool is_pwl() const { return kind_ == Kind::Pwl; }

    /// Function value, +inf outside the domain.
    double value(double x) const;
    /// Value with arguments within `tol` of the domain snapped onto it.
    double value_clamped(double x, double tol) const;

    /// Effective domain (closed).
    Interval domain() const;
    /// Domain of the conjugate, i.e. the closure of the slope range.
    Interval conjugate_domain() const;

    /// Legendre-Fenchel conjugate, computed in closed form.
    ConvexFunction conjugate() const;

    /// Recession function x -> sup_a (f(z + a*x) - f(z)) / a; always pwl.
    ConvexFunction recession() const;

    /// Subdifferential [left derivative, right derivative]; +-inf at domain
    /// endpoints.  Throws std::domain_error outside the domain.  An empty
    /// subdifferential (possible at a boundary of a smooth family) is
    /// reported as the degenerate interval [-inf, -inf] or [+inf, +inf].
    Interval subdifferential(double x) const;

    /// Union of subdifferentials over [x-eps, x+eps] intersected with the
    /// domain; kink-robust membership queries use this.
    Interval subdifferential_window(double x, double eps) const;

    /// Epigraph scaling: a*f for a > 0, indicator of cl dom f for a = 0.
    ConvexFunction scaled(double a) const;

    /// Slope at -inf resp. +inf (the recession function evaluated at -1/+1,
    /// up to sign).
    double left_slope() const;
    double right_slope() const;

    bool nondecreasing() const { return left_slope() >= 0.0; }
    bool finite_everywhere() const;

    // representation access (pwl only for the vectors)
    const std::vector<double>& breakpoints() const { return breaks_; }
    const std::vector<double>& slopes() const { return slopes_; }
    double anchor_x() const { return anchor_x_; }
    double anchor_f() const { return anchor_f_; }
    /// Growth parameter: a for Exp/Entropy, the exponent for Power/PowerConj.
    double param() const { return param_; }
    double scale() const { return scale_; }

    std::string describe() const;

  private:
    ConvexFunction() = default;

    Kind kind_ = Kind::Pwl;
    // pwl data
    std::vector<double> breaks_;
    std::vector<double> slopes_;
    double anchor_x_ = 0.0;
    double anchor_f_ = 0.0;
    // smooth-family data
    double param_ = 0.0;
    double scale_ = 1.0;

    void canonicalize_pwl();
    double pwl_value(double x) const;
    Interval pwl_subdiff(double x) const;
};

/// One supporting line of a pwl function.
struct AffinePiece {
    double slope = 0.0;
    double offset = 0.0;  // line(x) = slope * x + offset
};

/// Supporting lines such that f(x) = max_k line_k(x) on dom f.  A function
/// with no finite slope (a point indicator) yields the single constant line
/// at its value.  Throws std::logic_error for non-pwl kinds.
std::vector<AffinePiece> affine_pieces(const ConvexFunction& f);

}  // namespace illiq
