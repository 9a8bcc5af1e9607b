#include "illiq/convex_fn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace illiq {

namespace {

bool finite(double v) { return std::isfinite(v); }

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(std::string("ConvexFunction: ") + msg);
}

}  // namespace

ConvexFunction ConvexFunction::pwl(std::vector<double> breakpoints,
                                   std::vector<double> slopes,
                                   double anchor_x, double anchor_f) {
    require(slopes.size() == breakpoints.size() + 1, "need one slope per segment");
    require(!slopes.empty(), "empty slope list");
    require(finite(anchor_f), "anchor value must be finite");
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
        require(breakpoints[i] < breakpoints[i + 1], "breakpoints must be strictly increasing");
    for (double b : breakpoints) require(finite(b), "breakpoints must be finite");
    for (std::size_t i = 0; i + 1 < slopes.size(); ++i)
        require(slopes[i] <= slopes[i + 1], "slopes must be non-decreasing");
    for (std::size_t i = 0; i < slopes.size(); ++i) {
        if (std::isnan(slopes[i])) require(false, "slope is NaN");
        if (slopes[i] == -kInf) require(i == 0, "-inf slope only allowed first");
        if (slopes[i] == kInf) require(i + 1 == slopes.size(), "+inf slope only allowed last");
    }
    if (slopes.size() == 1) require(finite(slopes[0]), "affine slope must be finite");

    ConvexFunction f;
    f.kind_ = Kind::Pwl;
    f.breaks_ = std::move(breakpoints);
    f.slopes_ = std::move(slopes);
    f.anchor_x_ = anchor_x;
    f.anchor_f_ = anchor_f;
    f.canonicalize_pwl();
    require(f.domain().contains(anchor_x), "anchor outside domain");
    return f;
}

void ConvexFunction::canonicalize_pwl() {
    // merge segments whose slopes are exactly equal; the breakpoint between
    // them is not a kink
    std::vector<double> nb;
    std::vector<double> ns;
    ns.push_back(slopes_[0]);
    for (std::size_t i = 0; i < breaks_.size(); ++i) {
        if (slopes_[i + 1] == ns.back()) continue;
        nb.push_back(breaks_[i]);
        ns.push_back(slopes_[i + 1]);
    }
    breaks_ = std::move(nb);
    slopes_ = std::move(ns);
}

ConvexFunction ConvexFunction::affine(double slope, double x0, double f0) {
    require(finite(slope), "affine slope must be finite");
    return pwl({}, {slope}, x0, f0);
}

ConvexFunction ConvexFunction::indicator_leq(double bound) {
    return pwl({bound}, {0.0, kInf}, bound, 0.0);
}

ConvexFunction ConvexFunction::indicator_geq(double bound) {
    return pwl({bound}, {-kInf, 0.0}, bound, 0.0);
}

ConvexFunction ConvexFunction::indicator_point(double v) {
    return pwl({v}, {-kInf, kInf}, v, 0.0);
}

ConvexFunction ConvexFunction::exponential(double a, double m) {
    require(a > 0.0 && finite(a), "exponential needs a > 0");
    require(m > 0.0 && finite(m), "exponential needs scale > 0");
    ConvexFunction f;
    f.kind_ = Kind::Exp;
    f.param_ = a;
    f.scale_ = m;
    return f;
}

ConvexFunction ConvexFunction::power(double p, double m) {
    require(p > 1.0 && finite(p), "power needs exponent > 1");
    require(m > 0.0 && finite(m), "power needs scale > 0");
    ConvexFunction f;
    f.kind_ = Kind::Power;
    f.param_ = p;
    f.scale_ = m;
    return f;
}

double ConvexFunction::pwl_value(double x) const {
    Interval dom = domain();
    if (x < dom.lo || x > dom.hi) return kInf;
    // integrate slopes from the anchor to x, segment by segment
    double v = anchor_f_;
    double pos = anchor_x_;
    if (x >= pos) {
        for (std::size_t seg = 0; seg <= breaks_.size(); ++seg) {
            double seg_hi = seg == breaks_.size() ? kInf : breaks_[seg];
            if (seg_hi <= pos) continue;
            double upto = std::min(x, seg_hi);
            if (upto > pos) {
                v += slopes_[seg] * (upto - pos);
                pos = upto;
            }
            if (pos >= x) break;
        }
    } else {
        for (std::size_t seg = breaks_.size() + 1; seg-- > 0;) {
            double seg_lo = seg == 0 ? -kInf : breaks_[seg - 1];
            if (seg_lo >= pos) continue;
            double downto = std::max(x, seg_lo);
            if (downto < pos) {
                v -= slopes_[seg] * (pos - downto);
                pos = downto;
            }
            if (pos <= x) break;
        }
    }
    return v;
}

double ConvexFunction::value(double x) const {
    switch (kind_) {
        case Kind::Pwl:
            return pwl_value(x);
        case Kind::Exp:
            return scale_ * std::expm1(param_ * x) / param_;
        case Kind::Entropy: {
            if (x < 0.0) return kInf;
            if (x == 0.0) return scale_ / param_;
            return (x * std::log(x / scale_) - x + scale_) / param_;
        }
        case Kind::Power:
            return x <= 0.0 ? 0.0 : scale_ * std::pow(x, param_) / param_;
        case Kind::PowerConj:
            if (x < 0.0) return kInf;
            return scale_ * std::pow(x, param_) / param_;
    }
    return kInf;
}

double ConvexFunction::value_clamped(double x, double tol) const {
    Interval dom = domain();
    if (x < dom.lo && x >= dom.lo - tol) x = dom.lo;
    if (x > dom.hi && x <= dom.hi + tol) x = dom.hi;
    return value(x);
}

Interval ConvexFunction::domain() const {
    switch (kind_) {
        case Kind::Pwl: {
            double lo = slopes_.front() == -kInf ? breaks_.front() : -kInf;
            double hi = slopes_.back() == kInf ? breaks_.back() : kInf;
            return {lo, hi};
        }
        case Kind::Exp:
        case Kind::Power:
            return Interval::whole();
        case Kind::Entropy:
        case Kind::PowerConj:
            return {0.0, kInf};
    }
    return Interval::whole();
}

Interval ConvexFunction::conjugate_domain() const {
    switch (kind_) {
        case Kind::Pwl: {
            double lo = slopes_.front() == -kInf ? -kInf : slopes_.front();
            double hi = slopes_.back() == kInf ? kInf : slopes_.back();
            return {lo, hi};
        }
        case Kind::Exp:
        case Kind::Power:
            return {0.0, kInf};
        case Kind::Entropy:
        case Kind::PowerConj:
            return Interval::whole();
    }
    return Interval::whole();
}

ConvexFunction ConvexFunction::conjugate() const {
    switch (kind_) {
        case Kind::Exp: {
            ConvexFunction g;
            g.kind_ = Kind::Entropy;
            g.param_ = param_;
            g.scale_ = scale_;
            return g;
        }
        case Kind::Entropy: {
            ConvexFunction g;
            g.kind_ = Kind::Exp;
            g.param_ = param_;
            g.scale_ = scale_;
            return g;
        }
        case Kind::Power: {
            ConvexFunction g;
            g.kind_ = Kind::PowerConj;
            g.param_ = param_ / (param_ - 1.0);
            g.scale_ = std::pow(scale_, -1.0 / (param_ - 1.0));
            return g;
        }
        case Kind::PowerConj: {
            ConvexFunction g;
            g.kind_ = Kind::Power;
            g.param_ = param_ / (param_ - 1.0);
            g.scale_ = std::pow(scale_, -1.0 / (param_ - 1.0));
            return g;
        }
        case Kind::Pwl:
            break;
    }

    // Piecewise linear conjugation: finite slopes become the breakpoints of
    // the conjugate; breakpoints and domain endpoints become its slopes.
    std::size_t off = slopes_.front() == -kInf ? 1 : 0;
    std::vector<double> sig;
    for (double s : slopes_)
        if (finite(s)) sig.push_back(s);

    if (sig.empty()) {
        // domain is the single point b: conjugate is the line y -> b*y - f(b)
        double b = breaks_.front();
        return affine(b, 0.0, -pwl_value(b));
    }

    std::size_t m = sig.size();
    std::vector<double> cb = sig;
    std::vector<double> cs(m + 1);
    cs[0] = slopes_.front() == -kInf ? breaks_.front() : -kInf;
    for (std::size_t i = 1; i < m; ++i) cs[i] = breaks_[i - 1 + off];
    cs[m] = slopes_.back() == kInf ? breaks_.back() : kInf;

    double xhat = breaks_.empty() ? anchor_x_ : breaks_.front();
    double cf = xhat * sig.front() - pwl_value(xhat);
    return pwl(std::move(cb), std::move(cs), sig.front(), cf);
}

ConvexFunction ConvexFunction::recession() const {
    double l = left_slope();
    double r = right_slope();
    if (l == r) return linear(l);  // both finite by representation rules
    return pwl({0.0}, {l, r}, 0.0, 0.0);
}

double ConvexFunction::left_slope() const {
    switch (kind_) {
        case Kind::Pwl:
            return slopes_.front();
        case Kind::Exp:
        case Kind::Power:
            return 0.0;
        case Kind::Entropy:
        case Kind::PowerConj:
            return -kInf;
    }
    return 0.0;
}

double ConvexFunction::right_slope() const {
    switch (kind_) {
        case Kind::Pwl:
            return slopes_.back();
        case Kind::Exp:
        case Kind::Entropy:
        case Kind::Power:
        case Kind::PowerConj:
            return kInf;
    }
    return 0.0;
}

bool ConvexFunction::finite_everywhere() const {
    Interval d = domain();
    return d.lo == -kInf && d.hi == kInf;
}

Interval ConvexFunction::pwl_subdiff(double x) const {
    Interval dom = domain();
    if (x < dom.lo || x > dom.hi) throw std::domain_error("subdifferential: outside domain");
    // locate x among the breakpoints
    for (std::size_t i = 0; i < breaks_.size(); ++i) {
        if (x == breaks_[i]) return {slopes_[i], slopes_[i + 1]};
        if (x < breaks_[i]) return {slopes_[i], slopes_[i]};
    }
    return {slopes_.back(), slopes_.back()};
}

Interval ConvexFunction::subdifferential(double x) const {
    switch (kind_) {
        case Kind::Pwl:
            return pwl_subdiff(x);
        case Kind::Exp: {
            double d = scale_ * std::exp(param_ * x);
            return {d, d};
        }
        case Kind::Entropy: {
            if (x < 0.0) throw std::domain_error("subdifferential: outside domain");
            if (x == 0.0) return {-kInf, -kInf};  // empty: slope diverges at 0
            double d = std::log(x / scale_) / param_;
            return {d, d};
        }
        case Kind::Power: {
            double d = x <= 0.0 ? 0.0 : scale_ * std::pow(x, param_ - 1.0);
            return {d, d};
        }
        case Kind::PowerConj: {
            if (x < 0.0) throw std::domain_error("subdifferential: outside domain");
            if (x == 0.0) return {-kInf, 0.0};
            double d = scale_ * std::pow(x, param_ - 1.0);
            return {d, d};
        }
    }
    return Interval::whole();
}

Interval ConvexFunction::subdifferential_window(double x, double eps) const {
    Interval dom = domain();
    double lo_x = std::max(x - eps, dom.lo);
    double hi_x = std::min(x + eps, dom.hi);
    if (lo_x > hi_x) throw std::domain_error("subdifferential_window: outside domain");
    Interval a = subdifferential(lo_x);
    Interval b = subdifferential(hi_x);
    return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

ConvexFunction ConvexFunction::scaled(double a) const {
    require(a >= 0.0 && !std::isnan(a), "epi-scaling needs a >= 0");
    if (a == 0.0) {
        Interval d = domain();
        if (!d.bounded()) {
            if (d.lo == -kInf && d.hi == kInf) return zero();
            if (d.lo == -kInf) return indicator_leq(d.hi);
            return indicator_geq(d.lo);
        }
        if (d.is_point()) return indicator_point(d.lo);
        return pwl({d.lo, d.hi}, {-kInf, 0.0, kInf}, d.lo, 0.0);
    }
    switch (kind_) {
        case Kind::Pwl: {
            ConvexFunction f;
            f.kind_ = Kind::Pwl;
            f.breaks_ = breaks_;
            f.slopes_ = slopes_;
            for (double& s : f.slopes_) s *= a;  // inf stays inf
            f.anchor_x_ = anchor_x_;
            f.anchor_f_ = a * anchor_f_;
            f.canonicalize_pwl();
            return f;
        }
        case Kind::Exp:
        case Kind::Power: {
            ConvexFunction f = *this;
            f.scale_ *= a;
            return f;
        }
        case Kind::Entropy: {
            // a * (y log(y/m) - y + m)/alpha = (y log(y/m) - y + m)/(alpha/a)
            ConvexFunction f = *this;
            f.param_ /= a;
            return f;
        }
        case Kind::PowerConj: {
            ConvexFunction f = *this;
            f.scale_ *= a;
            return f;
        }
    }
    return *this;
}

std::string ConvexFunction::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::Pwl: {
            os << "pwl(k=" << breaks_.size() << ", slopes=[";
            for (std::size_t i = 0; i < slopes_.size(); ++i)
                os << (i ? "," : "") << slopes_[i];
            os << "])";
            break;
        }
        case Kind::Exp:
            os << "exp(a=" << param_ << ", m=" << scale_ << ")";
            break;
        case Kind::Entropy:
            os << "entropy(a=" << param_ << ", m=" << scale_ << ")";
            break;
        case Kind::Power:
            os << "power(p=" << param_ << ", m=" << scale_ << ")";
            break;
        case Kind::PowerConj:
            os << "power_conj(p=" << param_ << ", m=" << scale_ << ")";
            break;
    }
    return os.str();
}

std::vector<AffinePiece> affine_pieces(const ConvexFunction& f) {
    if (!f.is_pwl()) throw std::logic_error("affine_pieces: function is not piecewise linear");
    const auto& bp = f.breakpoints();
    const auto& sl = f.slopes();
    std::vector<AffinePiece> out;
    if (bp.empty()) {
        out.push_back({sl[0], f.anchor_f() - sl[0] * f.anchor_x()});
        return out;
    }
    for (std::size_t i = 0; i < sl.size(); ++i) {
        if (!std::isfinite(sl[i])) continue;
        const double ref = i == 0 ? bp.front() : bp[i - 1];
        out.push_back({sl[i], f.value(ref) - sl[i] * ref});
    }
    if (out.empty()) {
        // point indicator: the constant line at the pinned value
        out.push_back({0.0, f.value(bp.front())});
    }
    return out;
}

}  // namespace illiq
