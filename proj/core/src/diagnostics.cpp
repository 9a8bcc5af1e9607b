#include "illiq/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "dual_detail.hpp"
#include "illiq/dual.hpp"
#include "illiq/lp.hpp"

namespace illiq {

namespace {

using Terms = std::vector<std::pair<int, double>>;

// ---------------------------------------------------------------------------
// lineality of the zero-cost cone

struct ConeSystem {
    int nvars = 0;
    std::vector<int> var_base;  // [node] -> first variable index, -1 at leaves
    std::vector<Terms> rows;    // each row is <= 0
};

void push_row(ConeSystem& cs, Terms terms) {
    if (!terms.empty()) cs.rows.push_back(std::move(terms));
}

Terms scaled(const Terms& t, double s) {
    Terms out = t;
    for (auto& [var, coef] : out) coef *= s;
    return out;
}

/// Rows of { x adapted | x_n in cone(D_n), sum_j phi-recession(dx_{n,j}) <= 0
/// wherever the time-t loss grows }.  The per-node cost row is expanded over
/// all sign patterns of the recession slopes, which is exact because the
/// recession of each phi is the maximum of its two one-sided slopes.
ConeSystem build_zero_cost_cone(const MarketModel& model, const LossSpec& loss) {
    const ScenarioTree& tree = *model.tree;
    const int J = model.assets;

    ConeSystem cs;
    cs.var_base.assign(tree.num_nodes(), -1);
    for (int n = 0; n < tree.num_nodes(); ++n)
        if (!tree.is_leaf(n)) {
            cs.var_base[n] = cs.nvars;
            cs.nvars += J;
        }
    if (cs.nvars == 0) return cs;

    std::vector<bool> loss_grows(tree.horizon() + 1, false);
    for (int t = 0; t <= tree.horizon(); ++t)
        loss_grows[t] = loss.v[t].recession().value(1.0) > 0.0;

    for (int n = 0; n < tree.num_nodes(); ++n) {
        std::vector<Terms> dx(J);
        for (int j = 0; j < J; ++j) {
            if (cs.var_base[n] >= 0) dx[j].push_back({cs.var_base[n] + j, 1.0});
            int par = tree.parent(n);
            if (par >= 0 && cs.var_base[par] >= 0) dx[j].push_back({cs.var_base[par] + j, -1.0});
        }

        std::vector<std::vector<double>> sides(J);
        std::size_t patterns = 1;
        for (int j = 0; j < J; ++j) {
            if (dx[j].empty()) continue;
            ConvexFunction rec = model.cost(n, j).recession();
            double up = rec.value(1.0), down = rec.value(-1.0);
            if (std::isfinite(up))
                sides[j].push_back(up);
            else
                push_row(cs, dx[j]);  // dx_j <= 0
            if (std::isfinite(down))
                sides[j].push_back(-down);
            else
                push_row(cs, scaled(dx[j], -1.0));  // dx_j >= 0
            if (sides[j].size() == 2 && sides[j][0] == sides[j][1]) sides[j].pop_back();
            if (!sides[j].empty()) patterns *= sides[j].size();
        }
        if (patterns > 4096)
            throw std::runtime_error("linearity_check: too many cost slope patterns");

        if (loss_grows[tree.time(n)]) {
            std::vector<int> pick(J, 0);
            for (std::size_t p = 0; p < patterns; ++p) {
                Terms row;
                std::size_t rest = p;
                for (int j = 0; j < J; ++j) {
                    if (sides[j].empty()) continue;
                    int s = static_cast<int>(rest % sides[j].size());
                    rest /= sides[j].size();
                    for (const auto& [var, coef] : dx[j]) row.push_back({var, coef * sides[j][s]});
                }
                push_row(cs, std::move(row));
            }
        }

        if (cs.var_base[n] >= 0) {
            const Polyhedron& D = model.constraint(n);
            for (Eigen::Index r = 0; r < D.rows(); ++r) {
                Terms row;
                for (int j = 0; j < J; ++j)
                    if (D.A(r, j) != 0.0) row.push_back({cs.var_base[n] + j, D.A(r, j)});
                push_row(cs, std::move(row));
            }
        }
    }
    return cs;
}

}  // namespace

LinealityReport linearity_check(const MarketModel& model, const LossSpec& loss) {
    const ScenarioTree& tree = *model.tree;
    if (static_cast<int>(loss.v.size()) != tree.horizon() + 1)
        throw std::invalid_argument("linearity_check: loss size does not match the horizon");

    LinealityReport rep;
    rep.ray = PortfolioProcess::zero(model.tree, model.assets);

    ConeSystem cs = build_zero_cost_cone(model, loss);
    if (cs.nvars == 0) {
        rep.is_linear = true;
        return rep;
    }

    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cs.rows.size()), cs.nvars);
    for (std::size_t i = 0; i < cs.rows.size(); ++i)
        for (const auto& [var, coef] : cs.rows[i]) M(static_cast<Eigen::Index>(i), var) += coef;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    lu.setThreshold(1e-9);
    rep.lineality_dim = cs.nvars - static_cast<int>(cs.rows.empty() ? 0 : lu.rank());

    LpBuilder builder;
    for (int v = 0; v < cs.nvars; ++v) builder.add_var(-1.0, 1.0);
    for (const auto& row : cs.rows) builder.add_row(LpBuilder::Sense::LE, 0.0, row);
    LinearProgram lp = builder.build();

    // The cone contains -x for every x exactly when no defining row can be
    // made strictly positive at a cone point; the box truncation is harmless
    // because the cone is scale invariant.
    rep.is_linear = true;
    for (std::size_t i = 0; i < cs.rows.size(); ++i) {
        lp.c.setZero();
        for (const auto& [var, coef] : cs.rows[i]) lp.c[var] += coef;
        LpSolution sol = solve_lp(lp);
        if (!sol.optimal()) throw std::runtime_error("linearity_check: cone LP did not solve");
        if (sol.objective < -1e-9) {
            rep.is_linear = false;
            for (int n = 0; n < tree.num_nodes(); ++n)
                if (cs.var_base[n] >= 0)
                    for (int j = 0; j < model.assets; ++j)
                        rep.ray.at(n, j) = sol.x[cs.var_base[n] + j];
            break;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// relative elasticity of the conjugate losses

namespace {

using RV = RAEVerdict;

bool subdiff_empty(const Interval& sd) { return sd.lo == sd.hi && !std::isfinite(sd.lo); }

RV verdict_of(bool ok) { return ok ? RV::Holds : RV::Fails; }

/// One time step.  The growth exponent beta is estimated from the
/// subgradient-ratio form on a multiplicative grid and the remaining three
/// reformulations are then verified on the same grids.
RAEReport::PerTime rae_time_check(const ConvexFunction& V, RAECondition cond, int t) {
    RAEReport::PerTime out;
    out.time = t;
    const bool plus = cond == RAECondition::Plus;
    const double lam = plus ? 2.0 : 0.5;
    out.lambda = lam;

    if (!V.nondecreasing() || std::abs(V.value_clamped(0.0, 1e-9)) > 1e-9 ||
        !(V.recession().value(1.0) > 0.0))
        return out;  // not a loss shape this check understands

    const ConvexFunction conj = V.conjugate();
    const Interval dom = conj.domain();

    // reference level for the defining inequality
    double ybar;
    {
        double cref = detail::clamp_into(V.domain(), plus ? 1.0 : -1.0);
        Interval sd = V.subdifferential(cref);
        double cand = kInf;
        if (!subdiff_empty(sd)) {
            if (std::isfinite(sd.hi) && sd.hi > 0)
                cand = sd.hi;
            else if (std::isfinite(sd.lo) && sd.lo > 0)
                cand = sd.lo;
        }
        if (!std::isfinite(cand)) {
            if (dom.lo > 0)
                cand = 2.0 * dom.lo;
            else if (std::isfinite(dom.hi) && dom.hi > 0)
                cand = 0.5 * dom.hi;
            else
                cand = 1.0;
        }
        ybar = detail::clamp_into(dom, std::max(cand, 1e-6));
    }
    out.ybar = ybar;

    std::vector<double> ygrid;
    {
        const int N = 1000;
        double lo_y, hi_y;
        if (plus) {
            lo_y = ybar;
            hi_y = 1e3 * std::max(ybar, std::isfinite(dom.hi) ? dom.hi : ybar);
        } else {
            hi_y = ybar;
            lo_y = 1e-3 * (dom.lo > 0 ? std::min(ybar, dom.lo) : ybar);
        }
        for (int k = 0; k < N; ++k)
            ygrid.push_back(lo_y * std::pow(hi_y / lo_y, double(k) / (N - 1)));
        if (plus && std::isfinite(dom.hi) && dom.hi >= ybar) ygrid.push_back(dom.hi);
        if (!plus && dom.lo > 0 && dom.lo <= ybar) ygrid.push_back(dom.lo);
    }

    double C = 1.0;
    bool fails = false;
    for (double y : ygrid) {
        double rhs = conj.value(y);
        if (!std::isfinite(rhs)) continue;  // outside dom, vacuous
        double lhs = conj.value(lam * y);
        if (!std::isfinite(lhs)) {
            fails = true;
            break;
        }
        if (rhs > 1e-300)
            C = std::max(C, lhs / rhs);
        else if (lhs > 1e-9) {
            fails = true;
            break;
        }
    }
    out.C = C;
    out.verdict = fails ? RV::Fails : RV::Holds;

    // growth exponent region: c beyond the conjugate subdifferential at ybar,
    // nudged until that subdifferential sits on the required side of zero
    double yb = ybar;
    Interval sd0 = conj.subdifferential(yb);
    for (int k = 0; k < 64; ++k) {
        if (subdiff_empty(sd0)) break;
        if (plus ? sd0.lo >= -1e-8 : sd0.hi <= 1e-8) break;
        double next = plus ? std::min(yb * 2.0, dom.hi) : std::max(yb * 0.5, dom.lo);
        if (next == yb) break;
        yb = next;
        sd0 = conj.subdifferential(yb);
    }
    double c0 = plus ? sd0.hi : sd0.lo;
    bool side_ok = !subdiff_empty(sd0) && std::isfinite(c0) &&
                   (plus ? sd0.lo >= -1e-8 : sd0.hi <= 1e-8);
    if (!side_ok) return out;  // forms stay Unknown

    const Interval vdom = V.domain();
    std::vector<double> cgrid;
    {
        const int Nc = 240;
        double cb = plus ? std::max(c0, 1e-6) : std::min(c0, -1e-6);
        for (int k = 0; k < Nc; ++k) {
            double c = detail::clamp_into(vdom, cb * std::pow(10.0, 3.0 * k / (Nc - 1)));
            if (cgrid.empty() || std::abs(c - cgrid.back()) > 1e-15 * (1.0 + std::abs(c)))
                cgrid.push_back(c);
        }
    }

    // (1c)/(2c): admissible exponents from c*y against the loss value
    double lo_ratio = kInf, hi_ratio = 0.0;
    bool cfail = false;
    for (double c : cgrid) {
        double g = V.value(c);
        if (!std::isfinite(g)) continue;
        Interval sd = V.subdifferential(c);
        if (subdiff_empty(sd)) continue;
        if (plus) {
            if (g > 1e-300 && std::isfinite(sd.lo)) lo_ratio = std::min(lo_ratio, c * sd.lo / g);
        } else {
            if (g < -1e-300) {
                if (std::isfinite(sd.hi)) hi_ratio = std::max(hi_ratio, c * sd.hi / g);
            } else if (std::isfinite(sd.hi) && c * sd.hi < -1e-9 * (1.0 + std::abs(c))) {
                cfail = true;  // flat loss but a genuinely positive slope
            }
        }
    }

    double beta;
    bool beta_valid;
    if (plus) {
        beta = std::isfinite(lo_ratio) ? lo_ratio : 2.0;
        beta_valid = !cfail && beta > 1.0 + 1e-9;
    } else {
        beta = hi_ratio > 0.0 ? hi_ratio : 0.5;
        beta_valid = !cfail && beta < 1.0 - 1e-9 && beta > 0.0;
    }
    out.beta = beta;
    out.forms[2] = verdict_of(beta_valid);
    if (!beta_valid) {
        out.forms[0] = out.forms[1] = out.forms[3] = RV::Fails;
        return out;
    }

    const std::vector<double> lam_up = {1.0, 1.5, 2.0, 4.0, 8.0};
    const std::vector<double> lam_dn = {0.125, 0.25, 0.5, 0.75, 1.0};
    const double exp_a = plus ? beta / (beta - 1.0) : -beta / (1.0 - beta);

    bool ok_a = true;
    for (double l : plus ? lam_up : lam_dn) {
        for (double y : ygrid) {
            double rhs = conj.value(y);
            if (!std::isfinite(rhs)) continue;
            double lhs = conj.value(l * y);
            if (!std::isfinite(lhs) || lhs > std::pow(l, exp_a) * rhs + 1e-7 * (1.0 + rhs)) {
                ok_a = false;
                break;
            }
        }
        if (!ok_a) break;
    }
    out.forms[0] = verdict_of(ok_a);

    bool ok_b = true;
    const double slope_bound = plus ? beta / (beta - 1.0) : -beta / (1.0 - beta);
    for (double y : ygrid) {
        double val = conj.value(y);
        if (!std::isfinite(val)) continue;
        Interval sd = conj.subdifferential(y);
        if (subdiff_empty(sd)) continue;
        double tol = 1e-7 * (1.0 + std::abs(val));
        if (plus) {
            if (!std::isfinite(sd.hi) || sd.hi * y > slope_bound * val + tol) ok_b = false;
        } else {
            if (!std::isfinite(sd.lo) || sd.lo * y < slope_bound * val - tol) ok_b = false;
        }
        if (!ok_b) break;
    }
    out.forms[1] = verdict_of(ok_b);

    bool ok_d = true;
    for (double l : lam_up) {
        for (double c : cgrid) {
            double g = V.value(c);
            if (!std::isfinite(g)) continue;
            double gl = V.value(l * c);
            if (!std::isfinite(gl)) continue;  // +inf dominates anything
            if (gl < std::pow(l, beta) * g - 1e-7 * (1.0 + std::abs(g))) {
                ok_d = false;
                break;
            }
        }
        if (!ok_d) break;
    }
    out.forms[3] = verdict_of(ok_d);
    return out;
}

}  // namespace

RAEReport rae_check(const LossSpec& loss, RAECondition condition) {
    RAEReport rep;
    rep.condition = condition;
    if (loss.v.empty()) return rep;

    bool any_fail = false, any_unknown = false;
    for (int t = 0; t < static_cast<int>(loss.v.size()); ++t) {
        rep.times.push_back(rae_time_check(loss.v[t], condition, t));
        any_fail = any_fail || rep.times.back().verdict == RV::Fails;
        any_unknown = any_unknown || rep.times.back().verdict == RV::Unknown;
    }
    rep.verdict = any_fail ? RV::Fails : any_unknown ? RV::Unknown : RV::Holds;
    rep.holds = rep.verdict == RV::Holds;
    return rep;
}

ScalingReport scaling_domain_check(const LossSpec& loss, const ScenarioTree& tree) {
    if (static_cast<int>(loss.v.size()) != tree.horizon() + 1)
        throw std::invalid_argument("scaling_domain_check: loss size does not match the horizon");

    for (double lam : {2.0, 0.5}) {
        bool ok = true;
        for (const auto& V : loss.v) {
            Interval dom = V.conjugate_domain();
            if (!dom.scaled_subset_of(dom, lam)) {
                ok = false;
                break;
            }
        }
        if (ok) return {true, lam, false};
    }
    for (RAECondition cond : {RAECondition::Plus, RAECondition::Minus}) {
        if (rae_check(loss, cond).holds)
            return {true, cond == RAECondition::Plus ? 2.0 : 0.5, true};
    }
    return {false, 0.0, false};
}

AssumptionReport assumption_report(const MarketModel& model, const LossSpec& loss) {
    AssumptionReport rep;
    rep.structural = validate_model(model, loss);

    rep.losses_monotone = !loss.v.empty();
    for (const auto& V : loss.v)
        if (!V.nondecreasing() || std::abs(V.value_clamped(0.0, 1e-9)) > 1e-9 ||
            !(V.recession().value(1.0) > 0.0))
            rep.losses_monotone = false;

    rep.linearity = linearity_check(model, loss);
    rep.scaling = scaling_domain_check(loss, *model.tree);

    DualCertificate cert = solve_dual(model, loss, ClaimProcess::zero(model.tree, 1));
    rep.dual_probe = cert.value;
    rep.dual_feasible = cert.feasible && std::isfinite(cert.value);

    rep.all_pass = rep.structural.ok() && rep.losses_monotone && rep.linearity.is_linear &&
                   rep.scaling.holds && rep.dual_feasible;
    return rep;
}

}  // namespace illiq
