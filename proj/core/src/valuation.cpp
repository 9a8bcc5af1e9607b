#include "illiq/valuation.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "dual_detail.hpp"

namespace illiq {

namespace {

constexpr double kAlphaTol = 1e-10;  // bisection resolution on the rate
constexpr int kMaxExpand = 200;

using Fn = std::function<double(double)>;

double phi_value(const MarketModel& model, const LossSpec& loss, const ClaimProcess& c) {
    return solve_alm(model, loss, c).value;
}

/// Bracket-then-golden minimisation of a unimodal f around a finite anchor.
/// Returns the best point seen and its value.
std::pair<double, double> minimize_convex(const Fn& f, double anchor, double scale) {
    double m = anchor, fm = f(m);
    for (int k = 0; k < 60 && !std::isfinite(fm); ++k) {
        const double off = scale * std::pow(2.0, k);
        m = anchor + off;
        fm = f(m);
        if (!std::isfinite(fm)) {
            m = anchor - off;
            fm = f(m);
        }
    }
    if (fm == kInf) return {anchor, kInf};
    if (fm == -kInf) return {m, -kInf};

    double a = m - scale, b = m + scale;
    double fa = f(a), fb = f(b);
    double step = scale;
    for (int k = 0; k < kMaxExpand && fa < fm; ++k) {
        b = m;
        fb = fm;
        m = a;
        fm = fa;
        step *= 2.0;
        a -= step;
        fa = f(a);
    }
    step = scale;
    for (int k = 0; k < kMaxExpand && fb < fm; ++k) {
        a = m;
        fa = fm;
        m = b;
        fm = fb;
        step *= 2.0;
        b += step;
        fb = f(b);
    }

    double bx = m, bf = fm;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 300 && b - a > 1e-9 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
        if (f1 < bf) {
            bx = x1;
            bf = f1;
        }
        if (f2 < bf) {
            bx = x2;
            bf = f2;
        }
        if (!std::isfinite(f1) && !std::isfinite(f2)) {
            // both probes out of domain: shrink around the best point seen
            const double r = 0.35 * (b - a);
            a = std::max(a, bx - r);
            b = std::min(b, bx + r);
            x1 = b - gr * (b - a);
            x2 = a + gr * (b - a);
            f1 = f(x1);
            f2 = f(x2);
            continue;
        }
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = f(x2);
        }
    }
    if (f1 < bf) {
        bx = x1;
        bf = f1;
    }
    if (f2 < bf) {
        bx = x2;
        bf = f2;
    }
    return {bx, bf};
}

struct CrossOutcome {
    double alpha = 0.0;
    ValuationStatus status = ValuationStatus::Ok;
    double lo = 0.0, hi = 0.0;
};

/// Leftmost alpha with g(alpha) <= level for convex g.  monotone marks g as
/// nonincreasing, which allows a doubling search upward; otherwise the
/// minimiser is located first.  certify_down classifies an unbounded-below
/// sublevel set.
CrossOutcome leftmost_crossing(const Fn& g, double level, double lo_seed, double hi_seed,
                               bool monotone,
                               const std::function<ValuationStatus()>& certify_down) {
    const double slack = 1e-8 * (1.0 + std::abs(level));
    CrossOutcome out;

    double hi = 0.0;
    bool have = false;
    if (monotone) {
        double a = std::isfinite(hi_seed) ? hi_seed : 0.0;
        double ga = g(a);
        if (ga <= level + slack) {
            hi = a;
            have = true;
        } else {
            double stride = 1.0 + std::abs(a);
            double prev = ga;
            for (int k = 0; k < kMaxExpand; ++k) {
                a += stride;
                stride *= 2.0;
                ga = g(a);
                if (ga <= level + slack) {
                    hi = a;
                    have = true;
                    break;
                }
                if (std::isfinite(ga) && std::isfinite(prev) &&
                    std::abs(prev - ga) <= 1e-9 * (1.0 + std::abs(ga))) {
                    out.alpha = kInf;  // flattened out above the level
                    return out;
                }
                prev = ga;
            }
            if (!have) {
                out.alpha = kInf;
                out.status = ValuationStatus::NoBracket;
                return out;
            }
        }
    } else {
        const double anchor = std::isfinite(hi_seed) ? hi_seed
                              : std::isfinite(lo_seed) ? lo_seed
                                                       : 0.0;
        const auto [xm, fm] = minimize_convex(g, anchor, 1.0 + std::abs(anchor));
        if (fm > level + slack) {
            out.alpha = kInf;  // empty sublevel set
            return out;
        }
        hi = xm;
        have = true;
    }

    double lo = std::isfinite(lo_seed) ? std::min(lo_seed, hi) : hi;
    double stride = 1.0 + std::abs(lo);
    bool bounded = false;
    for (int k = 0; k <= kMaxExpand; ++k) {
        if (g(lo) > level + slack) {
            bounded = true;
            break;
        }
        hi = std::min(hi, lo);
        lo -= stride;
        stride *= 2.0;
    }
    if (!bounded) {
        out.alpha = -kInf;
        out.status = certify_down();
        return out;
    }

    for (int it = 0; it < 200 && hi - lo > kAlphaTol * (1.0 + std::abs(lo) + std::abs(hi));
         ++it) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) <= level + slack)
            hi = mid;
        else
            lo = mid;
    }
    out.alpha = hi;
    out.lo = lo;
    out.hi = hi;
    return out;
}

ValuationResult negate_to_long(ValuationResult r) {
    r.side = Side::Long;
    r.value = -r.value;
    const double blo = -r.bracket_hi, bhi = -r.bracket_lo;
    r.bracket_lo = blo;
    r.bracket_hi = bhi;
    const double lo = -r.bound_hi, hi = -r.bound_lo;
    r.bound_lo = lo;
    r.bound_hi = hi;
    r.dual_bound = -r.dual_bound;
    for (auto& s : r.samples) s.first = -s.first;
    return r;
}

/// <c,q> - sigma_B(q) - sigma_C(q) at the constant density normalised to
/// <p,q> = 1; a weak-duality bound on the short value.
double sampled_dual_bound(const MarketModel& model, const LossSpec& loss,
                          const ClaimProcess& c, const ClaimProcess& p,
                          const ClaimProcess* cbar) {
    const int n = model.tree->num_nodes();
    const ClaimProcess one(model.tree, Eigen::MatrixXd::Ones(n, 1));
    const double mass = pairing(p, one);
    if (!(std::abs(mass) > 1e-12)) return std::numeric_limits<double>::quiet_NaN();
    const ClaimProcess q = one * (1.0 / mass);
    const double sb = support_B(model, loss, q, cbar);
    if (sb == kInf) return -kInf;
    const ConjugateResult sc = support_C(model, q);
    if (!std::isfinite(sc.value)) return -kInf;
    return pairing(c, q) - sb - sc.value;
}

std::function<ValuationStatus()> down_certifier(const MarketModel& model, const LossSpec& loss,
                                                const ClaimProcess& p) {
    return [&model, &loss, p]() -> ValuationStatus {
        if (recession_membership(model, p).member)
            return ValuationStatus::PremiumInRecessionCone;
        const auto rec = recession_model(model, loss);
        if (solve_alm(rec.first, rec.second, p).value <= 1e-9)
            return ValuationStatus::Unbounded;
        return ValuationStatus::NoBracket;
    };
}

ValuationResult accounting_short(const MarketModel& model, const LossSpec& loss,
                                 const ClaimProcess& c) {
    const ClaimProcess p0 = numeraire_premium(model.tree);
    ValuationResult res;
    res.bound_lo = superhedge(model, c, p0, HedgeSide::Inf).value;
    res.bound_hi = superhedge(model, c, p0, HedgeSide::Sup).value;

    std::vector<std::pair<double, double>> log;
    const Fn g = [&](double a) {
        const double v = phi_value(model, loss, c - p0 * a);
        log.push_back({a, v});
        return v;
    };
    const CrossOutcome co =
        leftmost_crossing(g, 0.0, res.bound_lo, res.bound_hi, true,
                          down_certifier(model, loss, p0));
    res.value = co.alpha;
    res.status = co.status;
    res.bracket_lo = co.lo;
    res.bracket_hi = co.hi;
    if (res.status == ValuationStatus::NoBracket) res.samples = std::move(log);
    res.dual_bound = sampled_dual_bound(model, loss, c, p0, nullptr);
    return res;
}

ValuationResult swap_short(const MarketModel& model, const LossSpec& loss,
                           const ClaimProcess& cbar, const ClaimProcess& p,
                           const ClaimProcess& c) {
    const double level = phi_value(model, loss, cbar);
    if (!std::isfinite(level))
        throw std::invalid_argument("indifference_swap_rate: base position value not finite");

    ValuationResult res;
    res.bound_lo = superhedge(model, c, p, HedgeSide::Inf, true).value;
    res.bound_hi = superhedge(model, c, p, HedgeSide::Sup, true).value;

    const ClaimProcess c_eff = cbar + c;
    std::vector<std::pair<double, double>> log;
    const Fn g = [&](double a) {
        const double v = phi_value(model, loss, c_eff - p * a);
        log.push_back({a, v - level});
        return v;
    };
    const CrossOutcome co = leftmost_crossing(g, level, res.bound_lo, res.bound_hi, false,
                                              down_certifier(model, loss, p));
    res.value = co.alpha;
    res.status = co.status;
    res.bracket_lo = co.lo;
    res.bracket_hi = co.hi;
    if (res.status == ValuationStatus::NoBracket) res.samples = std::move(log);
    res.dual_bound = sampled_dual_bound(model, loss, c, p, &cbar);
    return res;
}

/// sup { <c,q> : E V(c) <= 0 } solved from its definition; pwl losses only.
double acceptance_direct(const MarketModel& model, const LossSpec& loss,
                         const ClaimProcess& q) {
    const ScenarioTree& tree = *model.tree;
    LpBuilder lp;
    std::vector<std::pair<int, double>> budget;
    for (int node = 0; node < tree.num_nodes(); ++node) {
        const double P = tree.prob(node);
        const int cv = lp.add_var(-kInf, kInf, -P * q.scalar(node));
        const int zv = lp.add_var(-kInf, kInf);
        budget.push_back({zv, P});
        detail::add_pwl_epigraph(lp, zv, cv, loss.v[tree.time(node)]);
    }
    lp.add_row(LpBuilder::Sense::LE, 0.0, budget);
    const LpSolution sol = solve_lp(lp.build());
    if (sol.status == LpSolution::Status::Optimal) return -sol.objective;
    if (sol.status == LpSolution::Status::Unbounded) return kInf;
    throw std::runtime_error("acceptance set support: defining program failed");
}

}  // namespace

ClaimProcess numeraire_premium(const std::shared_ptr<const ScenarioTree>& tree) {
    if (!tree) throw std::invalid_argument("numeraire_premium: null tree");
    ClaimProcess p = ClaimProcess::zero(tree, 1);
    p.at(tree->nodes_at(0).front(), 0) = 1.0;
    return p;
}

ValuationResult accounting_value(const MarketModel& model, const LossSpec& loss,
                                 const ClaimProcess& c, Side side) {
    if (!model.tree) throw std::invalid_argument("accounting_value: model has no tree");
    if (c.dim() != 1 || c.tree().get() != model.tree.get())
        throw std::invalid_argument(
            "accounting_value: claim must be a scalar process on the model tree");
    if (side == Side::Short) return accounting_short(model, loss, c);
    return negate_to_long(accounting_short(model, loss, c * -1.0));
}

ValuationResult indifference_swap_rate(const MarketModel& model, const LossSpec& loss,
                                       const ClaimProcess& cbar, const ClaimProcess& p,
                                       const ClaimProcess& c, Side side) {
    if (!model.tree) throw std::invalid_argument("indifference_swap_rate: model has no tree");
    if (c.dim() != 1 || c.tree().get() != model.tree.get() || cbar.dim() != 1 ||
        cbar.tree().get() != model.tree.get() || p.dim() != 1 ||
        p.tree().get() != model.tree.get())
        throw std::invalid_argument(
            "indifference_swap_rate: claims must be scalar processes on the model tree");
    if (side == Side::Short) return swap_short(model, loss, cbar, p, c);
    return negate_to_long(swap_short(model, loss, cbar, p, c * -1.0));
}

double support_B(const MarketModel& model, const LossSpec& loss, const ClaimProcess& q,
                 const ClaimProcess* cbar) {
    if (!model.tree) throw std::invalid_argument("support_B: model has no tree");
    const ScenarioTree& tree = *model.tree;
    if (q.dim() != 1 || q.tree().get() != model.tree.get())
        throw std::invalid_argument("support_B: q must be a scalar process on the model tree");
    if (static_cast<int>(loss.v.size()) != tree.horizon() + 1)
        throw std::invalid_argument("support_B: need one loss function per time");

    for (int node = 0; node < tree.num_nodes(); ++node) {
        if (q.scalar(node) < 0.0) return kInf;
    }
    std::vector<ConvexFunction> conj;
    bool all_pwl = true;
    conj.reserve(loss.v.size());
    for (const auto& v : loss.v) {
        conj.push_back(v.conjugate());
        all_pwl = all_pwl && v.is_pwl();
    }

    // the feasible scale range from the conjugate loss domains
    double alo = 0.0, ahi = kInf;
    for (int node = 0; node < tree.num_nodes(); ++node) {
        const Interval dom = conj[tree.time(node)].domain();
        const double qn = q.scalar(node);
        if (dom.hi <= 0.0) {
            if (qn > 0.0) return kInf;
        } else if (dom.hi < kInf) {
            alo = std::max(alo, qn / dom.hi);
        }
        if (dom.lo > 0.0) {
            if (qn <= 0.0) return kInf;
            ahi = std::min(ahi, qn / dom.lo);
        }
    }
    if (ahi <= 0.0 || ahi < alo * (1.0 - 1e-12)) return kInf;

    const double thr = cbar ? phi_value(model, loss, *cbar) : 0.0;
    if (!std::isfinite(thr))
        throw std::invalid_argument("support_B: base position value not finite");

    const Fn h = [&](double t) {
        const double a = std::exp(t);
        if (a < alo * (1.0 - 1e-12) || a > ahi * (1.0 + 1e-12)) return kInf;
        const double ev = expected_loss_conjugate(tree, loss, q * (1.0 / a));
        if (ev == kInf) return kInf;
        return a * (ev + thr);
    };
    const double lo_t = std::max(std::log(std::max(alo, 1e-20)), -46.0);
    const double hi_t = std::min(ahi < kInf ? std::log(ahi) : 46.0, 46.0);
    const double t0 = std::min(std::max(0.0, lo_t), hi_t);
    const auto [tm, hm] = minimize_convex(h, t0, 1.0);
    (void)tm;
    double value = hm;
    if (std::isfinite(value) && cbar) value -= pairing(*cbar, q);

    if (!cbar && all_pwl) {
        const double direct = acceptance_direct(model, loss, q);
        const bool both = std::isfinite(direct) && std::isfinite(value);
        if ((std::isfinite(direct) != std::isfinite(value)) ||
            (both && std::abs(direct - value) > 1e-5 * (1.0 + std::abs(direct))))
            throw std::runtime_error("support_B: cross-check mismatch");
        return direct;
    }
    return value;
}

DualBound dual_valuation_bound(const MarketModel& model, const LossSpec& loss,
                               const ClaimProcess& c, const ClaimProcess& p,
                               const ClaimProcess* cbar) {
    if (!model.tree) throw std::invalid_argument("dual_valuation_bound: model has no tree");
    const ScenarioTree& tree = *model.tree;
    if (c.dim() != 1 || c.tree().get() != model.tree.get() || p.dim() != 1 ||
        p.tree().get() != model.tree.get())
        throw std::invalid_argument(
            "dual_valuation_bound: claims must be scalar processes on the model tree");
    if (static_cast<int>(loss.v.size()) != tree.horizon() + 1)
        throw std::invalid_argument("dual_valuation_bound: need one loss function per time");

    DualBound out;
    if (recession_membership(model, p).member) {
        out.status = ValuationStatus::ConditionFailed;
        out.value = -kInf;
        return out;
    }
    const double thr = cbar ? phi_value(model, loss, *cbar) : 0.0;
    if (!std::isfinite(thr))
        throw std::invalid_argument("dual_valuation_bound: base position value not finite");

    detail::WAssembly wa;
    detail::assemble_w_problem(model, nullptr, wa);
    const int avar = wa.lp.add_var(0.0, kInf, thr);

    std::vector<ConvexFunction> vconj;
    vconj.reserve(loss.v.size());
    for (const auto& v : loss.v) vconj.push_back(v.conjugate());

    struct SmoothLoss {
        int node = 0, zvar = -1;
        double last_d = kInf;
    };
    std::vector<SmoothLoss> smooth_loss;
    std::vector<std::pair<int, double>> norm_row;
    for (int node = 0; node < tree.num_nodes(); ++node) {
        const double P = tree.prob(node);
        const int qv = wa.qvar[node];
        const int zv = wa.lp.add_var(-kInf, kInf, P);
        wa.lp.add_cost(qv, -P * (c.scalar(node) + (cbar ? cbar->scalar(node) : 0.0)));
        norm_row.push_back({qv, P * p.scalar(node)});
        const ConvexFunction& V = loss.v[tree.time(node)];
        const ConvexFunction& vc = vconj[tree.time(node)];
        if (vc.is_pwl()) {
            // exact perspective of V*: epigraph pieces and domain rows scale
            // with the acceptance variable
            for (const AffinePiece& pc : affine_pieces(vc)) {
                wa.lp.add_row(LpBuilder::Sense::GE, 0.0,
                              {{zv, 1.0}, {qv, -pc.slope}, {avar, -pc.offset}});
            }
            const Interval dom = vc.domain();
            if (dom.hi < kInf)
                wa.lp.add_row(LpBuilder::Sense::LE, 0.0, {{qv, 1.0}, {avar, -dom.hi}});
            if (dom.lo > -kInf)
                wa.lp.add_row(LpBuilder::Sense::GE, 0.0, {{qv, 1.0}, {avar, -dom.lo}});
        } else {
            detail::add_perspective_cut(wa.lp, zv, qv, avar, V, 0.0);
            detail::add_perspective_cut(wa.lp, zv, qv, avar, V,
                                        detail::clamp_into(V.domain(), 1.0));
            detail::add_perspective_cut(wa.lp, zv, qv, avar, V,
                                        detail::clamp_into(V.domain(), -1.0));
            smooth_loss.push_back({node, zv, kInf});
        }
    }
    wa.lp.add_row(LpBuilder::Sense::EQ, 1.0, norm_row);

    const bool exact = wa.smooth_cost.empty() && smooth_loss.empty();
    double best_value = -kInf;
    ClaimProcess best_q;
    for (int round = 0;; ++round) {
        const LpSolution sol = solve_lp(wa.lp.build());
        if (sol.status == LpSolution::Status::Unbounded) {
            out.value = kInf;
            return out;
        }
        if (sol.status == LpSolution::Status::Infeasible) {
            out.value = -kInf;
            return out;
        }
        if (sol.status != LpSolution::Status::Optimal)
            throw std::runtime_error("dual_valuation_bound: LP did not converge");

        ClaimProcess qhat = ClaimProcess::zero(model.tree, 1);
        for (int node = 0; node < tree.num_nodes(); ++node)
            qhat.at(node, 0) = std::max(0.0, sol.x[wa.qvar[node]]);
        if (exact) {
            out.value = -sol.objective;
            out.q = std::move(qhat);
            return out;
        }

        const ClaimProcess what = detail::extract_w(wa, model, sol);
        const double sb = support_B(model, loss, qhat, cbar);
        const auto [cost_term, constr_term] = detail::certificate_terms(model, qhat, what);
        double value = -kInf;
        if (sb < kInf && cost_term < kInf && constr_term < kInf)
            value = pairing(c, qhat) - sb - cost_term - constr_term;
        if (value > best_value || round == 0) {
            best_value = value;
            best_q = std::move(qhat);
        }
        const double bound = -sol.objective;
        if ((std::isfinite(best_value) &&
             bound - best_value <= detail::kGapTol * (1.0 + std::abs(best_value))) ||
            round >= detail::kMaxCutRounds) {
            out.value = best_value;
            out.q = std::move(best_q);
            return out;
        }

        const double ahat = sol.x[avar];
        for (auto& sc : wa.smooth_cost) {
            const ConvexFunction& phi = model.cost(sc.node, sc.asset);
            const double qh = sol.x[wa.qvar[sc.node]];
            const double wh = sol.x[wa.wvar[sc.node][sc.asset]];
            const double d = detail::perspective_anchor(phi, wh, qh);
            if (!std::isfinite(d)) continue;
            if (std::abs(d - sc.last_w) <= 1e-12 * (1.0 + std::abs(d)) && qh == sc.last_q)
                continue;
            sc.last_w = d;
            sc.last_q = qh;
            detail::add_perspective_cut(wa.lp, sc.svar, wa.wvar[sc.node][sc.asset],
                                        wa.qvar[sc.node], phi, d);
        }
        for (auto& sl : smooth_loss) {
            const ConvexFunction& V = loss.v[tree.time(sl.node)];
            const double qh = sol.x[wa.qvar[sl.node]];
            const double d = detail::perspective_anchor(V, qh, ahat);
            if (!std::isfinite(d)) continue;
            if (std::abs(d - sl.last_d) <= 1e-12 * (1.0 + std::abs(d))) continue;
            sl.last_d = d;
            detail::add_perspective_cut(wa.lp, sl.zvar, wa.qvar[sl.node], avar, V, d);
        }
    }
}

}  // namespace illiq
