#include "illiq/dual.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dual_detail.hpp"

namespace illiq {

namespace detail {

double clamp_into(const Interval& dom, double x) {
    return std::min(std::max(x, dom.lo), dom.hi);
}

double cut_slope(const ConvexFunction& f, double x) {
    const Interval sd = f.subdifferential(x);
    if (std::isfinite(sd.lo) && std::isfinite(sd.hi)) return 0.5 * (sd.lo + sd.hi);
    if (std::isfinite(sd.hi)) return sd.hi;
    if (std::isfinite(sd.lo)) return sd.lo;
    return std::numeric_limits<double>::quiet_NaN();
}

double interval_dist(const Interval& iv, double v) {
    return std::max({iv.lo - v, v - iv.hi, 0.0});
}

Eigen::VectorXd cond_dw(const ScenarioTree& tree, const ClaimProcess& w, int node) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(w.dim());
    for (int child : tree.children(node)) {
        for (int j = 0; j < w.dim(); ++j) v[j] += tree.cond_prob(child) * w(child, j);
    }
    for (int j = 0; j < w.dim(); ++j) v[j] -= w(node, j);
    return v;
}

double tolerant_support(const Polyhedron& D, const Eigen::VectorXd& v, double eps) {
    const Eigen::Index J = v.size();
    if (D.rows() == 0) return v.cwiseAbs().maxCoeff() <= eps ? 0.0 : kInf;
    LpBuilder lp;
    std::vector<int> nu;
    nu.reserve(static_cast<std::size_t>(D.rows()));
    for (Eigen::Index r = 0; r < D.rows(); ++r) nu.push_back(lp.add_var(0.0, kInf, D.b[r]));
    for (Eigen::Index j = 0; j < J; ++j) {
        std::vector<std::pair<int, double>> terms;
        for (Eigen::Index r = 0; r < D.rows(); ++r) {
            if (D.A(r, j) != 0.0) terms.push_back({nu[static_cast<std::size_t>(r)], D.A(r, j)});
        }
        lp.add_row(LpBuilder::Sense::GE, v[j] - eps, terms);
        lp.add_row(LpBuilder::Sense::LE, v[j] + eps, terms);
    }
    const LpSolution sol = solve_lp(lp.build());
    if (sol.status == LpSolution::Status::Optimal) return sol.objective;
    if (sol.status == LpSolution::Status::Infeasible) return kInf;
    throw std::runtime_error("support evaluation did not converge");
}

std::pair<double, double> certificate_terms(const MarketModel& model, const ClaimProcess& q,
                                            const ClaimProcess& w) {
    const ScenarioTree& tree = *model.tree;
    double cost = 0.0, constr = 0.0;
    for (int node = 0; node < tree.num_nodes(); ++node) {
        const double qn = std::max(0.0, q.scalar(node));
        for (int j = 0; j < model.assets; ++j) {
            const ConvexFunction conj = model.cost(node, j).scaled(qn).conjugate();
            cost += tree.prob(node) * conj.value_clamped(w(node, j), 1e-7);
            if (cost == kInf) return {kInf, constr};
        }
        if (!tree.is_leaf(node)) {
            const Eigen::VectorXd v = cond_dw(tree, w, node);
            const double eps = 1e-8 * (1.0 + v.cwiseAbs().maxCoeff());
            constr += tree.prob(node) * tolerant_support(model.constraint(node), v, eps);
            if (constr == kInf) return {cost, kInf};
        }
    }
    return {cost, constr};
}

void add_pwl_epigraph(LpBuilder& lp, int svar, int v, const ConvexFunction& g) {
    for (const AffinePiece& pc : affine_pieces(g)) {
        lp.add_row(LpBuilder::Sense::GE, pc.offset, {{svar, 1.0}, {v, -pc.slope}});
    }
    const Interval dom = g.domain();
    if (dom.lo > -kInf) lp.add_row(LpBuilder::Sense::GE, dom.lo, {{v, 1.0}});
    if (dom.hi < kInf) lp.add_row(LpBuilder::Sense::LE, dom.hi, {{v, 1.0}});
}

void add_perspective_cut(LpBuilder& lp, int svar, int wv, int qv, const ConvexFunction& f,
                         double d) {
    if (!std::isfinite(d)) return;
    const double fd = f.value_clamped(d, 1e-9);
    if (!std::isfinite(fd)) return;
    lp.add_row(LpBuilder::Sense::GE, 0.0, {{svar, 1.0}, {wv, -d}, {qv, fd}});
}

double perspective_anchor(const ConvexFunction& f, double num, double den) {
    if (den > 1e-12) {
        const ConvexFunction conj = f.conjugate();
        return cut_slope(conj, clamp_into(conj.domain(), num / den));
    }
    const ConvexFunction sig = f.scaled(0.0).conjugate();
    return cut_slope(sig, clamp_into(sig.domain(), num));
}

void assemble_w_problem(const MarketModel& model, const ClaimProcess* fixed_q, WAssembly& wa) {
    const ScenarioTree& tree = *model.tree;
    const int n = tree.num_nodes();
    const int J = model.assets;
    wa.wvar.assign(n, {});
    wa.conj.assign(n, {});
    for (int node = 0; node < n; ++node) {
        wa.wvar[node].reserve(J);
        for (int j = 0; j < J; ++j) wa.wvar[node].push_back(wa.lp.add_var(-kInf, kInf));
    }
    if (!fixed_q) {
        wa.qvar.resize(n);
        for (int node = 0; node < n; ++node) wa.qvar[node] = wa.lp.add_var(0.0, kInf);
    }
    for (int node = 0; node < n; ++node) {
        const double P = tree.prob(node);
        for (int j = 0; j < J; ++j) {
            const ConvexFunction& phi = model.cost(node, j);
            const int wv = wa.wvar[node][j];
            if (fixed_q) {
                const double qn = std::max(0.0, fixed_q->scalar(node));
                ConvexFunction conj = phi.scaled(qn).conjugate();
                const int sv = wa.lp.add_var(-kInf, kInf, P);
                if (conj.is_pwl()) {
                    add_pwl_epigraph(wa.lp, sv, wv, conj);
                } else {
                    // floor: inf of a conjugate is -f(0) = 0 for costs
                    wa.lp.add_row(LpBuilder::Sense::GE, -qn * phi.value_clamped(0.0, 1e-9),
                                  {{sv, 1.0}});
                    const double w0 = clamp_into(conj.domain(), qn * cut_slope(phi, 0.0));
                    const double g = cut_slope(conj, w0);
                    if (std::isfinite(g)) {
                        wa.lp.add_row(LpBuilder::Sense::GE, conj.value(w0) - g * w0,
                                      {{sv, 1.0}, {wv, -g}});
                    }
                    wa.smooth_cost.push_back({node, j, sv, kInf, kInf});
                }
                wa.conj[node].push_back(std::move(conj));
            } else {
                const int qv = wa.qvar[node];
                if (phi.is_pwl()) {
                    // exact joint epigraph: for pieces (sigma_k, o_k) of phi
                    // on dom [lo, hi],
                    //   (q phi)*(w) = min sum lam_k (-o_k) + mu_hi hi - mu_lo lo
                    //     s.t. sum lam_k sigma_k + mu_hi - mu_lo = w,
                    //          sum lam_k = q,   lam, mu >= 0.
                    const Interval dom = phi.domain();
                    std::vector<std::pair<int, double>> wrow, qrow;
                    for (const AffinePiece& pc : affine_pieces(phi)) {
                        const int lam = wa.lp.add_var(0.0, kInf, P * -pc.offset);
                        if (pc.slope != 0.0) wrow.push_back({lam, pc.slope});
                        qrow.push_back({lam, 1.0});
                    }
                    if (dom.hi < kInf) wrow.push_back({wa.lp.add_var(0.0, kInf, P * dom.hi), 1.0});
                    if (dom.lo > -kInf)
                        wrow.push_back({wa.lp.add_var(0.0, kInf, P * -dom.lo), -1.0});
                    wrow.push_back({wv, -1.0});
                    qrow.push_back({qv, -1.0});
                    wa.lp.add_row(LpBuilder::Sense::EQ, 0.0, wrow);
                    wa.lp.add_row(LpBuilder::Sense::EQ, 0.0, qrow);
                } else {
                    const int sv = wa.lp.add_var(-kInf, kInf, P);
                    add_perspective_cut(wa.lp, sv, wv, qv, phi, 0.0);  // floor s >= -phi(0) q
                    add_perspective_cut(wa.lp, sv, wv, qv, phi,
                                        clamp_into(phi.domain(), 1.0));
                    add_perspective_cut(wa.lp, sv, wv, qv, phi,
                                        clamp_into(phi.domain(), -1.0));
                    wa.smooth_cost.push_back({node, j, sv, kInf, kInf});
                }
            }
        }
        if (!tree.is_leaf(node)) {
            const Polyhedron& D = model.constraint(node);
            std::vector<int> nu;
            nu.reserve(static_cast<std::size_t>(D.rows()));
            for (Eigen::Index r = 0; r < D.rows(); ++r)
                nu.push_back(wa.lp.add_var(0.0, kInf, P * D.b[r]));
            for (int j = 0; j < J; ++j) {
                std::vector<std::pair<int, double>> terms;
                for (int child : tree.children(node))
                    terms.push_back({wa.wvar[child][j], tree.cond_prob(child)});
                terms.push_back({wa.wvar[node][j], -1.0});
                for (Eigen::Index r = 0; r < D.rows(); ++r) {
                    if (D.A(r, j) != 0.0)
                        terms.push_back({nu[static_cast<std::size_t>(r)], -D.A(r, j)});
                }
                wa.lp.add_row(LpBuilder::Sense::EQ, 0.0, terms);
            }
        }
    }
}

ClaimProcess extract_w(const WAssembly& wa, const MarketModel& model, const LpSolution& sol) {
    ClaimProcess w(model.tree, model.assets);
    for (int node = 0; node < model.tree->num_nodes(); ++node) {
        for (int j = 0; j < model.assets; ++j) w.at(node, j) = sol.x[wa.wvar[node][j]];
    }
    return w;
}

}  // namespace detail

namespace {

using detail::clamp_into;
using detail::cut_slope;
using detail::interval_dist;
using detail::kGapTol;
using detail::kMaxCutRounds;
using detail::WAssembly;

constexpr double kCertTol = 1e-6;  // certificate gap acceptance
constexpr double kOptTol = 1e-7;   // saddle-point residual tolerance

/// inf over w of E sum [(q S)*(w) + sigma_D(E dw)] for fixed q >= 0.
ConjugateResult w_minimisation(const MarketModel& model, const ClaimProcess& q) {
    const ScenarioTree& tree = *model.tree;
    for (int node = 0; node < tree.num_nodes(); ++node) {
        if (q.scalar(node) < 0.0) return {kInf, {}, false};
    }
    WAssembly wa;
    detail::assemble_w_problem(model, &q, wa);

    ConjugateResult best{kInf, {}, false};
    for (int round = 0;; ++round) {
        const LpSolution sol = solve_lp(wa.lp.build());
        if (sol.status == LpSolution::Status::Infeasible) return {kInf, {}, false};
        if (sol.status != LpSolution::Status::Optimal) return {-kInf, {}, false};

        if (wa.smooth_cost.empty())
            return {sol.objective, detail::extract_w(wa, model, sol), true};

        // true value of the current w
        ClaimProcess w = detail::extract_w(wa, model, sol);
        double ub = sol.objective;
        for (const auto& sc : wa.smooth_cost) {
            ub -= tree.prob(sc.node) * sol.x[sc.svar];
            ub += tree.prob(sc.node) *
                  wa.conj[sc.node][sc.asset].value_clamped(w(sc.node, sc.asset), 1e-7);
            if (ub == kInf) break;
        }
        if (ub < best.value) best = {ub, std::move(w), false};
        if (std::isfinite(best.value) &&
            best.value - sol.objective <= kGapTol * std::max(1.0, std::abs(best.value))) {
            best.attained = true;
            return best;
        }
        if (round >= kMaxCutRounds) return best;

        for (auto& sc : wa.smooth_cost) {
            const ConvexFunction& conj = wa.conj[sc.node][sc.asset];
            const double pt = clamp_into(conj.domain(), sol.x[wa.wvar[sc.node][sc.asset]]);
            if (std::abs(pt - sc.last_w) <= 1e-12 * (1.0 + std::abs(pt))) continue;
            sc.last_w = pt;
            const double g = cut_slope(conj, pt);
            const double val = conj.value_clamped(pt, 1e-9);
            if (!std::isfinite(g) || !std::isfinite(val)) continue;
            wa.lp.add_row(LpBuilder::Sense::GE, val - g * pt,
                          {{sc.svar, 1.0}, {wa.wvar[sc.node][sc.asset], -g}});
        }
    }
}

}  // namespace

double expected_loss_conjugate(const ScenarioTree& tree, const LossSpec& loss,
                               const ClaimProcess& q) {
    if (static_cast<int>(loss.v.size()) != tree.horizon() + 1)
        throw std::invalid_argument("expected_loss_conjugate: need one loss per time");
    std::vector<ConvexFunction> conj;
    conj.reserve(loss.v.size());
    for (const auto& v : loss.v) conj.push_back(v.conjugate());
    double total = 0.0;
    for (int node = 0; node < tree.num_nodes(); ++node) {
        total += tree.prob(node) * conj[tree.time(node)].value_clamped(q.scalar(node), 1e-7);
        if (total == kInf) return kInf;
    }
    return total;
}

ConjugateResult support_C(const MarketModel& model, const ClaimProcess& q) {
    if (!model.tree) throw std::invalid_argument("support_C: model has no tree");
    if (q.dim() != 1 || q.tree().get() != model.tree.get())
        throw std::invalid_argument("support_C: q must be a scalar process on the model tree");
    return w_minimisation(model, q);
}

ConjugateResult conjugate_phi(const MarketModel& model, const LossSpec& loss,
                              const ClaimProcess& q) {
    if (!model.tree) throw std::invalid_argument("conjugate_phi: model has no tree");
    if (q.dim() != 1 || q.tree().get() != model.tree.get())
        throw std::invalid_argument("conjugate_phi: q must be a scalar process on the model tree");
    const double ev = expected_loss_conjugate(*model.tree, loss, q);
    if (ev == kInf) return {kInf, {}, false};
    ConjugateResult r = w_minimisation(model, q);
    if (std::isfinite(r.value)) r.value += ev;
    return r;
}

DualCertificate solve_dual(const MarketModel& model, const LossSpec& loss,
                           const ClaimProcess& c) {
    AlmDetailed det = solve_alm_detailed(model, loss, c);
    const ScenarioTree& tree = *model.tree;

    DualCertificate cert;
    cert.primal_value = det.primal.value;
    if (det.primal.status != SolveStatus::Optimal) {
        cert.feasible = false;
        cert.gap = kInf;
        return cert;
    }
    const AlmReduction& red = det.reduction;
    const LpSolution& sol = det.lp;

    cert.q = ClaimProcess::zero(model.tree, 1);
    cert.w = ClaimProcess::zero(model.tree, model.assets);
    for (int node = 0; node < tree.num_nodes(); ++node) {
        const double P = tree.prob(node);
        cert.q.at(node, 0) = std::max(0.0, red.lp.dual(sol, red.budget[node]) / P);
        for (int j = 0; j < model.assets; ++j) {
            double mass = 0.0;
            for (const auto& [row, weight] : red.wsrc[node][j]) {
                if (weight != 0.0) mass += weight * red.lp.dual(sol, row);
            }
            cert.w.at(node, j) = mass / P;
        }
    }

    cert.ev_star = expected_loss_conjugate(tree, loss, cert.q);
    const auto [cost_term, constr_term] = detail::certificate_terms(model, cert.q, cert.w);
    cert.cost_term = cost_term;
    cert.constraint_term = constr_term;
    cert.feasible = std::isfinite(cert.ev_star) && std::isfinite(cost_term) &&
                    std::isfinite(constr_term);
    cert.value = cert.feasible
                     ? pairing(c, cert.q) - cert.ev_star - cost_term - constr_term
                     : -kInf;
    cert.gap = std::abs(cert.primal_value - cert.value);
    cert.attained =
        cert.feasible && cert.gap <= kCertTol * (1.0 + std::abs(cert.primal_value));
    return cert;
}

DualCertificate solve_dual_direct(const MarketModel& model, const LossSpec& loss,
                                  const ClaimProcess& c) {
    if (!model.tree) throw std::invalid_argument("solve_dual_direct: model has no tree");
    const ScenarioTree& tree = *model.tree;
    if (c.dim() != 1 || c.tree().get() != model.tree.get())
        throw std::invalid_argument(
            "solve_dual_direct: claim must be a scalar process on the model tree");
    if (static_cast<int>(loss.v.size()) != tree.horizon() + 1)
        throw std::invalid_argument("solve_dual_direct: need one loss function per time");

    WAssembly wa;
    detail::assemble_w_problem(model, nullptr, wa);
    std::vector<ConvexFunction> vconj;
    vconj.reserve(loss.v.size());
    for (const auto& v : loss.v) vconj.push_back(v.conjugate());

    struct SmoothLoss {
        int node = 0, evar = -1;
        double last_q = kInf;
    };
    std::vector<SmoothLoss> smooth_loss;
    for (int node = 0; node < tree.num_nodes(); ++node) {
        const double P = tree.prob(node);
        const ConvexFunction& vc = vconj[tree.time(node)];
        const int ev = wa.lp.add_var(-kInf, kInf, P);
        wa.lp.add_cost(wa.qvar[node], -P * c.scalar(node));
        if (vc.is_pwl()) {
            detail::add_pwl_epigraph(wa.lp, ev, wa.qvar[node], vc);
        } else {
            // floor: inf V* = -V(0) = 0 for a normalised loss
            wa.lp.add_row(LpBuilder::Sense::GE,
                          -loss.v[tree.time(node)].value_clamped(0.0, 1e-9), {{ev, 1.0}});
            const double q0 = clamp_into(vc.domain(), 1.0);
            const double g = cut_slope(vc, q0);
            if (std::isfinite(g)) {
                wa.lp.add_row(LpBuilder::Sense::GE, vc.value(q0) - g * q0,
                              {{ev, 1.0}, {wa.qvar[node], -g}});
            }
            smooth_loss.push_back({node, ev, kInf});
        }
    }

    DualCertificate cert;
    cert.primal_value = std::numeric_limits<double>::quiet_NaN();
    DualCertificate best = cert;
    best.value = -kInf;
    const bool exact = wa.smooth_cost.empty() && smooth_loss.empty();
    for (int round = 0;; ++round) {
        const LpSolution sol = solve_lp(wa.lp.build());
        if (sol.status == LpSolution::Status::Unbounded) {
            cert.value = kInf;  // dual unbounded: no finite primal value exists
            cert.gap = kInf;
            return cert;
        }
        if (sol.status != LpSolution::Status::Optimal) {
            cert.gap = kInf;
            return cert;
        }

        cert.q = ClaimProcess::zero(model.tree, 1);
        for (int node = 0; node < tree.num_nodes(); ++node)
            cert.q.at(node, 0) = std::max(0.0, sol.x[wa.qvar[node]]);
        cert.w = detail::extract_w(wa, model, sol);
        cert.ev_star = expected_loss_conjugate(tree, loss, cert.q);
        const auto [cost_term, constr_term] = detail::certificate_terms(model, cert.q, cert.w);
        cert.cost_term = cost_term;
        cert.constraint_term = constr_term;
        cert.feasible = std::isfinite(cert.ev_star) && std::isfinite(cost_term) &&
                        std::isfinite(constr_term);
        cert.value = cert.feasible
                         ? pairing(c, cert.q) - cert.ev_star - cost_term - constr_term
                         : -kInf;
        if (cert.value > best.value || round == 0) best = cert;

        // minimising the relaxed LP maximises the dual, so -objective bounds
        // the dual optimum from above
        const double bound = -sol.objective;
        best.gap = bound - best.value;
        if (exact || (std::isfinite(best.value) &&
                      best.gap <= kGapTol * (1.0 + std::abs(best.value)))) {
            best.attained = best.feasible;
            if (exact) best.gap = std::abs(best.gap);
            return best;
        }
        if (round >= kMaxCutRounds) return best;

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
            const ConvexFunction& vc = vconj[tree.time(sl.node)];
            const double pt = clamp_into(vc.domain(), sol.x[wa.qvar[sl.node]]);
            if (std::abs(pt - sl.last_q) <= 1e-12 * (1.0 + std::abs(pt))) continue;
            sl.last_q = pt;
            const double g = cut_slope(vc, pt);
            const double val = vc.value_clamped(pt, 1e-9);
            if (!std::isfinite(g) || !std::isfinite(val)) continue;
            wa.lp.add_row(LpBuilder::Sense::GE, val - g * pt,
                          {{sl.evar, 1.0}, {wa.qvar[sl.node], -g}});
        }
    }
}

OptimalityReport check_optimality(const MarketModel& model, const LossSpec& loss,
                                  const ClaimProcess& c, const PortfolioProcess& x,
                                  const DualCertificate& cert) {
    const ScenarioTree& tree = *model.tree;
    if (x.dim() != model.assets || x.tree().get() != model.tree.get())
        throw std::invalid_argument("check_optimality: strategy does not match the model");
    if (cert.q.tree().get() != model.tree.get() || cert.w.tree().get() != model.tree.get())
        throw std::invalid_argument("check_optimality: certificate does not match the model");

    OptimalityReport rep;
    rep.pass = true;
    // A pair with duality gap g pins the strategy down only to O(sqrt(g)) in
    // argument space, so the subdifferential checks use a window of that width.
    const double win = 1e-9 + 4.0 * std::sqrt(std::max(cert.gap, 0.0));
    for (int node = 0; node < tree.num_nodes(); ++node) {
        OptimalityReport::NodeCheck nc;
        nc.node = node;
        const double qn = cert.q.scalar(node);
        const int par = tree.parent(node);

        if (!tree.is_leaf(node)) {
            const Eigen::VectorXd v = detail::cond_dw(tree, cert.w, node);
            Eigen::VectorXd xn(model.assets);
            for (int j = 0; j < model.assets; ++j) xn[j] = x(node, j);
            const double eps = 1e-8 * (1.0 + v.cwiseAbs().maxCoeff());
            const double sup = detail::tolerant_support(model.constraint(node), v, eps);
            nc.holding_resid = sup == kInf ? kInf : sup - v.dot(xn);
            const double scale = 1.0 + v.cwiseAbs().maxCoeff() * xn.cwiseAbs().maxCoeff();
            nc.holding_ok = model.constraint(node).contains(xn, 1e-7) &&
                            nc.holding_resid <= kOptTol * scale;
        }

        double yhat = c.scalar(node);
        double cost_resid = 0.0;
        for (int j = 0; j < model.assets; ++j) {
            const ConvexFunction& phi = model.cost(node, j);
            double dx = model.theta(node, j) - (par < 0 ? 0.0 : x(par, j));
            if (!tree.is_leaf(node)) dx += x(node, j);
            const double pt = clamp_into(phi.domain(), dx);
            yhat += phi.value_clamped(dx, 1e-6);
            const Interval sd = phi.scaled(std::max(0.0, qn)).subdifferential_window(pt, win);
            cost_resid = std::max(cost_resid, interval_dist(sd, cert.w(node, j)));
        }
        nc.cost_resid = cost_resid;
        nc.cost_ok = cost_resid <= kOptTol * (1.0 + std::abs(qn));

        const ConvexFunction& V = loss.v[tree.time(node)];
        const double ypt = clamp_into(V.domain(), yhat);
        const double dom_miss = std::isfinite(yhat) ? std::abs(yhat - ypt) : kInf;
        if (dom_miss > win) {
            // The subdifferential is empty outside the domain, so the
            // stationarity test at the clamped point would be vacuous.
            nc.loss_resid = dom_miss;
            nc.loss_ok = false;
        } else {
            nc.loss_resid = interval_dist(V.subdifferential_window(ypt, win), qn);
            nc.loss_ok = nc.loss_resid <= kOptTol * (1.0 + std::abs(qn));
        }

        rep.pass = rep.pass && nc.holding_ok && nc.loss_ok && nc.cost_ok;
        rep.nodes.push_back(std::move(nc));
    }
    return rep;
}

ShadowPriceReport shadow_prices(const MarketModel& model, const DualCertificate& cert,
                                const PortfolioProcess& x) {
    const ScenarioTree& tree = *model.tree;
    if (cert.q.tree().get() != model.tree.get())
        throw std::invalid_argument("shadow_prices: certificate does not match the model");
    bool any = false;
    for (int node = 0; node < tree.num_nodes(); ++node) {
        if (cert.q.scalar(node) > 1e-12) any = true;
    }
    if (!any) throw std::invalid_argument("shadow_prices: degenerate dual, q vanishes");

    ShadowPriceReport rep;
    const double wscale = 1.0 + cert.w.values().cwiseAbs().maxCoeff();
    rep.max_resid = 0.0;
    bool sup_ok = true, mart_ok = true;
    for (int node = 0; node < tree.num_nodes(); ++node) {
        ShadowPriceReport::Node rec;
        rec.node = node;
        const double qn = cert.q.scalar(node);
        const int par = tree.parent(node);
        if (qn > 1e-12) {
            rec.defined = true;
            rec.price.resize(model.assets);
            rec.in_conjugate_domain = true;
            rec.complementary = true;
            for (int j = 0; j < model.assets; ++j) {
                const ConvexFunction& phi = model.cost(node, j);
                const double s = cert.w(node, j) / qn;
                rec.price[j] = s;
                const double tol = 1e-7 * (1.0 + std::abs(s));
                if (interval_dist(phi.conjugate_domain(), s) > tol)
                    rec.in_conjugate_domain = false;
                double dx = model.theta(node, j) - (par < 0 ? 0.0 : x(par, j));
                if (!tree.is_leaf(node)) dx += x(node, j);
                const Interval marginal =
                    phi.subdifferential_window(clamp_into(phi.domain(), dx), 1e-9);
                if (interval_dist(marginal, s) > tol) rec.complementary = false;
            }
        }
        if (!tree.is_leaf(node)) {
            const Eigen::VectorXd v = detail::cond_dw(tree, cert.w, node);
            rep.max_resid = std::max(rep.max_resid, v.cwiseAbs().maxCoeff());
            for (int j = 0; j < model.assets; ++j) {
                if (v[j] > 1e-7 * wscale) sup_ok = false;
                if (std::abs(v[j]) > 1e-7 * wscale) mart_ok = false;
            }
        }
        rep.nodes.push_back(std::move(rec));
    }
    rep.supermartingale = sup_ok;
    rep.martingale = mart_ok;
    return rep;
}

}  // namespace illiq
