#include "illiq/primal.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace illiq {

namespace {

constexpr double kGapTol = 1e-7;        // value tolerance for outer linearisation
constexpr double kViolationTol = 1e-8;  // hedge constraint violation tolerance
constexpr int kMaxCutRounds = 500;
constexpr double kDomClamp = 1e-6;  // snap width for domain-boundary drift

/// inf of f over its domain (used as an initial epigraph floor).
double infimum_value(const ConvexFunction& f) {
    switch (f.kind()) {
        case ConvexFunction::Kind::Exp:
            return -f.scale() / f.param();
        case ConvexFunction::Kind::Entropy:
        case ConvexFunction::Kind::Power:
        case ConvexFunction::Kind::PowerConj:
            return 0.0;
        case ConvexFunction::Kind::Pwl:
            break;
    }
    const auto& sl = f.slopes();
    const auto& bp = f.breakpoints();
    if (bp.empty()) return sl[0] == 0.0 ? f.anchor_f() : -kInf;
    if (std::isfinite(sl.front())) {
        if (sl.front() > 0.0) return -kInf;
        if (sl.front() == 0.0) return f.value(bp.front());
    }
    for (std::size_t i = 1; i < sl.size(); ++i) {
        if (sl[i] >= 0.0) return f.value(bp[i - 1]);
    }
    return -kInf;
}

/// A usable subgradient at x, NaN when none exists there.
double cut_slope(const ConvexFunction& f, double x) {
    const Interval sd = f.subdifferential(x);
    if (std::isfinite(sd.lo) && std::isfinite(sd.hi)) return 0.5 * (sd.lo + sd.hi);
    if (std::isfinite(sd.hi)) return sd.hi;
    if (std::isfinite(sd.lo)) return sd.lo;
    return std::numeric_limits<double>::quiet_NaN();
}

double clamp_into(const Interval& dom, double x) {
    return std::min(std::max(x, dom.lo), dom.hi);
}

std::vector<std::pair<int, double>> dx_terms(const AlmReduction& red, const ScenarioTree& tree,
                                             int node, int j, double coef) {
    std::vector<std::pair<int, double>> t;
    if (!tree.is_leaf(node)) t.push_back({red.xvar[node][j], coef});
    const int par = tree.parent(node);
    if (par >= 0) t.push_back({red.xvar[par][j], -coef});
    return t;
}

/// Epigraph row u >= g * (dx + theta) + f(pt) - g * pt, registered as a
/// w-source with weight g.
void add_cost_cut(AlmReduction& red, const ScenarioTree& tree, int node, int j, double theta,
                  const ConvexFunction& phi, double pt) {
    const double g = cut_slope(phi, pt);
    if (!std::isfinite(g)) return;
    const double val = phi.value_clamped(pt, kDomClamp);
    if (!std::isfinite(val)) return;
    auto terms = dx_terms(red, tree, node, j, -g);
    terms.push_back({red.uvar[node][j], 1.0});
    red.wsrc[node][j].push_back(
        {red.lp.add_row(LpBuilder::Sense::GE, g * (theta - pt) + val, terms), g});
}

struct SmoothCost {
    int node = 0, asset = 0;
    double last_point = 0.0;
};

struct SmoothLoss {
    int node = 0;
    double last_point = 0.0, last_aux = 0.0;
};

/// Builds the x, u, holding-set, and cost-epigraph part shared by the
/// hedging programs.  Smooth costs get a floor and one cut at 0; callers
/// refine them iteratively.
void assemble_costs(const MarketModel& model, bool with_theta, AlmReduction& red,
                    std::vector<SmoothCost>& smooth) {
    const ScenarioTree& tree = *model.tree;
    const int n = tree.num_nodes();
    const int J = model.assets;
    red.xvar.assign(n, {});
    red.uvar.assign(n, {});
    red.wsrc.assign(n, {});
    red.drows.assign(n, {});
    for (int node = 0; node < n; ++node) {
        red.wsrc[node].resize(J);
        if (!tree.is_leaf(node)) {
            red.xvar[node].reserve(J);
            for (int j = 0; j < J; ++j) red.xvar[node].push_back(red.lp.add_var(-kInf, kInf));
        }
    }
    for (int node = 0; node < n; ++node) {
        if (!tree.is_leaf(node)) {
            const Polyhedron& D = model.constraint(node);
            for (Eigen::Index r = 0; r < D.rows(); ++r) {
                std::vector<std::pair<int, double>> terms;
                for (int j = 0; j < J; ++j) {
                    if (D.A(r, j) != 0.0) terms.push_back({red.xvar[node][j], D.A(r, j)});
                }
                red.drows[node].push_back(red.lp.add_row(LpBuilder::Sense::LE, D.b[r], terms));
            }
        }
        for (int j = 0; j < J; ++j) {
            const ConvexFunction& phi = model.cost(node, j);
            const double th = with_theta ? model.theta(node, j) : 0.0;
            red.uvar[node].push_back(red.lp.add_var(-kInf, kInf));
            if (phi.is_pwl()) {
                for (const AffinePiece& pc : affine_pieces(phi)) {
                    auto terms = dx_terms(red, tree, node, j, -pc.slope);
                    terms.push_back({red.uvar[node][j], 1.0});
                    red.wsrc[node][j].push_back(
                        {red.lp.add_row(LpBuilder::Sense::GE, pc.slope * th + pc.offset, terms),
                         pc.slope});
                }
            } else {
                const double floor = infimum_value(phi);
                if (std::isfinite(floor)) {
                    red.wsrc[node][j].push_back(
                        {red.lp.add_row(LpBuilder::Sense::GE, floor, {{red.uvar[node][j], 1.0}}),
                         0.0});
                }
                add_cost_cut(red, tree, node, j, th, phi, clamp_into(phi.domain(), 0.0));
                smooth.push_back({node, j, 0.0});
            }
            const Interval dom = phi.domain();
            if (dom.lo > -kInf) {
                red.wsrc[node][j].push_back(
                    {red.lp.add_row(LpBuilder::Sense::GE, dom.lo - th, dx_terms(red, tree, node, j, 1.0)),
                     -1.0});
            }
            if (dom.hi < kInf) {
                red.wsrc[node][j].push_back(
                    {red.lp.add_row(LpBuilder::Sense::LE, dom.hi - th, dx_terms(red, tree, node, j, 1.0)),
                     -1.0});
            }
        }
    }
}

void add_loss_cut(AlmReduction& red, int node, const ConvexFunction& V, double pt) {
    const double g = cut_slope(V, pt);
    if (!std::isfinite(g)) return;
    const double val = V.value_clamped(pt, kDomClamp);
    if (!std::isfinite(val)) return;
    red.lp.add_row(LpBuilder::Sense::GE, val - g * pt,
                   {{red.zvar[node], 1.0}, {red.yvar[node], -g}});
}

void assemble_losses(const MarketModel& model, const LossSpec& loss, const ClaimProcess& c,
                     AlmReduction& red, std::vector<SmoothLoss>& smooth) {
    const ScenarioTree& tree = *model.tree;
    const int n = tree.num_nodes();
    red.yvar.resize(n);
    red.zvar.resize(n);
    red.budget.resize(n);
    for (int node = 0; node < n; ++node) {
        const ConvexFunction& V = loss.v[tree.time(node)];
        red.yvar[node] = red.lp.add_var(-kInf, kInf);
        red.zvar[node] = red.lp.add_var(-kInf, kInf, tree.prob(node));
        std::vector<std::pair<int, double>> bt{{red.yvar[node], 1.0}};
        for (int u : red.uvar[node]) bt.push_back({u, -1.0});
        red.budget[node] = red.lp.add_row(LpBuilder::Sense::GE, c.scalar(node), bt);
        if (V.is_pwl()) {
            for (const AffinePiece& pc : affine_pieces(V)) {
                red.lp.add_row(LpBuilder::Sense::GE, pc.offset,
                               {{red.zvar[node], 1.0}, {red.yvar[node], -pc.slope}});
            }
        } else {
            const double floor = infimum_value(V);
            if (std::isfinite(floor)) {
                red.lp.add_row(LpBuilder::Sense::GE, floor, {{red.zvar[node], 1.0}});
            }
            add_loss_cut(red, node, V, clamp_into(V.domain(), 0.0));
            smooth.push_back({node, 0.0, 0.0});
        }
        const Interval dom = V.domain();
        if (dom.lo > -kInf)
            red.lp.add_row(LpBuilder::Sense::GE, dom.lo, {{red.yvar[node], 1.0}});
        if (dom.hi < kInf)
            red.lp.add_row(LpBuilder::Sense::LE, dom.hi, {{red.yvar[node], 1.0}});
    }
}

PortfolioProcess extract_positions(const AlmReduction& red, const MarketModel& model,
                                   const LpSolution& sol) {
    PortfolioProcess x = PortfolioProcess::zero(model.tree, model.assets);
    for (int node = 0; node < model.tree->num_nodes(); ++node) {
        for (std::size_t j = 0; j < red.xvar[node].size(); ++j) {
            x.at(node, static_cast<int>(j)) = sol.x[red.xvar[node][j]];
        }
    }
    return x;
}

/// Node-wise trading cost with domain-boundary snapping (LP iterates may sit
/// a feasibility tolerance outside a cost domain).
ClaimProcess clamped_cost(const MarketModel& model, const PortfolioProcess& x, bool with_theta) {
    const ScenarioTree& tree = *model.tree;
    ClaimProcess out = ClaimProcess::zero(model.tree, 1);
    for (int node = 0; node < tree.num_nodes(); ++node) {
        const int par = tree.parent(node);
        double total = 0.0;
        for (int j = 0; j < model.assets; ++j) {
            double dx = x(node, j) - (par < 0 ? 0.0 : x(par, j));
            if (with_theta) dx += model.theta(node, j);
            total += model.cost(node, j).value_clamped(dx, kDomClamp);
            if (total == kInf) break;
        }
        out.at(node, 0) = total;
    }
    return out;
}

}  // namespace

AlmDetailed solve_alm_detailed(const MarketModel& model, const LossSpec& loss,
                               const ClaimProcess& c) {
    if (!model.tree) throw std::invalid_argument("solve_alm: model has no tree");
    const ScenarioTree& tree = *model.tree;
    if (c.dim() != 1 || c.tree().get() != model.tree.get())
        throw std::invalid_argument("solve_alm: claim must be a scalar process on the model tree");
    if (static_cast<int>(loss.v.size()) != tree.horizon() + 1)
        throw std::invalid_argument("solve_alm: need one loss function per time");

    AlmDetailed out;
    AlmReduction& red = out.reduction;
    std::vector<SmoothCost> scost;
    std::vector<SmoothLoss> sloss;
    assemble_costs(model, true, red, scost);
    assemble_losses(model, loss, c, red, sloss);
    const bool has_smooth = !scost.empty() || !sloss.empty();

    PrimalSolution& ps = out.primal;
    double best_ub = kInf;
    PortfolioProcess best_x;
    ClaimProcess best_cost;

    for (int round = 0;; ++round) {
        LpSolution sol = solve_lp(red.lp.build());
        ps.lp_iterations += sol.iterations;
        if (sol.status == LpSolution::Status::Infeasible) {
            ps.status = SolveStatus::Infeasible;
            ps.value = kInf;
            out.lp = std::move(sol);
            return out;
        }
        if (sol.status == LpSolution::Status::Unbounded) {
            ps.status = SolveStatus::UnboundedBelow;
            ps.value = -kInf;
            ps.ray = PortfolioProcess::zero(model.tree, model.assets);
            for (int node = 0; node < tree.num_nodes(); ++node) {
                for (std::size_t j = 0; j < red.xvar[node].size(); ++j)
                    ps.ray.at(node, static_cast<int>(j)) = sol.ray[red.xvar[node][j]];
            }
            out.lp = std::move(sol);
            return out;
        }
        if (sol.status != LpSolution::Status::Optimal) {
            ps.status = SolveStatus::NumericalError;
            out.lp = std::move(sol);
            return out;
        }

        PortfolioProcess x = extract_positions(red, model, sol);
        ClaimProcess cost = clamped_cost(model, x, true);
        double true_val = 0.0;
        for (int node = 0; node < tree.num_nodes(); ++node) {
            const ConvexFunction& V = loss.v[tree.time(node)];
            true_val +=
                tree.prob(node) * V.value_clamped(cost.scalar(node) + c.scalar(node), kDomClamp);
        }

        if (!has_smooth) {
            ps.value = sol.objective;
            ps.status = std::abs(true_val - sol.objective) <= 1e-5 * (1.0 + std::abs(sol.objective))
                            ? SolveStatus::Optimal
                            : SolveStatus::NumericalError;
            ps.x = std::move(x);
            ps.cost = std::move(cost);
            out.lp = std::move(sol);
            return out;
        }

        if (true_val < best_ub || round == 0) {
            best_ub = true_val;
            best_x = x;
            best_cost = cost;
        }
        const bool converged =
            best_ub - sol.objective <= kGapTol * std::max(1.0, std::abs(best_ub));
        if (converged || round >= kMaxCutRounds) {
            ps.value = best_ub;
            ps.status = converged ? SolveStatus::Optimal : SolveStatus::NumericalError;
            ps.x = std::move(best_x);
            ps.cost = std::move(best_cost);
            ps.cuts = round;
            out.lp = std::move(sol);
            return out;
        }

        for (SmoothCost& sc : scost) {
            const ConvexFunction& phi = model.cost(sc.node, sc.asset);
            const int par = tree.parent(sc.node);
            double dx = model.theta(sc.node, sc.asset);
            if (!tree.is_leaf(sc.node)) dx += x(sc.node, sc.asset);
            if (par >= 0) dx -= x(par, sc.asset);
            const double pt = clamp_into(phi.domain(), dx);
            if (std::abs(pt - sc.last_point) <= 1e-12 * (1.0 + std::abs(pt))) continue;
            sc.last_point = pt;
            add_cost_cut(red, tree, sc.node, sc.asset, model.theta(sc.node, sc.asset), phi, pt);
        }
        for (SmoothLoss& sl : sloss) {
            const ConvexFunction& V = loss.v[tree.time(sl.node)];
            const double induced =
                clamp_into(V.domain(), cost.scalar(sl.node) + c.scalar(sl.node));
            if (std::abs(induced - sl.last_point) > 1e-12 * (1.0 + std::abs(induced))) {
                sl.last_point = induced;
                add_loss_cut(red, sl.node, V, induced);
            }
            const double relaxed = clamp_into(V.domain(), sol.x[red.yvar[sl.node]]);
            const double zval = sol.x[red.zvar[sl.node]];
            if (V.value_clamped(relaxed, kDomClamp) > zval + kGapTol &&
                std::abs(relaxed - sl.last_aux) > 1e-12 * (1.0 + std::abs(relaxed))) {
                sl.last_aux = relaxed;
                add_loss_cut(red, sl.node, V, relaxed);
            }
        }
    }
}

PrimalSolution solve_alm(const MarketModel& model, const LossSpec& loss, const ClaimProcess& c) {
    return solve_alm_detailed(model, loss, c).primal;
}

HedgeResult superhedge(const MarketModel& model_in, const ClaimProcess& c, const ClaimProcess& p,
                       HedgeSide side, bool conical) {
    if (!model_in.tree) throw std::invalid_argument("superhedge: model has no tree");
    if (c.dim() != 1 || c.tree().get() != model_in.tree.get())
        throw std::invalid_argument("superhedge: claim must be a scalar process on the model tree");
    if (p.dim() != 1 || p.tree().get() != model_in.tree.get())
        throw std::invalid_argument("superhedge: premium must be a scalar process on the model tree");
    if (p.values().isZero(0.0)) throw std::invalid_argument("superhedge: premium must be nonzero");

    const MarketModel model =
        conical ? recession_model(model_in, LossSpec{}).first : model_in;
    const ScenarioTree& tree = *model.tree;
    const bool sup_side = side == HedgeSide::Sup;

    AlmReduction red;
    std::vector<SmoothCost> scost;
    assemble_costs(model, false, red, scost);
    const int alpha = red.lp.add_var(-kInf, kInf, sup_side ? 1.0 : -1.0);
    for (int node = 0; node < tree.num_nodes(); ++node) {
        std::vector<std::pair<int, double>> terms;
        for (int u : red.uvar[node]) terms.push_back({u, 1.0});
        terms.push_back({alpha, sup_side ? -p.scalar(node) : p.scalar(node)});
        red.lp.add_row(LpBuilder::Sense::LE, sup_side ? -c.scalar(node) : c.scalar(node), terms);
    }

    HedgeResult res;
    for (int round = 0;; ++round) {
        const LpSolution sol = solve_lp(red.lp.build());
        if (sol.status == LpSolution::Status::Infeasible) {
            res.status = SolveStatus::Infeasible;
            res.value = sup_side ? kInf : -kInf;
            return res;
        }
        if (sol.status == LpSolution::Status::Unbounded) {
            res.status = SolveStatus::UnboundedBelow;
            res.value = sup_side ? -kInf : kInf;
            return res;
        }
        if (sol.status != LpSolution::Status::Optimal) {
            res.status = SolveStatus::NumericalError;
            return res;
        }
        res.value = sol.x[alpha];
        res.x = extract_positions(red, model, sol);
        res.cuts = round;
        if (scost.empty()) {
            res.status = SolveStatus::Optimal;
            return res;
        }
        const ClaimProcess cost = clamped_cost(model, res.x, false);
        double viol = -kInf;
        for (int node = 0; node < tree.num_nodes(); ++node) {
            const double claim = sup_side ? c.scalar(node) - res.value * p.scalar(node)
                                          : res.value * p.scalar(node) - c.scalar(node);
            viol = std::max(viol, cost.scalar(node) + claim);
        }
        const double scale =
            1.0 + std::abs(res.value) + c.values().cwiseAbs().maxCoeff() +
            p.values().cwiseAbs().maxCoeff();
        if (viol <= kViolationTol * scale) {
            res.status = SolveStatus::Optimal;
            return res;
        }
        if (round >= kMaxCutRounds) {
            res.status = SolveStatus::NumericalError;
            return res;
        }
        for (SmoothCost& sc : scost) {
            const ConvexFunction& phi = model.cost(sc.node, sc.asset);
            const int par = tree.parent(sc.node);
            double dx = 0.0;
            if (!tree.is_leaf(sc.node)) dx += res.x(sc.node, sc.asset);
            if (par >= 0) dx -= res.x(par, sc.asset);
            const double pt = clamp_into(phi.domain(), dx);
            if (std::abs(pt - sc.last_point) <= 1e-12 * (1.0 + std::abs(pt))) continue;
            sc.last_point = pt;
            add_cost_cut(red, tree, sc.node, sc.asset, 0.0, phi, pt);
        }
    }
}

MembershipResult recession_membership(const MarketModel& model_in, const ClaimProcess& c) {
    if (!model_in.tree) throw std::invalid_argument("recession_membership: model has no tree");
    if (c.dim() != 1 || c.tree().get() != model_in.tree.get())
        throw std::invalid_argument(
            "recession_membership: claim must be a scalar process on the model tree");
    const MarketModel model = recession_model(model_in, LossSpec{}).first;
    const ScenarioTree& tree = *model.tree;

    AlmReduction red;
    std::vector<SmoothCost> scost;
    assemble_costs(model, false, red, scost);  // recession costs are always pwl
    std::vector<LpBuilder::Row> budget(tree.num_nodes());
    for (int node = 0; node < tree.num_nodes(); ++node) {
        std::vector<std::pair<int, double>> terms;
        for (int u : red.uvar[node]) terms.push_back({u, 1.0});
        budget[node] = red.lp.add_row(LpBuilder::Sense::LE, -c.scalar(node), terms);
    }

    const LpSolution sol = solve_lp(red.lp.build());
    MembershipResult res;
    if (sol.status == LpSolution::Status::Optimal) {
        res.member = true;
        res.x = extract_positions(red, model, sol);
        return res;
    }
    if (sol.status == LpSolution::Status::Infeasible) {
        res.member = false;
        res.q = ClaimProcess::zero(model.tree, 1);
        for (int node = 0; node < tree.num_nodes(); ++node) {
            // row multipliers are an unweighted node density; the pairing is
            // probability-weighted, so rescale per node
            res.q.at(node, 0) =
                std::max(0.0, -red.lp.farkas(sol, budget[node])) / tree.prob(node);
        }
        res.certificate_valid = sol.farkas_valid;
        return res;
    }
    res.member = false;
    res.certificate_valid = false;
    return res;
}

}  // namespace illiq
