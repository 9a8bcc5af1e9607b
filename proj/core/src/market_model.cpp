#include "illiq/market_model.hpp"

#include <cmath>
#include <stdexcept>

#include "illiq/lp.hpp"

namespace illiq {

bool Polyhedron::contains(const Eigen::VectorXd& x, double tol) const {
    if (A.rows() == 0) return true;
    return ((A * x - b).array() <= tol).all();
}

Polyhedron Polyhedron::origin_only(int dim) {
    Polyhedron p;
    p.A.resize(2 * dim, dim);
    p.A << Eigen::MatrixXd::Identity(dim, dim), -Eigen::MatrixXd::Identity(dim, dim);
    p.b = Eigen::VectorXd::Zero(2 * dim);
    return p;
}

double support_value(const Polyhedron& D, const Eigen::VectorXd& v) {
    const Eigen::Index dim = v.size();
    if (D.rows() == 0) {
        return v.isZero(0.0) ? 0.0 : kInf;
    }
    LinearProgram lp;
    lp.c = -v;
    lp.E.resize(0, dim);
    lp.d.resize(0);
    lp.F = D.A;
    lp.g = D.b;
    lp.lb = Eigen::VectorXd::Constant(dim, -kInf);
    lp.ub = Eigen::VectorXd::Constant(dim, kInf);
    const LpSolution sol = solve_lp(lp);
    switch (sol.status) {
        case LpSolution::Status::Optimal:
            return -sol.objective;
        case LpSolution::Status::Unbounded:
            return kInf;
        case LpSolution::Status::Infeasible:
            return -kInf;  // empty set
        default:
            throw std::runtime_error("support_value: LP did not converge");
    }
}

bool normal_cone_contains(const Polyhedron& D, const Eigen::VectorXd& z,
                          const Eigen::VectorXd& v, double tol) {
    if (!D.contains(z, tol)) return false;
    const double sup = support_value(D, v);
    if (!std::isfinite(sup)) return false;
    return sup <= v.dot(z) + tol;
}

MarketModel make_market_model(TreePtr tree, int assets, CostSpec costs,
                              ConstraintSpec constraints, ClaimProcess theta) {
    if (!tree) throw std::invalid_argument("make_market_model: null tree");
    if (assets <= 0) throw std::invalid_argument("make_market_model: need at least one asset");
    const int n = tree->num_nodes();
    if (static_cast<int>(costs.phi.size()) != n)
        throw std::invalid_argument("make_market_model: need one cost entry per node");
    for (const auto& node_costs : costs.phi) {
        if (static_cast<int>(node_costs.size()) != assets)
            throw std::invalid_argument("make_market_model: need one cost per asset");
    }
    if (constraints.at.empty()) {
        constraints.at.assign(n, Polyhedron::whole_space(assets));
    }
    if (static_cast<int>(constraints.at.size()) != n)
        throw std::invalid_argument("make_market_model: need one constraint set per node");
    for (auto& p : constraints.at) {
        if (p.rows() == 0 && p.A.cols() != assets) p.A.resize(0, assets);
        if (p.A.cols() != assets || p.A.rows() != p.b.size())
            throw std::invalid_argument("make_market_model: constraint shape mismatch");
    }
    for (int node = 0; node < n; ++node) {
        if (tree->is_leaf(node)) constraints.at[node] = Polyhedron::origin_only(assets);
    }
    if (theta.values().size() == 0) {
        theta = ClaimProcess::zero(tree, assets);
    }
    if (theta.tree().get() != tree.get() || theta.dim() != assets)
        throw std::invalid_argument("make_market_model: theta must live on the tree with dim = assets");
    MarketModel m;
    m.tree = std::move(tree);
    m.assets = assets;
    m.costs = std::move(costs);
    m.constraints = std::move(constraints);
    m.theta = std::move(theta);
    return m;
}

namespace {

bool is_identity_cost(const ConvexFunction& f) {
    const Interval dom = f.domain();
    return dom.lo == -kInf && dom.hi == kInf && f.left_slope() == 1.0 &&
           f.right_slope() == 1.0 && std::abs(f.value(0.0)) <= 1e-12;
}

bool is_constant_on_line(const ConvexFunction& f) {
    const Interval dom = f.domain();
    if (dom.lo != -kInf || dom.hi != kInf) return false;
    return f.left_slope() == 0.0 && f.right_slope() == 0.0;
}

}  // namespace

ValidationReport validate_model(const MarketModel& model, const LossSpec& loss) {
    ValidationReport rep;
    const ScenarioTree& tree = *model.tree;
    const int n = tree.num_nodes();

    ValidationCheck cost_zero{"cost vanishes at zero", true, {}, ""};
    for (int node = 0; node < n; ++node) {
        for (int j = 0; j < model.assets; ++j) {
            const double v0 = model.cost(node, j).value(0.0);
            if (!(std::abs(v0) <= 1e-12)) {
                cost_zero.pass = false;
                cost_zero.nodes.push_back(tree.external_id(node));
                break;
            }
        }
    }
    if (!cost_zero.pass) cost_zero.detail = "S(0) != 0";
    rep.checks.push_back(std::move(cost_zero));

    if (model.costs.liquid_cash) {
        ValidationCheck liq{"liquid cash asset", true, {}, ""};
        for (int node = 0; node < n; ++node) {
            if (!is_identity_cost(model.cost(node, 0))) {
                liq.pass = false;
                liq.nodes.push_back(tree.external_id(node));
            }
        }
        if (!liq.pass) liq.detail = "asset 0 cost is not the identity";
        rep.checks.push_back(std::move(liq));
    }

    ValidationCheck origin{"origin is a feasible holding", true, {}, ""};
    for (int node = 0; node < n; ++node) {
        const Polyhedron& D = model.constraint(node);
        if (D.rows() > 0 && (D.b.array() < 0.0).any()) {
            origin.pass = false;
            origin.nodes.push_back(tree.external_id(node));
        }
    }
    if (!origin.pass) origin.detail = "0 not in D (negative b entry)";
    rep.checks.push_back(std::move(origin));

    ValidationCheck leaf{"leaves close the position", true, {}, ""};
    for (int node : tree.leaves()) {
        const Polyhedron& D = model.constraint(node);
        bool only_origin = D.contains(Eigen::VectorXd::Zero(model.assets), 0.0);
        for (int j = 0; j < model.assets && only_origin; ++j) {
            const Eigen::VectorXd e = Eigen::VectorXd::Unit(model.assets, j);
            if (support_value(D, e) > 1e-10 || support_value(D, -e) > 1e-10)
                only_origin = false;
        }
        if (!only_origin) {
            leaf.pass = false;
            leaf.nodes.push_back(tree.external_id(node));
        }
    }
    if (!leaf.pass) leaf.detail = "leaf constraint set is not {0}";
    rep.checks.push_back(std::move(leaf));

    const int horizon = tree.horizon();
    ValidationCheck loss_dim{"one loss per time", true, {}, ""};
    if (static_cast<int>(loss.v.size()) != horizon + 1) {
        loss_dim.pass = false;
        loss_dim.detail = "expected " + std::to_string(horizon + 1) + " entries, got " +
                          std::to_string(loss.v.size());
    }
    rep.checks.push_back(std::move(loss_dim));

    ValidationCheck loss_shape{"losses nondecreasing, vanish at zero, nonconstant", true, {}, ""};
    for (size_t t = 0; t < loss.v.size(); ++t) {
        const ConvexFunction& f = loss.v[t];
        const bool at_zero = std::abs(f.value(0.0)) <= 1e-12;
        if (!f.nondecreasing() || !at_zero || is_constant_on_line(f)) {
            loss_shape.pass = false;
            loss_shape.nodes.push_back(static_cast<int>(t));
        }
    }
    if (!loss_shape.pass) loss_shape.detail = "offending time indices listed under nodes";
    rep.checks.push_back(std::move(loss_shape));

    return rep;
}

ClaimProcess trading_cost(const MarketModel& model, const PortfolioProcess& x) {
    const ScenarioTree& tree = *model.tree;
    if (x.tree().get() != model.tree.get() || x.dim() != model.assets)
        throw std::invalid_argument("trading_cost: portfolio does not match the model");
    ClaimProcess out = ClaimProcess::zero(model.tree, 1);
    for (int node = 0; node < tree.num_nodes(); ++node) {
        const int par = tree.parent(node);
        double total = 0.0;
        for (int j = 0; j < model.assets; ++j) {
            const double prev = par < 0 ? 0.0 : x(par, j);
            const double dx = x(node, j) - prev + model.theta(node, j);
            total += model.cost(node, j).value(dx);
            if (total == kInf) break;
        }
        out.at(node, 0) = total;
    }
    return out;
}

std::pair<MarketModel, LossSpec> recession_model(const MarketModel& model,
                                                 const LossSpec& loss) {
    MarketModel out = model;
    for (auto& node_costs : out.costs.phi) {
        for (auto& f : node_costs) f = f.recession();
    }
    for (auto& p : out.constraints.at) p = p.cone();
    LossSpec lout;
    lout.v.reserve(loss.v.size());
    for (const auto& f : loss.v) lout.v.push_back(f.recession());
    return {std::move(out), std::move(lout)};
}

}  // namespace illiq
