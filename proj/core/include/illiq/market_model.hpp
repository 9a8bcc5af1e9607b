#pragma once

#include <string>
#include <utility>
#include <vector>

#include "illiq/convex_fn.hpp"
#include "illiq/scenario_tree.hpp"

namespace illiq {

/// {x | A x <= b}.  Empty A means the whole space.
struct Polyhedron {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;

    Eigen::Index rows() const { return A.rows(); }
    bool contains(const Eigen::VectorXd& x, double tol = 1e-9) const;
    /// Recession cone {x | A x <= 0}.
    Polyhedron cone() const { return {A, Eigen::VectorXd::Zero(b.size())}; }
    static Polyhedron whole_space(int dim) {
        return {Eigen::MatrixXd::Zero(0, dim), Eigen::VectorXd::Zero(0)};
    }
    static Polyhedron origin_only(int dim);
};

/// sup { v.x | x in D }, +inf when unbounded in direction v.
double support_value(const Polyhedron& D, const Eigen::VectorXd& v);

/// v in N_D(z): z in D and v.z attains sup_D v.
bool normal_cone_contains(const Polyhedron& D, const Eigen::VectorXd& z,
                          const Eigen::VectorXd& v, double tol = 1e-7);

/// Per-node, per-asset purchase costs: the cost of buying a portfolio
/// increment x at node n is sum_j phi[n][j](x_j).
struct CostSpec {
    std::vector<std::vector<ConvexFunction>> phi;  // [node][asset]
    bool liquid_cash = false;  // asset 0 must then cost exactly its quantity
};

/// Per-node holding constraints x_n in D_n.  Leaf sets are forced to {0}
/// by make_market_model.
struct ConstraintSpec {
    std::vector<Polyhedron> at;  // [node]
};

/// Per-time loss functions; the total loss of a cash process c is
/// E sum_t v[t](c_t).  Each v[t] must be nondecreasing, vanish at 0, and
/// not be constant.
struct LossSpec {
    std::vector<ConvexFunction> v;  // [time 0..T]
};

struct MarketModel {
    TreePtr tree;
    int assets = 0;
    CostSpec costs;
    ConstraintSpec constraints;
    ClaimProcess theta;  // physical-delivery endowment, dimension = assets

    const ConvexFunction& cost(int node, int j) const { return costs.phi[node][j]; }
    const Polyhedron& constraint(int node) const { return constraints.at[node]; }
};

/// Normalises a model: fills missing constraint entries with the whole
/// space, forces leaf constraint sets to {0}, zero-fills theta.  Throws on
/// dimension mismatches.
MarketModel make_market_model(TreePtr tree, int assets, CostSpec costs,
                              ConstraintSpec constraints = {},
                              ClaimProcess theta = ClaimProcess());

struct ValidationCheck {
    std::string name;
    bool pass = true;
    std::vector<int> nodes;  // offending node ids (empty when pass)
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    std::vector<std::string> warnings;
    bool ok() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

ValidationReport validate_model(const MarketModel& model, const LossSpec& loss);

/// Node-wise cost process of trading to positions x (with x_{-1} = 0):
/// value at n is sum_j phi[n][j]((x_n - x_{parent})_j + theta_j), +inf when
/// an increment leaves the cost domain.
ClaimProcess trading_cost(const MarketModel& model, const PortfolioProcess& x);

/// The positively homogeneous model: costs and losses replaced by their
/// recession functions, constraint sets by their recession cones.
std::pair<MarketModel, LossSpec> recession_model(const MarketModel& model,
                                                 const LossSpec& loss);

}  // namespace illiq
