#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace illiq {

/// min c.x  s.t.  E x = d,  F x <= g,  lb <= x <= ub  (entries may be +-inf).
struct LinearProgram {
    Eigen::VectorXd c;
    Eigen::MatrixXd E;
    Eigen::VectorXd d;
    Eigen::MatrixXd F;
    Eigen::VectorXd g;
    Eigen::VectorXd lb, ub;

    Eigen::Index num_vars() const { return c.size(); }
};

struct LpOptions {
    double feas_tol = 1e-8;   // primal feasibility
    double opt_tol = 1e-9;    // reduced-cost threshold
    double pivot_tol = 1e-10; // smallest acceptable pivot element
    int max_iters = 0;        // 0: derived from problem size
    int refactor_every = 128; // basis inverse rebuild cadence
    int stall_limit = 200;    // non-improving pivots before Bland's rule
};

struct LpSolution {
    enum class Status { Optimal, Infeasible, Unbounded, NumericalError };

    Status status = Status::NumericalError;
    Eigen::VectorXd x;
    double objective = 0.0;

    /// Row multipliers, sensitivity convention for minimisation:
    /// equality rows free, "<=" rows non-positive.  A ">=" row entered
    /// through LpBuilder reports a non-negative multiplier.
    Eigen::VectorXd y_eq, y_ineq;
    /// Bound multipliers c - E'y - F'y per structural variable.
    Eigen::VectorXd reduced_costs;

    /// Unbounded certificate: E r = 0, F r <= 0, c.r < 0, bound-compatible.
    Eigen::VectorXd ray;
    /// Infeasibility certificate (per-row multipliers); see farkas_valid.
    Eigen::VectorXd farkas_eq, farkas_ineq;
    bool farkas_valid = false;

    int iterations = 0;
    double kkt_residual = 0.0;

    bool optimal() const { return status == Status::Optimal; }
};

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& opts = {});

/// Incremental assembly helper.  Rows may be entered with either sense;
/// ">=" rows are stored negated and their multipliers are sign-corrected by
/// dual().
class LpBuilder {
  public:
    enum class Sense { LE, GE, EQ };
    struct Row {
        int block = 0;  // 0 = equality block, 1 = inequality block
        int pos = -1;
        bool flipped = false;
    };

    int add_var(double lb, double ub, double cost = 0.0);
    int num_vars() const { return static_cast<int>(lb_.size()); }
    void set_cost(int var, double cost) { cost_[var] = cost; }
    void add_cost(int var, double cost) { cost_[var] += cost; }

    Row add_row(Sense sense, double rhs, const std::vector<std::pair<int, double>>& terms);

    LinearProgram build() const;

    double dual(const LpSolution& sol, const Row& r) const {
        double v = r.block == 0 ? sol.y_eq[r.pos] : sol.y_ineq[r.pos];
        return r.flipped ? -v : v;
    }
    double farkas(const LpSolution& sol, const Row& r) const {
        double v = r.block == 0 ? sol.farkas_eq[r.pos] : sol.farkas_ineq[r.pos];
        return r.flipped ? -v : v;
    }

  private:
    struct RawRow {
        double rhs;
        std::vector<std::pair<int, double>> terms;
    };
    std::vector<double> lb_, ub_, cost_;
    std::vector<RawRow> eq_rows_, ineq_rows_;
};

}  // namespace illiq
