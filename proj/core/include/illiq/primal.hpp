#pragma once

#include <utility>
#include <vector>

#include "illiq/lp.hpp"
#include "illiq/market_model.hpp"

namespace illiq {

enum class SolveStatus { Optimal, UnboundedBelow, Infeasible, NumericalError };

struct PrimalSolution {
    SolveStatus status = SolveStatus::NumericalError;
    double value = 0.0;  // -inf when unbounded below
    PortfolioProcess x;  // positions per node, zero rows at leaves
    ClaimProcess cost;   // node-wise trading cost of x (theta included)
    PortfolioProcess ray;  // improving direction when unbounded below
    int lp_iterations = 0;
    int cuts = 0;  // outer-linearisation rounds used by smooth losses/costs
};

/// The LP relaxation of the hedging problem together with the handles needed
/// to harvest dual data from its multipliers:
///   minimize  E sum_t z_n
///   s.t.      z_n >= (pieces of the time-t loss at y_n)
///             y_n >= sum_j u_{n,j} + c_n                  [budget row]
///             u_{n,j} >= (pieces of phi_{n,j} at dx_{n,j})
///             dx_{n,j} within dom phi_{n,j},  A_n x_n <= b_n
/// with dx = x_n - x_parent + theta and x fixed to 0 at the leaves.
/// wsrc[n][j] lists (row, weight) pairs whose multipliers, weighted and
/// summed, give the marginal-cost mass of asset j at node n (the dual w
/// scaled by the node probability).
struct AlmReduction {
    LpBuilder lp;
    std::vector<std::vector<int>> xvar;  // [node][asset]; empty at leaves
    std::vector<std::vector<int>> uvar;  // [node][asset]
    std::vector<int> yvar, zvar;         // [node]
    std::vector<LpBuilder::Row> budget;  // [node]
    std::vector<std::vector<std::vector<std::pair<LpBuilder::Row, double>>>> wsrc;
    std::vector<std::vector<LpBuilder::Row>> drows;  // [node] holding-set rows
};

struct AlmDetailed {
    AlmReduction reduction;
    LpSolution lp;
    PrimalSolution primal;
};

/// Minimise E V(S(dx + theta) + c) over adapted strategies that start from
/// zero, close at the horizon, and hold x_n in D_n.
PrimalSolution solve_alm(const MarketModel& model, const LossSpec& loss, const ClaimProcess& c);

/// solve_alm plus the final LP and its handles, for dual extraction.
AlmDetailed solve_alm_detailed(const MarketModel& model, const LossSpec& loss,
                               const ClaimProcess& c);

enum class HedgeSide { Sup, Inf };

struct HedgeResult {
    SolveStatus status = SolveStatus::NumericalError;
    double value = 0.0;  // the optimal premium multiple alpha
    PortfolioProcess x;
    int cuts = 0;
};

/// Cheapest (side = Sup) or most expensive (side = Inf) premium multiple
/// alpha such that c - alpha p (resp. alpha p - c) can be hedged to zero:
/// there is a feasible x with S(dx) + claim <= 0 node-wise.  With
/// conical = true the positively homogeneous model (S-recession, D-cone)
/// is used instead.  theta is not part of hedging.
HedgeResult superhedge(const MarketModel& model, const ClaimProcess& c, const ClaimProcess& p,
                       HedgeSide side, bool conical = false);

struct MembershipResult {
    bool member = false;
    PortfolioProcess x;  // hedging witness when member
    /// Otherwise: nonnegative node multipliers q with <c, q> > 0 while every
    /// hedgeable claim pairs to <= 0 (an LP infeasibility certificate).
    ClaimProcess q;
    bool certificate_valid = false;
};

/// Whether c can be superhedged to zero in the positively homogeneous model.
MembershipResult recession_membership(const MarketModel& model, const ClaimProcess& c);

}  // namespace illiq
