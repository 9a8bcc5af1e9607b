#pragma once

#include <vector>

#include "illiq/market_model.hpp"
#include "illiq/primal.hpp"

namespace illiq {

/// Value of a conjugate-side minimisation together with the attaining
/// dual density process w (dimension = assets).
struct ConjugateResult {
    double value = 0.0;  // +inf when the minimisation is infeasible in value
    ClaimProcess w;
    bool attained = false;  // w holds a minimiser and value is finite
};

/// phi*(q) = E V*(q) + inf_w E sum_t [ (q_t S_t)*(w_t) + sigma_D(E_t dw) ].
/// The infimum is solved as one LP (exact for pwl costs, outer-linearised
/// for smooth ones).
ConjugateResult conjugate_phi(const MarketModel& model, const LossSpec& loss,
                              const ClaimProcess& q);

/// Support function of the hedgeable set: the same minimisation without the
/// loss term; +inf whenever q has a negative entry.
ConjugateResult support_C(const MarketModel& model, const ClaimProcess& q);

/// E V*(q): expectation of the per-time conjugate losses along the tree.
double expected_loss_conjugate(const ScenarioTree& tree, const LossSpec& loss,
                               const ClaimProcess& q);

struct DualCertificate {
    ClaimProcess q;  // scalar density-like process, >= 0
    ClaimProcess w;  // marginal-cost process, dimension = assets
    // Decomposition of phi*(q):
    double ev_star = 0.0;          // E V*(q)
    double cost_term = 0.0;        // E sum (q_t S_t)*(w_t)
    double constraint_term = 0.0;  // E sum sigma_D(E_t dw_{t+1})
    double value = 0.0;  // <c,q> - phi*(q)
    double primal_value = 0.0;  // NaN when produced without a primal solve
    double gap = 0.0;  // harvest: |primal_value - value|; direct: bound - value
    bool feasible = false;   // every decomposition term finite
    bool attained = false;   // feasible and gap within tolerance
};

/// Harvest (q, w) from the multipliers of the primal LP reduction and price
/// the certificate with exact conjugate values.  attained = false flags a
/// certificate whose recomputed gap exceeds 1e-6.
DualCertificate solve_dual(const MarketModel& model, const LossSpec& loss,
                           const ClaimProcess& c);

/// Independent route: solve max_q { <c,q> - E V*(q) - sigma_C(q) } directly
/// as one LP over (q, w) with epigraph variables, for cross-checking.
DualCertificate solve_dual_direct(const MarketModel& model, const LossSpec& loss,
                                  const ClaimProcess& c);

/// Node-wise verdicts for the saddle-point system linking a strategy to a
/// dual certificate: conditional dw in the holding-set normal cone, q in the
/// loss subdifferential, w in the scaled cost subdifferential.
struct OptimalityReport {
    struct NodeCheck {
        int node = 0;
        bool holding_ok = true, loss_ok = true, cost_ok = true;
        double holding_resid = 0.0, loss_resid = 0.0, cost_resid = 0.0;
    };
    std::vector<NodeCheck> nodes;
    bool pass = false;
};

OptimalityReport check_optimality(const MarketModel& model, const LossSpec& loss,
                                  const ClaimProcess& c, const PortfolioProcess& x,
                                  const DualCertificate& cert);

/// Marginal prices s = w/q where q > 0, with per-node diagnostics.
struct ShadowPriceReport {
    struct Node {
        int node = 0;
        bool defined = false;       // q_n > 0
        Eigen::VectorXd price;      // w_n / q_n (empty when undefined)
        bool in_conjugate_domain = false;  // price_j in dom phi_j* per asset
        bool complementary = false;        // price_j in d phi_j(dx_j) per asset
    };
    std::vector<Node> nodes;
    // E_t[w_{t+1}] - w_t against 0, over nonleaf nodes: q*price is a
    // martingale iff resid = 0, supermartingale iff resid <= 0.
    bool martingale = false;
    bool supermartingale = false;
    double max_resid = 0.0;
};

ShadowPriceReport shadow_prices(const MarketModel& model, const DualCertificate& cert,
                                const PortfolioProcess& x);

}  // namespace illiq
