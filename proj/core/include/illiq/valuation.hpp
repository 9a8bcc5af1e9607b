#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "illiq/dual.hpp"

namespace illiq {

enum class Side { Short, Long };

enum class ValuationStatus {
    Ok,
    NoBracket,               // bracketing failed after 200 expansions
    Unbounded,               // certified infinite value, sign carried by value
    ConditionFailed,         // premium recession-hedgeable: dual representation void
    PremiumInRecessionCone,  // level sets unbounded below along the premium
};

struct ValuationResult {
    double value = 0.0;
    Side side = Side::Short;
    ValuationStatus status = ValuationStatus::Ok;
    double bracket_lo = 0.0, bracket_hi = 0.0;  // final rate bracket examined
    double bound_lo = 0.0, bound_hi = 0.0;      // sub- and superhedging values
    // Certificate bound from a sampled constant density: a lower bound on a
    // short value, an upper bound on a long one; NaN when unavailable.
    double dual_bound = 0.0;
    std::vector<std::pair<double, double>> samples;  // (rate, level gap) on failure
};

/// The cash numeraire premium: pays 1 at the root and nothing later.
ClaimProcess numeraire_premium(const std::shared_ptr<const ScenarioTree>& tree);

/// Least initial capital alpha with phi(c - alpha p0) <= 0 (short side); the
/// long side is the greatest alpha with phi(alpha p0 - c) <= 0.
ValuationResult accounting_value(const MarketModel& model, const LossSpec& loss,
                                 const ClaimProcess& c, Side side);

/// Least swap rate alpha with phi(cbar + c - alpha p) <= phi(cbar) (short);
/// long side is the greatest alpha with phi(cbar - c + alpha p) <= phi(cbar).
ValuationResult indifference_swap_rate(const MarketModel& model, const LossSpec& loss,
                                       const ClaimProcess& cbar, const ClaimProcess& p,
                                       const ClaimProcess& c, Side side);

/// Support function of the acceptance set {c : E V(c) <= 0} at q >= 0,
/// inf_{a>0} a E V*(q/a); with cbar, of {c : phi(cbar+c) <= phi(cbar)},
/// inf_{a>0} a [E V*(q/a) - phi(cbar)] - <cbar, q>.  The plain form is
/// cross-checked against its defining program when every loss is pwl.
double support_B(const MarketModel& model, const LossSpec& loss, const ClaimProcess& q,
                 const ClaimProcess* cbar = nullptr);

struct DualBound {
    double value = 0.0;
    ClaimProcess q;  // maximising density; default-empty when none exists
    ValuationStatus status = ValuationStatus::Ok;
};

/// sup_q { <c,q> - sigma_B(q) - sigma_C(q) : <p,q> = 1 }, the dual form of
/// the short valuation; with cbar the acceptance set is re-centred there.
DualBound dual_valuation_bound(const MarketModel& model, const LossSpec& loss,
                               const ClaimProcess& c, const ClaimProcess& p,
                               const ClaimProcess* cbar = nullptr);

}  // namespace illiq
