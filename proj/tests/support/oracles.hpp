#pragma once

#include "illiq/primal.hpp"
#include "illiq/valuation.hpp"

namespace illiq::testing {

/// Numerical Legendre transform: sup of x*y - f(x) over a refined grid on
/// dom f intersected with [-radius, radius].  Valid wherever the true
/// supremum is attained inside the window; accuracy ~1e-8 for the smooth
/// families, exact at pwl breakpoints.
double numeric_conjugate(const ConvexFunction& f, double y, double radius = 50.0);

/// Projected subgradient descent on the hedging objective
///   E sum_t V_t(c_n + sum_j phi_nj(dx_nj))
/// over nonleaf positions, followed by a per-coordinate golden-section
/// polish.  Independent of the LP stack.  Constraint sets must be boxes or
/// the whole space (rows with a single nonzero coefficient).
double subgradient_alm_value(const MarketModel& model, const LossSpec& loss,
                             const ClaimProcess& c, int iters = 60000,
                             double radius = 50.0);

/// Exhaustive vertex enumeration of the one-period superhedge program
///   min (Sup) / max (Inf) alpha  s.t.  cost rows, dom rows, D_0 rows,
/// inside a large box.  Requires a one-period tree and few assets (the
/// enumeration is over all (J+1)-subsets of rows).
double enumerate_superhedge(const MarketModel& model, const ClaimProcess& c,
                            const ClaimProcess& p, HedgeSide side, double box = 1e3);

/// Leftmost (Short) or rightmost (Long) crossing of the indifference level
/// by plain bracket expansion and bisection on top of solve_alm.
double bisect_swap_rate(const MarketModel& model, const LossSpec& loss,
                        const ClaimProcess& cbar, const ClaimProcess& p,
                        const ClaimProcess& c, Side side, double level_tol = 1e-9);

/// sup { <c,q> : E sum_t V_t(c_n + cost_n(x)) <= 0, x adapted feasible }
/// solved from its definition as one epigraph LP; pwl losses and costs only.
/// Returns +inf when the program is unbounded.
double defining_sigma_A(const MarketModel& model, const LossSpec& loss,
                        const ClaimProcess& q);

}  // namespace illiq::testing
