#pragma once

// Internals shared between the dual engine and the valuation layer: the LP
// assembly of the conjugate-side minimisation over w (optionally joint in q)
// and the exact pricing helpers for certificates.

#include <utility>
#include <vector>

#include "illiq/lp.hpp"
#include "illiq/market_model.hpp"

namespace illiq::detail {

inline constexpr double kGapTol = 1e-7;
inline constexpr int kMaxCutRounds = 500;

double clamp_into(const Interval& dom, double x);

/// A representative subgradient of f at x: midpoint of the subdifferential
/// when bounded, its finite end otherwise, NaN when empty.
double cut_slope(const ConvexFunction& f, double x);

double interval_dist(const Interval& iv, double v);

/// E_n[w_{t+1}] - w_n, the conditional one-step increment at a nonleaf node.
Eigen::VectorXd cond_dw(const ScenarioTree& tree, const ClaimProcess& w, int node);

/// sigma_D(v) through its dual form min { b.nu | A'nu = v, nu >= 0 } with the
/// equality relaxed by eps, so multiplier noise cannot turn a finite value
/// into +inf.
double tolerant_support(const Polyhedron& D, const Eigen::VectorXd& v, double eps);

/// Exact conjugate-side pricing of a certificate: E sum (q S)*(w) and the
/// holding-set term E sum sigma_D(E_t dw).
std::pair<double, double> certificate_terms(const MarketModel& model, const ClaimProcess& q,
                                            const ClaimProcess& w);

/// Epigraph rows of a pwl function g applied to variable v: s >= g(v),
/// v in dom g.
void add_pwl_epigraph(LpBuilder& lp, int svar, int v, const ConvexFunction& g);

/// Supporting plane of the jointly convex (q, w) -> (q f)*(w) generated by a
/// domain point d: s >= d*w - f(d)*q.  No-op when d or f(d) is not finite.
void add_perspective_cut(LpBuilder& lp, int svar, int wv, int qv, const ConvexFunction& f,
                         double d);

/// Domain point of f generating the deepest perspective cut at (num, den):
/// the maximiser of d*num - f(d)*den.
double perspective_anchor(const ConvexFunction& f, double num, double den);

/// LP epigraph of the minimisation over w (and jointly over q >= 0 when
/// fixed_q is null).
struct WAssembly {
    LpBuilder lp;
    std::vector<std::vector<int>> wvar;  // [node][asset]
    std::vector<int> qvar;               // [node]; empty when q is fixed

    struct SmoothCost {
        int node = 0, asset = 0, svar = -1;
        double last_w = kInf, last_q = kInf;
    };
    std::vector<SmoothCost> smooth_cost;
    // cache of (q_n phi_j)* for fixed q, indexed [node][asset]
    std::vector<std::vector<ConvexFunction>> conj;
};

void assemble_w_problem(const MarketModel& model, const ClaimProcess* fixed_q, WAssembly& wa);

ClaimProcess extract_w(const WAssembly& wa, const MarketModel& model, const LpSolution& sol);

}  // namespace illiq::detail
