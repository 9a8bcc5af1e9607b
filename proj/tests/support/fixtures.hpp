#pragma once

#include "illiq/market_model.hpp"
#include "illiq/scenario_tree.hpp"

namespace illiq::testing {

/// One-period binomial market: s0 = 1, leaf stock prices (2, 0.5) with
/// probabilities (1/2, 1/2), liquid cash, linear costs, no constraints.
struct Bin1 {
    MarketModel model;
    LossSpec indicator;  // hard budget loss at every date
    LossSpec entropic;   // budget at t=0, exponential(1) at t=1
    ClaimProcess call;      // (0; 1, 0)
    ClaimProcess cash_bond; // (0; 1, 1)
    ClaimProcess stock_fwd; // (0; 2, 0.5)
};
Bin1 make_bin1();

/// One-period trinomial market: leaf stock prices (2, 1, 0.5), probabilities
/// 1/3 each, otherwise as Bin1.  The call (0; 1, 0, 0) is not replicable.
struct Tri1 {
    MarketModel model;
    LossSpec indicator;
    LossSpec entropic;
    ClaimProcess call;
};
Tri1 make_tri1();

/// Deterministic-gain market: the stock costs 1 at the root and 2 on both
/// leaves, so buy-and-hold is a free lunch and the zero-cost cone is not
/// linear.
struct Arb1 {
    MarketModel model;
    LossSpec indicator;
};
Arb1 make_arb1();

/// Two-period binomial bid-ask market: mid prices follow u = 1.5, d = 0.75
/// from s0 = 1, trades execute at (0.9 s, 1.1 s).
struct BidAsk1 {
    MarketModel model;
    LossSpec shortfall;  // pwl slopes (0, 2)
    LossSpec tilted;     // pwl slopes (0.25, 3)
    ClaimProcess call;   // (s_T - 1)_+ at the leaves
    Eigen::MatrixXd mid; // nodes x assets
};
BidAsk1 make_bidask1();

}  // namespace illiq::testing
