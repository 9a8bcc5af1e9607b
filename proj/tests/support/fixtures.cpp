#include "support/fixtures.hpp"

namespace illiq::testing {

namespace {

TreePtr one_period_tree(const std::vector<double>& probs) {
    std::vector<ScenarioTree::NodeSpec> specs;
    specs.push_back({0, 0, -1, 1.0});
    for (int i = 0; i < static_cast<int>(probs.size()); ++i)
        specs.push_back({i + 1, 1, 0, probs[i]});
    return ScenarioTree::build(specs);
}

CostSpec linear_costs(const TreePtr& tree, const std::vector<double>& stock_price) {
    CostSpec costs;
    costs.liquid_cash = true;
    costs.phi.resize(tree->num_nodes());
    for (int n = 0; n < tree->num_nodes(); ++n) {
        costs.phi[n].push_back(ConvexFunction::linear(1.0));
        costs.phi[n].push_back(ConvexFunction::linear(stock_price[n]));
    }
    return costs;
}

LossSpec indicator_loss(int horizon) {
    LossSpec loss;
    for (int t = 0; t <= horizon; ++t) loss.v.push_back(ConvexFunction::indicator_leq(0.0));
    return loss;
}

ClaimProcess scalar_claim(const TreePtr& tree, const std::vector<double>& values) {
    ClaimProcess c(tree, 1);
    for (int n = 0; n < tree->num_nodes(); ++n) c.at(n) = values[n];
    return c;
}

}  // namespace

Bin1 make_bin1() {
    Bin1 fx;
    TreePtr tree = one_period_tree({0.5, 0.5});
    fx.model = make_market_model(tree, 2, linear_costs(tree, {1.0, 2.0, 0.5}));
    fx.indicator = indicator_loss(1);
    fx.entropic.v = {ConvexFunction::indicator_leq(0.0), ConvexFunction::exponential(1.0)};
    fx.call = scalar_claim(tree, {0.0, 1.0, 0.0});
    fx.cash_bond = scalar_claim(tree, {0.0, 1.0, 1.0});
    fx.stock_fwd = scalar_claim(tree, {0.0, 2.0, 0.5});
    return fx;
}

Tri1 make_tri1() {
    Tri1 fx;
    TreePtr tree = one_period_tree({1.0 / 3, 1.0 / 3, 1.0 / 3});
    fx.model = make_market_model(tree, 2, linear_costs(tree, {1.0, 2.0, 1.0, 0.5}));
    fx.indicator = indicator_loss(1);
    fx.entropic.v = {ConvexFunction::indicator_leq(0.0), ConvexFunction::exponential(1.0)};
    fx.call = scalar_claim(tree, {0.0, 1.0, 0.0, 0.0});
    return fx;
}

Arb1 make_arb1() {
    Arb1 fx;
    TreePtr tree = one_period_tree({0.5, 0.5});
    fx.model = make_market_model(tree, 2, linear_costs(tree, {1.0, 2.0, 2.0}));
    fx.indicator = indicator_loss(1);
    return fx;
}

BidAsk1 make_bidask1() {
    BidAsk1 fx;
    std::vector<ScenarioTree::NodeSpec> specs = {
        {0, 0, -1, 1.0}, {1, 1, 0, 0.5}, {2, 1, 0, 0.5},
        {3, 2, 1, 0.5},  {4, 2, 1, 0.5}, {5, 2, 2, 0.5}, {6, 2, 2, 0.5},
    };
    TreePtr tree = ScenarioTree::build(specs);
    const std::vector<double> stock = {1.0, 1.5, 0.75, 2.25, 1.125, 1.125, 0.5625};

    fx.mid.resize(tree->num_nodes(), 2);
    CostSpec costs;
    costs.liquid_cash = true;
    costs.phi.resize(tree->num_nodes());
    for (int n = 0; n < tree->num_nodes(); ++n) {
        fx.mid(n, 0) = 1.0;
        fx.mid(n, 1) = stock[n];
        costs.phi[n].push_back(ConvexFunction::linear(1.0));
        costs.phi[n].push_back(
            ConvexFunction::pwl({0.0}, {0.9 * stock[n], 1.1 * stock[n]}, 0.0, 0.0));
    }
    fx.model = make_market_model(tree, 2, std::move(costs));

    for (int t = 0; t <= 2; ++t) {
        fx.shortfall.v.push_back(ConvexFunction::pwl({0.0}, {0.0, 2.0}, 0.0, 0.0));
        fx.tilted.v.push_back(ConvexFunction::pwl({0.0}, {0.25, 3.0}, 0.0, 0.0));
    }

    fx.call = ClaimProcess(tree, 1);
    for (int n : tree->leaves()) fx.call.at(n) = std::max(stock[n] - 1.0, 0.0);
    return fx;
}

}  // namespace illiq::testing
