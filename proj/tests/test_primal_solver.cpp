#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "illiq/primal.hpp"
#include "support/fixtures.hpp"
#include "support/instances.hpp"
#include "support/oracles.hpp"

using namespace illiq;
using namespace illiq::testing;

TEST_SUITE("primal_solver") {

TEST_CASE("zero claim with indicator losses costs nothing") {
    Bin1 fx = make_bin1();
    const ClaimProcess zero = ClaimProcess::zero(fx.model.tree);
    const PrimalSolution sol = solve_alm(fx.model, fx.indicator, zero);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.value == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
}

TEST_CASE("the hedged call is replicated by a unique strategy") {
    Bin1 fx = make_bin1();
    // claim: call payoff less its replication premium paid up front
    ClaimProcess hedged = fx.call;
    hedged.at(0) = -1.0 / 3.0;
    const PrimalSolution sol = solve_alm(fx.model, fx.indicator, hedged);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.value == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
    CHECK(sol.x(0, 0) == doctest::Approx(-1.0 / 3.0).epsilon(1e-7));
    CHECK(sol.x(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-7));
    CHECK(sol.x(1, 0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-7));
    CHECK(sol.x(2, 1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-7));
}

TEST_CASE("entropic hedging of the call matches the closed form") {
    Bin1 fx = make_bin1();
    // min over x of E exp(c_1 + S(dx)) - 1 with the stock bought at the root:
    // optimum exp((1/3) - (5/3) ln 2 + ln 3) - 1 at the balanced position.
    const double closed = std::exp(1.0 / 3.0 - 5.0 / 3.0 * std::log(2.0) + std::log(3.0)) - 1.0;
    const PrimalSolution sol = solve_alm(fx.model, fx.entropic, fx.call);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.value == doctest::Approx(0.31877110607912673).epsilon(1e-8));
    CHECK(sol.value == doctest::Approx(closed).epsilon(1e-8));

    const double delta = (2.0 / 3.0) * (1.0 + std::log(2.0));
    CHECK(sol.x(0, 0) == doctest::Approx(-delta).epsilon(1e-3));
    CHECK(sol.x(0, 1) == doctest::Approx(delta).epsilon(1e-3));
    CHECK(sol.cuts > 0);
}

TEST_CASE("superhedging premia for the binomial call") {
    Bin1 fx = make_bin1();
    ClaimProcess unit = ClaimProcess::zero(fx.model.tree);
    unit.at(0) = 1.0;

    const HedgeResult sup = superhedge(fx.model, fx.call, unit, HedgeSide::Sup);
    REQUIRE(sup.status == SolveStatus::Optimal);
    CHECK(sup.value == doctest::Approx(1.0 / 3.0).epsilon(1e-9));

    const HedgeResult inf = superhedge(fx.model, fx.call, unit, HedgeSide::Inf);
    REQUIRE(inf.status == SolveStatus::Optimal);
    CHECK(inf.value == doctest::Approx(1.0 / 3.0).epsilon(1e-9));

    // premium paid at the horizon: the call costs a third of a unit bond
    const HedgeResult skew = superhedge(fx.model, fx.call, fx.cash_bond, HedgeSide::Sup);
    REQUIRE(skew.status == SolveStatus::Optimal);
    CHECK(skew.value == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("incomplete one-period market brackets the call") {
    Tri1 fx = make_tri1();
    ClaimProcess unit = ClaimProcess::zero(fx.model.tree);
    unit.at(0) = 1.0;
    const HedgeResult sup = superhedge(fx.model, fx.call, unit, HedgeSide::Sup);
    const HedgeResult inf = superhedge(fx.model, fx.call, unit, HedgeSide::Inf);
    REQUIRE(sup.status == SolveStatus::Optimal);
    REQUIRE(inf.status == SolveStatus::Optimal);
    CHECK(sup.value == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(inf.value == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
}

TEST_CASE("superhedge agrees with exhaustive vertex enumeration") {
    std::mt19937 rng(411);
    InstanceOptions opt;
    opt.max_periods = 1;
    opt.max_assets = 2;
    int done = 0;
    while (done < 8) {
        const Instance inst = random_instance(rng, opt);
        ClaimProcess unit = ClaimProcess::zero(inst.model.tree);
        unit.at(0) = 1.0;
        for (HedgeSide side : {HedgeSide::Sup, HedgeSide::Inf}) {
            const HedgeResult got = superhedge(inst.model, inst.claim, unit, side);
            const double want = enumerate_superhedge(inst.model, inst.claim, unit, side);
            if (got.status == SolveStatus::Optimal) {
                REQUIRE(std::isfinite(want));
                CHECK(got.value == doctest::Approx(want).epsilon(1e-8));
            }
        }
        ++done;
    }
}

TEST_CASE("cutting-plane values agree with a projected subgradient oracle") {
    std::mt19937 rng(713);
    InstanceOptions opt;
    opt.max_periods = 1;
    opt.max_assets = 2;
    opt.positive_loss_slope = true;
    int checked = 0, tries = 0;
    while (checked < 8 && tries < 64) {
        ++tries;
        const Instance inst = random_instance(rng, opt);
        if (inst.model.tree->num_nodes() > 6) continue;
        const PrimalSolution sol = solve_alm(inst.model, inst.loss, inst.claim);
        if (sol.status != SolveStatus::Optimal) continue;
        double approx = 0.0;
        try {
            approx = subgradient_alm_value(inst.model, inst.loss, inst.claim);
        } catch (const std::logic_error&) {
            continue;  // constraint rows that are not a coordinate box
        }
        CHECK(sol.value <= approx + 1e-6 * (1.0 + std::abs(approx)));
        CHECK(sol.value == doctest::Approx(approx).epsilon(1e-4));
        ++checked;
    }
    CHECK(checked >= 8);
}

TEST_CASE("hedgeable claims are recognised with witnesses and certificates") {
    Bin1 fx = make_bin1();

    ClaimProcess hedged = fx.call;
    hedged.at(0) = -1.0 / 3.0;
    const MembershipResult in = recession_membership(fx.model, hedged);
    CHECK(in.member);
    const ClaimProcess cost = trading_cost(fx.model, in.x);
    for (int n = 0; n < 3; ++n)
        CHECK(cost.scalar(n) + hedged.scalar(n) <= 1e-7);

    ClaimProcess underfunded = fx.call;
    underfunded.at(0) = -0.3;  // receives less than the replication cost
    const MembershipResult out = recession_membership(fx.model, underfunded);
    CHECK(!out.member);
    REQUIRE(out.certificate_valid);
    double pair_claim = 0.0, qmin = kInf;
    for (int n = 0; n < 3; ++n) {
        pair_claim += fx.model.tree->prob(n) * out.q.scalar(n) * underfunded.scalar(n);
        qmin = std::min(qmin, out.q.scalar(n));
    }
    CHECK(qmin >= -1e-9);
    CHECK(pair_claim > 1e-9);
}

TEST_CASE("membership in the conical model agrees with conical superhedging") {
    std::mt19937 rng(515);
    InstanceOptions opt;
    opt.max_periods = 2;
    opt.max_assets = 2;
    ClaimProcess unit;
    for (int rep = 0; rep < 12; ++rep) {
        const Instance inst = random_instance(rng, opt);
        unit = ClaimProcess::zero(inst.model.tree);
        unit.at(0) = 1.0;
        const MembershipResult m = recession_membership(inst.model, inst.claim);
        const HedgeResult h = superhedge(inst.model, inst.claim, unit, HedgeSide::Sup, true);
        if (h.status == SolveStatus::UnboundedBelow) {
            CHECK(m.member);  // free cash: any premium level is hedgeable
        } else if (h.status == SolveStatus::Infeasible) {
            CHECK(!m.member);
        } else if (h.status == SolveStatus::Optimal) {
            if (h.value <= -1e-6) CHECK(m.member);
            if (h.value >= 1e-6) CHECK(!m.member);
        }
    }
}

TEST_CASE("the value function is convex and monotone in the claim") {
    std::mt19937 rng(616);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    InstanceOptions opt;
    opt.max_periods = 2;
    opt.positive_loss_slope = true;
    int done = 0, tries = 0;
    while (done < 10 && tries < 40) {
        ++tries;
        const Instance inst = random_instance(rng, opt);
        const TreePtr& tree = inst.model.tree;
        ClaimProcess c1(tree, 1), c2(tree, 1);
        for (int n = 0; n < tree->num_nodes(); ++n) {
            c1.at(n) = 0.5 * gauss(rng);
            c2.at(n) = 0.5 * gauss(rng);
        }
        auto value = [&](const ClaimProcess& c) {
            const PrimalSolution s = solve_alm(inst.model, inst.loss, c);
            return s.status == SolveStatus::Optimal ? s.value : -kInf;
        };
        const double v1 = value(c1), v2 = value(c2);
        if (!std::isfinite(v1) || !std::isfinite(v2)) continue;
        const double lam = unif(rng);
        const double mix = value(c1 * lam + c2 * (1.0 - lam));
        const double bound = lam * v1 + (1.0 - lam) * v2;
        CHECK(mix <= bound + 1e-6 * (1.0 + std::abs(bound)));

        // lowering the claim can only lower the optimal expected loss
        ClaimProcess lower = c1;
        lower.at(0) -= 0.25;
        CHECK(value(lower) <= v1 + 1e-8);
        ++done;
    }
    CHECK(done >= 10);
}

TEST_CASE("an arbitrage model with sloped losses is unbounded below") {
    Arb1 fx = make_arb1();
    LossSpec sloped;
    sloped.v = {ConvexFunction::pwl({0.0}, {0.1, 1.0}, 0.0, 0.0),
                ConvexFunction::pwl({0.0}, {0.1, 1.0}, 0.0, 0.0)};
    const ClaimProcess zero = ClaimProcess::zero(fx.model.tree);
    const PrimalSolution sol = solve_alm(fx.model, sloped, zero);
    REQUIRE(sol.status == SolveStatus::UnboundedBelow);
    CHECK(sol.value == -kInf);

    // the ray strictly decreases the objective's recession function
    const ClaimProcess dir = trading_cost(fx.model, sol.ray);
    double recession = 0.0;
    for (int n = 0; n < 3; ++n) {
        const double y = dir.scalar(n);
        recession += fx.model.tree->prob(n) * (y > 0.0 ? y : 0.1 * y);
    }
    CHECK(recession < -1e-9);
}

}  // TEST_SUITE
