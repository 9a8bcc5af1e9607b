#include <doctest.h>

#include <cmath>
#include <random>

#include "illiq/dual.hpp"
#include "support/fixtures.hpp"
#include "support/instances.hpp"

using namespace illiq;
using namespace illiq::testing;

namespace {

ClaimProcess scalar_proc(const TreePtr& tree, std::initializer_list<double> vals) {
    ClaimProcess c(tree, 1);
    int n = 0;
    for (double v : vals) c.at(n++) = v;
    return c;
}

}  // namespace

TEST_SUITE("dual_engine") {

TEST_CASE("expected conjugate losses along the tree") {
    Bin1 fx = make_bin1();
    const TreePtr& tree = fx.model.tree;

    // indicator of the nonpositive axis conjugates to the indicator of q >= 0
    CHECK(expected_loss_conjugate(*tree, fx.indicator, scalar_proc(tree, {1.0, 2.0, 0.5})) ==
          doctest::Approx(0.0));
    CHECK(expected_loss_conjugate(*tree, fx.indicator, scalar_proc(tree, {1.0, -0.1, 1.0})) ==
          kInf);

    // exp(y) - 1 conjugates to q ln q - q + 1 at the horizon
    const ClaimProcess q = scalar_proc(tree, {1.0, 2.0, 0.5});
    const double expect = 0.5 * (2.0 * std::log(2.0) - 2.0 + 1.0) +
                          0.5 * (0.5 * std::log(0.5) - 0.5 + 1.0);
    CHECK(expected_loss_conjugate(*tree, fx.entropic, q) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("support of the hedgeable set in the complete binomial model") {
    Bin1 fx = make_bin1();
    const TreePtr& tree = fx.model.tree;

    // the risk-neutral density (1, 2/3, 4/3) prices every hedge to zero
    const ConjugateResult rn = support_C(fx.model, scalar_proc(tree, {1.0, 2.0 / 3.0, 4.0 / 3.0}));
    REQUIRE(rn.attained);
    CHECK(rn.value == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));

    // any other positive density admits claims with positive pairing
    const ConjugateResult off = support_C(fx.model, scalar_proc(tree, {1.0, 1.0, 1.0}));
    CHECK(off.value == kInf);

    // q = 0 supports only the zero pairing
    const ConjugateResult zero = support_C(fx.model, scalar_proc(tree, {0.0, 0.0, 0.0}));
    REQUIRE(zero.attained);
    CHECK(zero.value == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

    // negative entries are rejected in value
    const ConjugateResult neg = support_C(fx.model, scalar_proc(tree, {1.0, -1.0, 1.0}));
    CHECK(neg.value == kInf);
}

TEST_CASE("the hedging conjugate splits into loss and support parts") {
    Bin1 fx = make_bin1();
    const TreePtr& tree = fx.model.tree;
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> unif(0.1, 2.0);
    for (int rep = 0; rep < 10; ++rep) {
        // scaled risk-neutral densities are the ones with finite support term
        const double lam = unif(rng);
        const ClaimProcess q =
            scalar_proc(tree, {lam, lam * 2.0 / 3.0, lam * 4.0 / 3.0});
        const ConjugateResult whole = conjugate_phi(fx.model, fx.entropic, q);
        const ConjugateResult supp = support_C(fx.model, q);
        REQUIRE(whole.attained);
        REQUIRE(supp.attained);
        const double split = expected_loss_conjugate(*tree, fx.entropic, q) + supp.value;
        CHECK(whole.value == doctest::Approx(split).epsilon(1e-7));
    }
}

TEST_CASE("harvested certificates close the gap on the replicated call") {
    Bin1 fx = make_bin1();
    ClaimProcess hedged = fx.call;
    hedged.at(0) = -1.0 / 3.0;
    const DualCertificate cert = solve_dual(fx.model, fx.indicator, hedged);
    REQUIRE(cert.feasible);
    REQUIRE(cert.attained);
    CHECK(cert.value == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
    CHECK(cert.gap <= 1e-8);
    // any certificate density is a scaled risk-neutral measure (possibly zero)
    CHECK(cert.q.scalar(1) >= -1e-12);
    CHECK(cert.q.scalar(2) >= -1e-12);
    if (cert.q.scalar(1) > 1e-9)
        CHECK(cert.q.scalar(2) / cert.q.scalar(1) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("entropic hedging closes the duality gap") {
    Bin1 fx = make_bin1();
    const DualCertificate cert = solve_dual(fx.model, fx.entropic, fx.call);
    REQUIRE(cert.feasible);
    REQUIRE(cert.attained);
    CHECK(cert.gap <= 1e-6);
    CHECK(cert.value == doctest::Approx(0.31877110607912673).epsilon(1e-6));
    // q is a positive density with the risk-neutral one-step ratios
    CHECK(cert.q.scalar(0) > 0.0);
    CHECK(cert.q.scalar(2) / cert.q.scalar(1) == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("weak duality holds for arbitrary feasible densities") {
    Bin1 fx = make_bin1();
    const TreePtr& tree = fx.model.tree;
    const PrimalSolution primal = solve_alm(fx.model, fx.entropic, fx.call);
    REQUIRE(primal.status == SolveStatus::Optimal);
    std::mt19937 rng(1234);
    std::uniform_real_distribution<double> unif(0.05, 2.5);
    for (int rep = 0; rep < 25; ++rep) {
        const double lam = unif(rng);
        const ClaimProcess q = scalar_proc(tree, {lam, lam * 2.0 / 3.0, lam * 4.0 / 3.0});
        const ConjugateResult phi_star = conjugate_phi(fx.model, fx.entropic, q);
        if (phi_star.value == kInf) continue;
        double pair_cq = 0.0;
        for (int n = 0; n < 3; ++n)
            pair_cq += tree->prob(n) * fx.call.scalar(n) * q.scalar(n);
        CHECK(pair_cq - phi_star.value <= primal.value + 1e-6);
    }
}

TEST_CASE("the direct dual solve agrees with multiplier harvesting") {
    std::mt19937 rng(2718);
    InstanceOptions opt;
    opt.max_periods = 2;
    opt.max_assets = 2;
    int done = 0, tries = 0;
    while (done < 10 && tries < 60) {
        ++tries;
        const Instance inst = random_instance(rng, opt);
        const DualCertificate a = solve_dual(inst.model, inst.loss, inst.claim);
        if (!a.attained) continue;
        const DualCertificate b = solve_dual_direct(inst.model, inst.loss, inst.claim);
        REQUIRE(b.feasible);
        CHECK(a.value == doctest::Approx(b.value).epsilon(1e-6));
        ++done;
    }
    CHECK(done >= 10);
}

TEST_CASE("optimality checks accept saddle points and reject perturbations") {
    Bin1 fx = make_bin1();
    ClaimProcess hedged = fx.call;
    hedged.at(0) = -1.0 / 3.0;

    const PrimalSolution primal = solve_alm(fx.model, fx.indicator, hedged);
    const DualCertificate cert = solve_dual(fx.model, fx.indicator, hedged);
    REQUIRE(primal.status == SolveStatus::Optimal);
    REQUIRE(cert.attained);

    const OptimalityReport good = check_optimality(fx.model, fx.indicator, hedged, primal.x, cert);
    CHECK(good.pass);

    PortfolioProcess bad = primal.x;
    bad.at(0, 1) += 0.1;
    const OptimalityReport report = check_optimality(fx.model, fx.indicator, hedged, bad, cert);
    CHECK(!report.pass);

    const PrimalSolution ent = solve_alm(fx.model, fx.entropic, fx.call);
    const DualCertificate ecert = solve_dual(fx.model, fx.entropic, fx.call);
    REQUIRE(ent.status == SolveStatus::Optimal);
    REQUIRE(ecert.attained);
    CHECK(check_optimality(fx.model, fx.entropic, fx.call, ent.x, ecert).pass);
}

TEST_CASE("shadow prices of a liquid model are the quoted prices") {
    Bin1 fx = make_bin1();
    const PrimalSolution primal = solve_alm(fx.model, fx.entropic, fx.call);
    const DualCertificate cert = solve_dual(fx.model, fx.entropic, fx.call);
    REQUIRE(cert.attained);
    const ShadowPriceReport rep = shadow_prices(fx.model, cert, primal.x);
    const double spot[] = {1.0, 2.0, 0.5};
    for (int n = 0; n < 3; ++n) {
        REQUIRE(rep.nodes[n].defined);
        CHECK(rep.nodes[n].price[0] == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(rep.nodes[n].price[1] == doctest::Approx(spot[n]).epsilon(1e-6));
        CHECK(rep.nodes[n].in_conjugate_domain);
        CHECK(rep.nodes[n].complementary);
    }
    CHECK(rep.martingale);
    CHECK(rep.supermartingale);
    CHECK(rep.max_resid <= 1e-7);
}

TEST_CASE("shadow prices stay inside the bid-ask band") {
    BidAsk1 fx = make_bidask1();
    const DualCertificate cert = solve_dual(fx.model, fx.shortfall, fx.call);
    REQUIRE(cert.feasible);
    const PrimalSolution primal = solve_alm(fx.model, fx.shortfall, fx.call);
    REQUIRE(primal.status == SolveStatus::Optimal);
    const ShadowPriceReport rep = shadow_prices(fx.model, cert, primal.x);
    for (int n = 0; n < fx.model.tree->num_nodes(); ++n) {
        if (!rep.nodes[n].defined) continue;
        CHECK(rep.nodes[n].price[1] >= 0.9 * fx.mid(n, 1) - 1e-7);
        CHECK(rep.nodes[n].price[1] <= 1.1 * fx.mid(n, 1) + 1e-7);
        CHECK(rep.nodes[n].in_conjugate_domain);
    }
    CHECK(rep.supermartingale);
}

}  // TEST_SUITE
