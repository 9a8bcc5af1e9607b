#pragma once

#include <array>
#include <vector>

#include "illiq/market_model.hpp"

namespace illiq {

/// Verdict on whether the zero-cost directions form a linear space: the cone
/// {x adapted | x_t in cone(D_t), sum_j S_j-recession(dx_j) <= 0 at every
/// node} must contain -x whenever it contains x.
struct LinealityReport {
    bool is_linear = false;
    PortfolioProcess ray;  // a direction with ray in the cone, -ray outside
    int lineality_dim = 0;
};

LinealityReport linearity_check(const MarketModel& model, const LossSpec& loss);

enum class RAECondition { Plus, Minus };
enum class RAEVerdict { Holds, Fails, Unknown };

/// Elasticity verdicts per time step.  lambda, C, ybar witness the defining
/// inequality; beta parameterises the four equivalent reformulations whose
/// grid verdicts are reported in forms (vacuously quantified forms count as
/// holding).
struct RAEReport {
    RAECondition condition = RAECondition::Plus;
    RAEVerdict verdict = RAEVerdict::Unknown;
    bool holds = false;

    struct PerTime {
        int time = 0;
        RAEVerdict verdict = RAEVerdict::Unknown;
        double lambda = 0.0, C = 0.0, ybar = 0.0;
        double beta = 0.0;
        std::array<RAEVerdict, 4> forms = {RAEVerdict::Unknown, RAEVerdict::Unknown,
                                           RAEVerdict::Unknown, RAEVerdict::Unknown};
    };
    std::vector<PerTime> times;
};

RAEReport rae_check(const LossSpec& loss, RAECondition condition);

/// Scale-invariance of the conjugate loss domains: some lambda != 1 with
/// lambda * dom EV* inside dom EV*, checked directly on the per-time domain
/// intervals and, failing that, through the elasticity conditions.
struct ScalingReport {
    bool holds = false;
    double lambda = 0.0;
    bool via_elasticity = false;
};

ScalingReport scaling_domain_check(const LossSpec& loss, const ScenarioTree& tree);

struct AssumptionReport {
    ValidationReport structural;
    bool losses_monotone = false;  // separable nondecreasing losses vanish at 0
    LinealityReport linearity;
    ScalingReport scaling;
    bool dual_feasible = false;  // a finite dual value exists at the zero claim
    double dual_probe = 0.0;
    bool all_pass = false;
};

AssumptionReport assumption_report(const MarketModel& model, const LossSpec& loss);

}  // namespace illiq
