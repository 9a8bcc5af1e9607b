#include "illiq/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace illiq {

using nlohmann::json;

nlohmann::json jnum(double v) {
    if (std::isnan(v)) return json("nan");
    if (!std::isfinite(v)) return v > 0 ? json("inf") : json("-inf");
    return json(v);
}

double jnum_read(const nlohmann::json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf" || s == "+inf") return kInf;
        if (s == "-inf") return -kInf;
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw std::invalid_argument("jnum_read: not a number");
}

std::string content_digest(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Report make_report(const std::string& command, nlohmann::json inputs) {
    Report rep;
    rep.doc["command"] = command;
    rep.doc["inputs"] = std::move(inputs);
    rep.doc["results"] = json::object();
    rep.doc["warnings"] = json::array();
    rep.doc["timing_ms"] = json::object();
    return rep;
}

std::string Report::to_json() const { return doc.dump(2) + "\n"; }

Report Report::from_json(const std::string& text) { return Report{json::parse(text)}; }

namespace {

bool is_point_list(const json& j) {
    if (!j.is_array() || j.empty()) return false;
    for (const auto& e : j)
        if (!(e.is_object() && e.size() == 2 && e.contains("scale") && e.contains("value")))
            return false;
    return true;
}

std::string scalar_text(const json& j) {
    if (j.is_string()) return j.get<std::string>();
    return j.dump();
}

void flatten(const json& j, const std::string& path, std::ostringstream& rows,
             std::ostringstream& tables) {
    if (is_point_list(j)) {
        tables << "\n" << path << "\nscale,value\n";
        for (const auto& e : j)
            tables << scalar_text(e["scale"]) << "," << scalar_text(e["value"]) << "\n";
        return;
    }
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            flatten(it.value(), path.empty() ? it.key() : path + "." + it.key(), rows, tables);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i)
            flatten(j[i], path + "[" + std::to_string(i) + "]", rows, tables);
    } else {
        rows << path << "," << scalar_text(j) << "\n";
    }
}

const char* solve_status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::UnboundedBelow: return "unbounded_below";
        case SolveStatus::Infeasible: return "infeasible";
        default: return "numerical_error";
    }
}

const char* valuation_status_name(ValuationStatus s) {
    switch (s) {
        case ValuationStatus::Ok: return "ok";
        case ValuationStatus::NoBracket: return "no_bracket";
        case ValuationStatus::Unbounded: return "unbounded";
        case ValuationStatus::ConditionFailed: return "condition_failed";
        default: return "premium_in_recession_cone";
    }
}

const char* rae_verdict_name(RAEVerdict v) {
    switch (v) {
        case RAEVerdict::Holds: return "holds";
        case RAEVerdict::Fails: return "fails";
        default: return "unknown";
    }
}

}  // namespace

std::string Report::to_csv() const {
    std::ostringstream rows, tables;
    rows << "key,value\n";
    flatten(doc, "", rows, tables);
    return rows.str() + tables.str();
}

json describe(const ClaimProcess& p) {
    json vals = json::array();
    for (Eigen::Index n = 0; n < p.values().rows(); ++n) {
        if (p.dim() == 1) {
            vals.push_back(jnum(p.values()(n, 0)));
        } else {
            json row = json::array();
            for (int j = 0; j < p.dim(); ++j) row.push_back(jnum(p.values()(n, j)));
            vals.push_back(row);
        }
    }
    return json{{"dim", p.dim()}, {"values", vals}};
}

json describe(const PrimalSolution& s) {
    return json{{"status", solve_status_name(s.status)}, {"value", jnum(s.value)},
                {"x", describe(s.x)},                    {"cost", describe(s.cost)},
                {"lp_iterations", s.lp_iterations},      {"cuts", s.cuts}};
}

json describe(const HedgeResult& h) {
    return json{{"status", solve_status_name(h.status)},
                {"value", jnum(h.value)},
                {"x", describe(h.x)},
                {"cuts", h.cuts}};
}

json describe(const DualCertificate& c) {
    return json{{"q", describe(c.q)},
                {"w", describe(c.w)},
                {"ev_star", jnum(c.ev_star)},
                {"cost_term", jnum(c.cost_term)},
                {"constraint_term", jnum(c.constraint_term)},
                {"value", jnum(c.value)},
                {"primal_value", jnum(c.primal_value)},
                {"gap", jnum(c.gap)},
                {"feasible", c.feasible},
                {"attained", c.attained}};
}

json describe(const OptimalityReport& r) {
    json nodes = json::array();
    for (const auto& n : r.nodes)
        nodes.push_back(json{{"node", n.node},
                             {"holding_ok", n.holding_ok},
                             {"loss_ok", n.loss_ok},
                             {"cost_ok", n.cost_ok},
                             {"holding_resid", jnum(n.holding_resid)},
                             {"loss_resid", jnum(n.loss_resid)},
                             {"cost_resid", jnum(n.cost_resid)}});
    return json{{"pass", r.pass}, {"nodes", nodes}};
}

json describe(const ShadowPriceReport& r) {
    json nodes = json::array();
    for (const auto& n : r.nodes) {
        json price = json::array();
        for (Eigen::Index j = 0; j < n.price.size(); ++j) price.push_back(jnum(n.price[j]));
        nodes.push_back(json{{"node", n.node},
                             {"defined", n.defined},
                             {"price", price},
                             {"in_conjugate_domain", n.in_conjugate_domain},
                             {"complementary", n.complementary}});
    }
    return json{{"nodes", nodes},
                {"martingale", r.martingale},
                {"supermartingale", r.supermartingale},
                {"max_resid", jnum(r.max_resid)}};
}

json describe(const ValuationResult& r) {
    json samples = json::array();
    for (const auto& [rate, gap] : r.samples)
        samples.push_back(json{{"scale", jnum(rate)}, {"value", jnum(gap)}});
    return json{{"value", jnum(r.value)},
                {"side", r.side == Side::Short ? "short" : "long"},
                {"status", valuation_status_name(r.status)},
                {"bracket_lo", jnum(r.bracket_lo)},
                {"bracket_hi", jnum(r.bracket_hi)},
                {"bound_lo", jnum(r.bound_lo)},
                {"bound_hi", jnum(r.bound_hi)},
                {"dual_bound", jnum(r.dual_bound)},
                {"samples", samples}};
}

json describe(const DualBound& b) {
    json out{{"value", jnum(b.value)}, {"status", valuation_status_name(b.status)}};
    out["q"] = b.q.tree() ? describe(b.q) : json();
    return out;
}

json describe(const ValidationReport& r) {
    json checks = json::array();
    for (const auto& c : r.checks)
        checks.push_back(json{
            {"name", c.name}, {"pass", c.pass}, {"nodes", c.nodes}, {"detail", c.detail}});
    return json{{"ok", r.ok()}, {"checks", checks}, {"warnings", r.warnings}};
}

json describe(const LinealityReport& r) {
    json out{{"is_linear", r.is_linear}, {"lineality_dim", r.lineality_dim}};
    out["ray"] = r.is_linear ? json() : describe(r.ray);
    return out;
}

json describe(const RAEReport& r) {
    json times = json::array();
    for (const auto& t : r.times) {
        json forms = json::array();
        for (RAEVerdict f : t.forms) forms.push_back(rae_verdict_name(f));
        times.push_back(json{{"time", t.time},
                             {"verdict", rae_verdict_name(t.verdict)},
                             {"lambda", jnum(t.lambda)},
                             {"C", jnum(t.C)},
                             {"ybar", jnum(t.ybar)},
                             {"beta", jnum(t.beta)},
                             {"forms", forms}});
    }
    return json{{"condition", r.condition == RAECondition::Plus ? "plus" : "minus"},
                {"verdict", rae_verdict_name(r.verdict)},
                {"holds", r.holds},
                {"times", times}};
}

json describe(const ScalingReport& r) {
    return json{
        {"holds", r.holds}, {"lambda", jnum(r.lambda)}, {"via_elasticity", r.via_elasticity}};
}

json describe(const AssumptionReport& r) {
    return json{{"structural", describe(r.structural)},
                {"losses_monotone", r.losses_monotone},
                {"linearity", describe(r.linearity)},
                {"scaling", describe(r.scaling)},
                {"dual_feasible", r.dual_feasible},
                {"dual_probe", jnum(r.dual_probe)},
                {"all_pass", r.all_pass}};
}

}  // namespace illiq
