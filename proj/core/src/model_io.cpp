#include "illiq/model_io.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <unordered_map>
#include <utility>

#include <nlohmann/json.hpp>

namespace illiq {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& msg) {
    throw ModelError(where + ": " + msg);
}

void check_fields(const json& obj, const std::string& where,
                  std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* a : allowed)
            if (it.key() == a) {
                known = true;
                break;
            }
        if (!known) fail(where, "unknown field '" + it.key() + "'");
    }
}

const json& need(const json& obj, const std::string& where, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) fail(where, std::string("missing field '") + key + "'");
    return *it;
}

double number(const json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf" || s == "+inf") return kInf;
        if (s == "-inf") return -kInf;
    }
    fail(where, "expected a number or \"inf\"/\"-inf\"");
}

int integer(const json& j, const std::string& where) {
    if (!j.is_number_integer()) fail(where, "expected an integer");
    return j.get<int>();
}

std::string text(const json& j, const std::string& where) {
    if (!j.is_string()) fail(where, "expected a string");
    return j.get<std::string>();
}

const json& array(const json& j, const std::string& where) {
    if (!j.is_array()) fail(where, "expected an array");
    return j;
}

const json& object(const json& j, const std::string& where) {
    if (!j.is_object()) fail(where, "expected an object");
    return j;
}

std::vector<double> number_array(const json& j, const std::string& where) {
    array(j, where);
    std::vector<double> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

ConvexFunction parse_fn(const json& j, const std::string& where) {
    object(j, where);
    const std::string kind = text(need(j, where, "kind"), where + ".kind");
    try {
        if (kind == "pwl") {
            check_fields(j, where, {"kind", "breakpoints", "slopes", "anchor"});
            auto b = number_array(need(j, where, "breakpoints"), where + ".breakpoints");
            auto s = number_array(need(j, where, "slopes"), where + ".slopes");
            double ax = 0.0, af = 0.0;
            if (j.contains("anchor")) {
                auto a = number_array(j["anchor"], where + ".anchor");
                if (a.size() != 2) fail(where + ".anchor", "expected [x0, f0]");
                ax = a[0];
                af = a[1];
            }
            return ConvexFunction::pwl(std::move(b), std::move(s), ax, af);
        }
        if (kind == "exp") {
            check_fields(j, where, {"kind", "alpha", "scale"});
            double a = number(need(j, where, "alpha"), where + ".alpha");
            double m = j.contains("scale") ? number(j["scale"], where + ".scale") : 1.0;
            return ConvexFunction::exponential(a, m);
        }
        if (kind == "power") {
            check_fields(j, where, {"kind", "p", "scale"});
            double p = number(need(j, where, "p"), where + ".p");
            double m = j.contains("scale") ? number(j["scale"], where + ".scale") : 1.0;
            return ConvexFunction::power(p, m);
        }
        if (kind == "indicator_nonpositive") {
            check_fields(j, where, {"kind"});
            return ConvexFunction::indicator_leq(0.0);
        }
    } catch (const ModelError&) {
        throw;
    } catch (const std::exception& e) {
        fail(where, e.what());
    }
    fail(where + ".kind", "unknown function kind '" + kind + "'");
}

json fn_to_json(const ConvexFunction& f) {
    auto jnum = [](double v) -> json {
        if (std::isfinite(v)) return v;
        return v > 0 ? json("inf") : json("-inf");
    };
    switch (f.kind()) {
        case ConvexFunction::Kind::Pwl: {
            if (f.breakpoints() == std::vector<double>{0.0} &&
                f.slopes() == std::vector<double>{0.0, kInf} && f.anchor_f() == 0.0)
                return json{{"kind", "indicator_nonpositive"}};
            json b = json::array(), s = json::array();
            for (double v : f.breakpoints()) b.push_back(jnum(v));
            for (double v : f.slopes()) s.push_back(jnum(v));
            return json{{"kind", "pwl"},
                        {"breakpoints", b},
                        {"slopes", s},
                        {"anchor", json::array({f.anchor_x(), f.anchor_f()})}};
        }
        case ConvexFunction::Kind::Exp:
            return json{{"kind", "exp"}, {"alpha", f.param()}, {"scale", f.scale()}};
        case ConvexFunction::Kind::Power:
            return json{{"kind", "power"}, {"p", f.param()}, {"scale", f.scale()}};
        default:
            throw ModelError("convex function: kind not representable in the model format");
    }
}

TreePtr parse_tree(const json& j, const std::string& where) {
    object(j, where);
    check_fields(j, where, {"nodes"});
    const json& nodes = array(need(j, where, "nodes"), where + ".nodes");
    std::vector<ScenarioTree::NodeSpec> specs;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const std::string loc = where + ".nodes[" + std::to_string(i) + "]";
        const json& n = object(nodes[i], loc);
        check_fields(n, loc, {"id", "time", "parent", "prob"});
        ScenarioTree::NodeSpec spec;
        spec.id = integer(need(n, loc, "id"), loc + ".id");
        spec.time = integer(need(n, loc, "time"), loc + ".time");
        spec.parent = integer(need(n, loc, "parent"), loc + ".parent");
        spec.prob = n.contains("prob") ? number(n["prob"], loc + ".prob") : 1.0;
        specs.push_back(spec);
    }
    try {
        return ScenarioTree::build(specs);
    } catch (const std::exception& e) {
        fail(where, e.what());
    }
}

/// Applies "time" entries first (broadcast over the slice), then "node"
/// overrides; duplicates of either are rejected.
template <typename Payload, typename ParseEntry>
std::vector<Payload> per_node_entries(const json& list, const std::string& where,
                                      const ScenarioTree& tree,
                                      const std::unordered_map<int, int>& ext2int,
                                      ParseEntry parse_entry, const char* payload_key) {
    array(list, where);
    std::vector<Payload> out(tree.num_nodes());
    std::vector<int> covered(tree.num_nodes(), 0);

    std::vector<bool> time_seen(tree.horizon() + 1, false);
    std::vector<bool> node_seen(tree.num_nodes(), false);
    for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string loc = where + "[" + std::to_string(i) + "]";
        const json& e = object(list[i], loc);
        check_fields(e, loc, {"time", "node", payload_key});
        if (e.contains("time") == e.contains("node"))
            fail(loc, "exactly one of 'time' or 'node' is required");
        Payload payload = parse_entry(need(e, loc, payload_key), loc + "." + payload_key);
        if (e.contains("time")) {
            int t = integer(e["time"], loc + ".time");
            if (t < 0 || t > tree.horizon()) fail(loc + ".time", "time outside the horizon");
            if (time_seen[t]) fail(loc + ".time", "duplicate time entry");
            time_seen[t] = true;
            for (int n : tree.nodes_at(t)) {
                if (covered[n] == 0) {
                    out[n] = payload;
                    covered[n] = 1;
                }
            }
        } else {
            int ext = integer(e["node"], loc + ".node");
            auto it = ext2int.find(ext);
            if (it == ext2int.end()) fail(loc + ".node", "unknown node id");
            if (node_seen[it->second]) fail(loc + ".node", "duplicate node entry");
            node_seen[it->second] = true;
            out[it->second] = payload;
            covered[it->second] = 2;
        }
    }
    return out;
}

}  // namespace

ModelFile parse_model_text(const std::string& str, const std::string& where) {
    json doc;
    try {
        doc = json::parse(str);
    } catch (const json::parse_error& e) {
        throw ModelError(where + ": " + e.what());
    }
    object(doc, where);
    check_fields(doc, where, {"version", "tree", "market", "losses", "claims"});

    ModelFile mf;
    mf.version = integer(need(doc, where, "version"), where + ".version");
    if (mf.version != 1) fail(where + ".version", "unsupported version");

    TreePtr tree = parse_tree(need(doc, where, "tree"), where + ".tree");
    std::unordered_map<int, int> ext2int;
    for (int n = 0; n < tree->num_nodes(); ++n) ext2int[tree->external_id(n)] = n;

    const std::string mwhere = where + ".market";
    const json& market = object(need(doc, where, "market"), mwhere);
    check_fields(market, mwhere, {"assets", "liquid_cash", "costs", "constraints", "theta"});
    const int J = integer(need(market, mwhere, "assets"), mwhere + ".assets");
    if (J < 1) fail(mwhere + ".assets", "at least one asset is required");

    CostSpec costs;
    if (market.contains("liquid_cash")) {
        const json& lc = market["liquid_cash"];
        if (!lc.is_boolean()) fail(mwhere + ".liquid_cash", "expected a boolean");
        costs.liquid_cash = lc.get<bool>();
    }
    {
        const std::string cwhere = mwhere + ".costs";
        auto parse_phi = [&](const json& pj, const std::string& ploc) {
            const json& arr = array(pj, ploc);
            if (static_cast<int>(arr.size()) != J)
                fail(ploc, "expected one function per asset");
            std::vector<ConvexFunction> fns;
            for (std::size_t k = 0; k < arr.size(); ++k)
                fns.push_back(parse_fn(arr[k], ploc + "[" + std::to_string(k) + "]"));
            return fns;
        };
        costs.phi = per_node_entries<std::vector<ConvexFunction>>(
            need(market, mwhere, "costs"), cwhere, *tree, ext2int, parse_phi, "phi");
        for (int n = 0; n < tree->num_nodes(); ++n)
            if (costs.phi[n].empty())
                fail(cwhere, "node " + std::to_string(tree->external_id(n)) +
                                 " has no cost entry");
    }

    ConstraintSpec constraints;
    if (market.contains("constraints")) {
        const std::string cwhere = mwhere + ".constraints";
        auto parse_set = [&](const json& pj, const std::string& ploc) {
            object(pj, ploc);
            check_fields(pj, ploc, {"A", "b"});
            const json& A = array(need(pj, ploc, "A"), ploc + ".A");
            auto b = number_array(need(pj, ploc, "b"), ploc + ".b");
            if (A.size() != b.size()) fail(ploc, "'A' and 'b' row counts differ");
            Polyhedron D;
            D.A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(A.size()), J);
            D.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b.size()));
            for (std::size_t r = 0; r < A.size(); ++r) {
                auto row = number_array(A[r], ploc + ".A[" + std::to_string(r) + "]");
                if (static_cast<int>(row.size()) != J)
                    fail(ploc + ".A[" + std::to_string(r) + "]",
                         "expected one coefficient per asset");
                for (int j = 0; j < J; ++j) D.A(static_cast<Eigen::Index>(r), j) = row[j];
                D.b[static_cast<Eigen::Index>(r)] = b[r];
            }
            return D;
        };
        constraints.at = per_node_entries<Polyhedron>(market["constraints"], cwhere, *tree,
                                                      ext2int, parse_set, "set");
        for (auto& D : constraints.at)
            if (D.A.cols() == 0) D = Polyhedron::whole_space(J);  // node had no entry
    }

    ClaimProcess theta;
    if (market.contains("theta")) {
        const std::string twhere = mwhere + ".theta";
        const json& tj = array(market["theta"], twhere);
        if (static_cast<int>(tj.size()) != tree->num_nodes())
            fail(twhere, "expected one row per node");
        Eigen::MatrixXd vals = Eigen::MatrixXd::Zero(tree->num_nodes(), J);
        for (std::size_t i = 0; i < tj.size(); ++i) {
            auto row = number_array(tj[i], twhere + "[" + std::to_string(i) + "]");
            if (static_cast<int>(row.size()) != J)
                fail(twhere + "[" + std::to_string(i) + "]", "expected one value per asset");
            for (int j = 0; j < J; ++j) vals(static_cast<Eigen::Index>(i), j) = row[j];
        }
        // rows are in declaration order, which is the tree's internal order
        theta = ClaimProcess(tree, std::move(vals));
    }

    try {
        mf.model = make_market_model(tree, J, std::move(costs), std::move(constraints),
                                     std::move(theta));
    } catch (const std::exception& e) {
        fail(mwhere, e.what());
    }

    const std::string lwhere = where + ".losses";
    const json& losses = object(need(doc, where, "losses"), lwhere);
    if (losses.empty()) fail(lwhere, "at least one loss is required");
    for (auto it = losses.begin(); it != losses.end(); ++it) {
        const std::string loc = lwhere + "." + it.key();
        LossSpec spec;
        if (it.value().is_array()) {
            if (static_cast<int>(it.value().size()) != tree->horizon() + 1)
                fail(loc, "expected one function per time 0..horizon");
            for (std::size_t k = 0; k < it.value().size(); ++k)
                spec.v.push_back(parse_fn(it.value()[k], loc + "[" + std::to_string(k) + "]"));
        } else {
            ConvexFunction fn = parse_fn(it.value(), loc);
            spec.v.assign(tree->horizon() + 1, fn);
        }
        mf.losses.emplace(it.key(), std::move(spec));
    }

    if (doc.contains("claims")) {
        const std::string cwhere = where + ".claims";
        const json& claims = object(doc["claims"], cwhere);
        for (auto it = claims.begin(); it != claims.end(); ++it) {
            const std::string loc = cwhere + "." + it.key();
            auto vals = number_array(it.value(), loc);
            if (static_cast<int>(vals.size()) != tree->num_nodes())
                fail(loc, "expected one value per node");
            Eigen::MatrixXd m(tree->num_nodes(), 1);
            for (int n = 0; n < tree->num_nodes(); ++n) m(n, 0) = vals[static_cast<std::size_t>(n)];
            mf.claims.emplace(it.key(), ClaimProcess(tree, std::move(m)));
        }
    }
    return mf;
}

ModelFile load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("cannot read model file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model_text(buf.str(), path);
}

ConvexFunction convex_fn_from_text(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ModelError(std::string("function: ") + e.what());
    }
    return parse_fn(j, "function");
}

std::string convex_fn_to_text(const ConvexFunction& f) { return fn_to_json(f).dump(); }

}  // namespace illiq
