#include <doctest.h>

#include <string>

#include "illiq/model_io.hpp"

using namespace illiq;

namespace {

// 3-node binomial declared root, then leaves with external ids 5 and 3.
const char* kShuffled = R"({
  "version": 1,
  "tree": {"nodes": [
    {"id": 0, "time": 0, "parent": -1},
    {"id": 5, "time": 1, "parent": 0, "prob": 0.5},
    {"id": 3, "time": 1, "parent": 0, "prob": 0.5}
  ]},
  "market": {
    "assets": 1,
    "costs": [
      {"time": 1, "phi": [{"kind": "pwl", "breakpoints": [], "slopes": [2.0]}]},
      {"node": 5, "phi": [{"kind": "pwl", "breakpoints": [], "slopes": [7.0]}]},
      {"time": 0, "phi": [{"kind": "pwl", "breakpoints": [], "slopes": [1.0]}]}
    ],
    "constraints": [
      {"time": 0, "set": {"A": [[1.0]], "b": [0.0]}}
    ],
    "theta": [[0.0], [0.25], [0.0]]
  },
  "losses": {"flat": {"kind": "indicator_nonpositive"}},
  "claims": {"c": [1.0, 2.0, 3.0]}
})";

}  // namespace

TEST_SUITE("model_io") {

TEST_CASE("the bundled binomial model loads and validates") {
    const ModelFile mf = load_model_file(std::string(ILLIQ_MODELS_DIR) + "/bin1.json");
    CHECK(mf.version == 1);
    CHECK(mf.model.tree->num_nodes() == 3);
    CHECK(mf.model.assets == 2);
    CHECK(mf.model.costs.liquid_cash);
    CHECK(mf.model.cost(1, 1).value(1.0) == doctest::Approx(2.0));
    CHECK(mf.model.cost(2, 1).value(1.0) == doctest::Approx(0.5));
    REQUIRE(mf.losses.count("indicator") == 1);
    REQUIRE(mf.losses.count("entropic") == 1);
    CHECK(mf.losses.at("indicator").v.size() == 2);
    CHECK(mf.losses.at("entropic").v[1].value(1.0) > 0.0);
    REQUIRE(mf.claims.count("call") == 1);
    CHECK(mf.claims.at("call")(1) == doctest::Approx(1.0));
    CHECK(validate_model(mf.model, mf.losses.at("indicator")).ok());
}

TEST_CASE("time entries broadcast and node entries override them") {
    const ModelFile mf = parse_model_text(kShuffled, "test");
    const TreePtr& tree = mf.model.tree;
    REQUIRE(tree->num_nodes() == 3);
    CHECK(tree->external_id(1) == 5);
    CHECK(tree->external_id(2) == 3);

    CHECK(mf.model.cost(0, 0).value(1.0) == doctest::Approx(1.0));
    CHECK(mf.model.cost(1, 0).value(1.0) == doctest::Approx(7.0));  // node override
    CHECK(mf.model.cost(2, 0).value(1.0) == doctest::Approx(2.0));  // time broadcast

    Eigen::VectorXd minus = -Eigen::VectorXd::Ones(1), plus = Eigen::VectorXd::Ones(1);
    CHECK(mf.model.constraint(0).contains(minus));
    CHECK(!mf.model.constraint(0).contains(plus));

    // claims and theta rows follow declaration order, not external ids
    CHECK(mf.claims.at("c")(1) == doctest::Approx(2.0));
    CHECK(mf.claims.at("c")(2) == doctest::Approx(3.0));
    CHECK(mf.model.theta(1, 0) == doctest::Approx(0.25));
}

TEST_CASE("strict parsing rejects malformed files") {
    auto sub = [&](const std::string& from, const std::string& to) {
        std::string s = kShuffled;
        const auto pos = s.find(from);
        REQUIRE(pos != std::string::npos);
        return s.replace(pos, from.size(), to);
    };

    CHECK_THROWS_WITH_AS(parse_model_text("{", "t"), doctest::Contains("t:"), ModelError);
    CHECK_THROWS_WITH_AS(parse_model_text(sub("\"version\": 1", "\"version\": 2"), "t"),
                         doctest::Contains("unsupported version"), ModelError);
    CHECK_THROWS_WITH_AS(parse_model_text(sub("\"assets\": 1", "\"assets\": 1, \"frog\": 2"), "t"),
                         doctest::Contains("unknown field 'frog'"), ModelError);
    CHECK_THROWS_WITH_AS(parse_model_text(sub("{\"time\": 0, \"phi\"", "{\"time\": 1, \"phi\""), "t"),
                         doctest::Contains("duplicate time entry"), ModelError);
    CHECK_THROWS_WITH_AS(parse_model_text(sub("{\"node\": 5, \"phi\"", "{\"node\": 9, \"phi\""), "t"),
                         doctest::Contains("unknown node id"), ModelError);
    CHECK_THROWS_WITH_AS(parse_model_text(sub("\"c\": [1.0, 2.0, 3.0]", "\"c\": [1.0]"), "t"),
                         doctest::Contains("one value per node"), ModelError);
    CHECK_THROWS_WITH_AS(parse_model_text(sub("\"losses\": {\"flat\": {\"kind\": \"indicator_nonpositive\"}}",
                                              "\"losses\": {}"), "t"),
                         doctest::Contains("at least one loss"), ModelError);
    CHECK_THROWS_WITH_AS(parse_model_text(sub("{\"node\": 5, \"phi\"", "{\"node\": 5, \"time\": 1, \"phi\""), "t"),
                         doctest::Contains("exactly one of"), ModelError);
    CHECK_THROWS_AS(load_model_file("/nonexistent/nowhere.json"), ModelError);
}

TEST_CASE("duplicate node overrides are rejected") {
    std::string s = kShuffled;
    const std::string entry = "{\"node\": 5, \"phi\": [{\"kind\": \"pwl\", \"breakpoints\": [], \"slopes\": [7.0]}]}";
    const auto pos = s.find(entry);
    REQUIRE(pos != std::string::npos);
    s.insert(pos + entry.size(), ", " + entry);
    CHECK_THROWS_WITH_AS(parse_model_text(s, "t"), doctest::Contains("duplicate node entry"),
                         ModelError);
}

TEST_CASE("inf strings encode bounded domains") {
    const ConvexFunction f = convex_fn_from_text(
        R"({"kind": "pwl", "breakpoints": [-1.0, 1.0], "slopes": ["-inf", 0.0, "inf"]})");
    CHECK(f.value(0.0) == 0.0);
    CHECK(f.value(2.0) == kInf);
    CHECK(f.value(-2.0) == kInf);
    CHECK(f.domain().lo == doctest::Approx(-1.0));
    CHECK(f.domain().hi == doctest::Approx(1.0));
}

TEST_CASE("convex functions round-trip through their text form") {
    const char* cases[] = {
        R"({"kind": "pwl", "breakpoints": [-0.5, 0.25], "slopes": [-1.0, 0.5, 3.0], "anchor": [0.0, 0.125]})",
        R"({"kind": "exp", "alpha": 2.0, "scale": 0.5})",
        R"({"kind": "power", "p": 3.0, "scale": 2.0})",
        R"({"kind": "indicator_nonpositive"})",
    };
    for (const char* text : cases) {
        const ConvexFunction f1 = convex_fn_from_text(text);
        const ConvexFunction f2 = convex_fn_from_text(convex_fn_to_text(f1));
        CHECK(f1.kind() == f2.kind());
        for (double x : {-2.0, -0.5, -0.1, 0.0, 0.3, 1.0, 2.5}) {
            const double a = f1.value(x), b = f2.value(x);
            if (a == kInf)
                CHECK(b == kInf);
            else
                CHECK(b == doctest::Approx(a).epsilon(1e-12));
        }
    }
    CHECK(convex_fn_to_text(ConvexFunction::indicator_leq(0.0)).find("indicator_nonpositive") !=
          std::string::npos);
}

TEST_CASE("conjugate-only kinds cannot be written to text") {
    const ConvexFunction entropy = ConvexFunction::exponential(1.0).conjugate();
    CHECK_THROWS_AS((void)convex_fn_to_text(entropy), ModelError);
}

TEST_CASE("function parsing reports bad shapes") {
    CHECK_THROWS_WITH_AS(convex_fn_from_text(R"({"kind": "spline"})"),
                         doctest::Contains("unknown function kind"), ModelError);
    CHECK_THROWS_AS(convex_fn_from_text(R"({"kind": "exp"})"), ModelError);
    CHECK_THROWS_AS(convex_fn_from_text(R"({"kind": "pwl", "breakpoints": [0.0], "slopes": [1.0]})"),
                    ModelError);
    CHECK_THROWS_AS(convex_fn_from_text(R"({"kind": "pwl", "breakpoints": [], "slopes": [1.0], "anchor": [1.0]})"),
                    ModelError);
}

}  // TEST_SUITE
