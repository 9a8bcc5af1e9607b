#include "illiq/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "illiq/model_io.hpp"
#include "illiq/report.hpp"

namespace illiq {

namespace {

using nlohmann::json;

struct Options {
    std::string command;
    std::string model_path;
    std::string claim, loss, premium, book;
    std::string side = "short";
    std::string format = "json";
    std::string sweep;
    double tol = 1e-6;
    double position = 1.0;
    std::vector<std::string> argv_echo;
};

const LossSpec& pick_loss(const ModelFile& mf, const std::string& name) {
    if (!name.empty()) {
        auto it = mf.losses.find(name);
        if (it == mf.losses.end()) throw ModelError("unknown loss '" + name + "'");
        return it->second;
    }
    if (mf.losses.size() == 1) return mf.losses.begin()->second;
    throw ModelError("--loss is required: the model defines " +
                     std::to_string(mf.losses.size()) + " losses");
}

ClaimProcess pick_claim(const ModelFile& mf, const std::string& name, Report& rep) {
    if (name.empty()) {
        rep.doc["warnings"].push_back("no --claim given, using the zero claim");
        return ClaimProcess::zero(mf.model.tree, 1);
    }
    auto it = mf.claims.find(name);
    if (it == mf.claims.end()) throw ModelError("unknown claim '" + name + "'");
    return it->second;
}

ClaimProcess pick_named(const ModelFile& mf, const std::string& name, const char* what) {
    auto it = mf.claims.find(name);
    if (it == mf.claims.end())
        throw ModelError(std::string("unknown ") + what + " '" + name + "'");
    return it->second;
}

Side parse_side(const std::string& s) {
    if (s == "short") return Side::Short;
    if (s == "long") return Side::Long;
    throw ModelError("--side must be 'short' or 'long'");
}

std::vector<double> parse_sweep(const std::string& s) {
    double lo = 0.0, hi = 0.0;
    int n = 0;
    char tail = 0;
    if (std::sscanf(s.c_str(), "%lf:%lf:%d%c", &lo, &hi, &n, &tail) != 3 || n < 1)
        throw ModelError("--sweep expects lo:hi:n with n >= 1");
    std::vector<double> grid;
    for (int k = 0; k < n; ++k)
        grid.push_back(n == 1 ? lo : lo + (hi - lo) * double(k) / (n - 1));
    return grid;
}

int run_check(const ModelFile& mf, const Options& o, Report& rep) {
    rep.doc["results"]["assumptions"] = describe(assumption_report(mf.model, pick_loss(mf, o.loss)));
    return 0;
}

int run_solve(const ModelFile& mf, const Options& o, const ClaimProcess& claim, Report& rep) {
    PrimalSolution s = solve_alm(mf.model, pick_loss(mf, o.loss), claim);
    rep.doc["results"]["solve"] = describe(s);
    return s.status == SolveStatus::NumericalError ? 3 : 0;
}

int run_dual(const ModelFile& mf, const Options& o, const ClaimProcess& claim, Report& rep) {
    const LossSpec& loss = pick_loss(mf, o.loss);
    PrimalSolution ps = solve_alm(mf.model, loss, claim);
    DualCertificate cert = solve_dual(mf.model, loss, claim);
    rep.doc["results"]["primal"] = describe(ps);
    rep.doc["results"]["dual"] = describe(cert);
    if (ps.status == SolveStatus::Optimal && cert.feasible) {
        rep.doc["results"]["optimality"] =
            describe(check_optimality(mf.model, loss, claim, ps.x, cert));
        try {
            rep.doc["results"]["shadow_prices"] = describe(shadow_prices(mf.model, cert, ps.x));
        } catch (const std::invalid_argument& e) {
            rep.doc["warnings"].push_back(e.what());
        }
        if (!(cert.gap <= o.tol))
            rep.doc["warnings"].push_back("duality gap above tolerance");
    }
    return ps.status == SolveStatus::NumericalError ? 3 : 0;
}

int run_bounds(const ModelFile& mf, const ClaimProcess& claim, const ClaimProcess& premium,
               Report& rep) {
    HedgeResult sup = superhedge(mf.model, claim, premium, HedgeSide::Sup);
    HedgeResult inf = superhedge(mf.model, claim, premium, HedgeSide::Inf);
    rep.doc["results"]["bounds"] =
        json{{"pi_sup", describe(sup)}, {"pi_inf", describe(inf)}};
    return sup.status == SolveStatus::NumericalError || inf.status == SolveStatus::NumericalError
               ? 3
               : 0;
}

int run_value(const ModelFile& mf, const Options& o, const ClaimProcess& claim, Report& rep) {
    const LossSpec& loss = pick_loss(mf, o.loss);
    Side side = parse_side(o.side);
    ValuationResult v = accounting_value(mf.model, loss, claim, side);
    rep.doc["results"]["value"] = describe(v);
    if (!o.sweep.empty()) {
        json rows = json::array();
        for (double s : parse_sweep(o.sweep)) {
            ValuationResult vs = accounting_value(mf.model, loss, claim * s, side);
            rows.push_back(json{{"scale", jnum(s)}, {"value", jnum(vs.value)}});
        }
        rep.doc["results"]["value_sweep"] = rows;
    }
    return v.status == ValuationStatus::NoBracket ? 3 : 0;
}

int run_swap(const ModelFile& mf, const Options& o, const ClaimProcess& claim,
             const ClaimProcess& premium, const ClaimProcess& book, Report& rep) {
    const LossSpec& loss = pick_loss(mf, o.loss);
    Side side = parse_side(o.side);
    ValuationResult v = indifference_swap_rate(mf.model, loss, book, premium, claim, side);
    rep.doc["results"]["swap"] = describe(v);
    if (!o.sweep.empty()) {
        json rows = json::array();
        for (double s : parse_sweep(o.sweep)) {
            ValuationResult vs =
                indifference_swap_rate(mf.model, loss, book, premium, claim * s, side);
            rows.push_back(json{{"scale", jnum(s)}, {"value", jnum(vs.value)}});
        }
        rep.doc["results"]["swap_sweep"] = rows;
    }
    return v.status == ValuationStatus::NoBracket ? 3 : 0;
}

int dispatch(const Options& o, std::ostream& out) {
    std::ifstream in(o.model_path, std::ios::binary);
    if (!in) throw ModelError("cannot read model file '" + o.model_path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();
    ModelFile mf = parse_model_text(bytes, o.model_path);

    Report rep = make_report(o.command, json{{"model", o.model_path},
                                             {"digest", content_digest(bytes)},
                                             {"claim", o.claim},
                                             {"loss", o.loss},
                                             {"premium", o.premium},
                                             {"book", o.book},
                                             {"side", o.side},
                                             {"position", jnum(o.position)},
                                             {"tol", jnum(o.tol)},
                                             {"sweep", o.sweep},
                                             {"format", o.format}});
    rep.doc["argv"] = o.argv_echo;

    ClaimProcess claim = pick_claim(mf, o.claim, rep) * o.position;
    ClaimProcess premium = o.premium.empty() ? numeraire_premium(mf.model.tree)
                                             : pick_named(mf, o.premium, "premium");
    ClaimProcess book = o.book.empty() ? ClaimProcess::zero(mf.model.tree, 1)
                                       : pick_named(mf, o.book, "book");

    const auto t0 = std::chrono::steady_clock::now();
    int rc = 0;
    if (o.command == "check") {
        rc = run_check(mf, o, rep);
    } else if (o.command == "solve") {
        rc = run_solve(mf, o, claim, rep);
    } else if (o.command == "dual") {
        rc = run_dual(mf, o, claim, rep);
    } else if (o.command == "bounds") {
        rc = run_bounds(mf, claim, premium, rep);
    } else if (o.command == "value") {
        rc = run_value(mf, o, claim, rep);
    } else if (o.command == "swap") {
        rc = run_swap(mf, o, claim, premium, book, rep);
    } else {  // report: everything
        rc = std::max(rc, run_check(mf, o, rep));
        rc = std::max(rc, run_solve(mf, o, claim, rep));
        rc = std::max(rc, run_dual(mf, o, claim, rep));
        rc = std::max(rc, run_bounds(mf, claim, premium, rep));
        rc = std::max(rc, run_value(mf, o, claim, rep));
        rc = std::max(rc, run_swap(mf, o, claim, premium, book, rep));
    }
    const auto t1 = std::chrono::steady_clock::now();
    rep.doc["timing_ms"]["total"] =
        std::chrono::duration<double, std::milli>(t1 - t0).count();

    out << (o.format == "csv" ? rep.to_csv() : rep.to_json());
    return rc;
}

}  // namespace

int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Options o;

    if (const char* cfg = std::getenv("ILLIQ_CONFIG")) {
        std::ifstream in(cfg);
        if (!in) {
            err << "error: cannot read ILLIQ_CONFIG file '" << cfg << "'\n";
            return 2;
        }
        try {
            json j = json::parse(in);
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (it.key() == "tol")
                    o.tol = it.value().get<double>();
                else
                    throw ModelError(std::string(cfg) + ": unknown field '" + it.key() + "'");
            }
        } catch (const std::exception& e) {
            err << "error: " << e.what() << "\n";
            return 2;
        }
    }

    CLI::App app{"hedging and valuation on finite scenario trees"};
    app.require_subcommand(1);
    const std::pair<const char*, const char*> cmds[] = {
        {"check", "validate the model and its standing assumptions"},
        {"solve", "minimise the expected hedging loss of a claim"},
        {"dual", "dual certificate, optimality system, shadow prices"},
        {"bounds", "super- and subhedging premium multiples"},
        {"value", "accounting value of a claim"},
        {"swap", "indifference swap rate of a claim against a premium"},
        {"report", "all of the above in one document"},
    };
    for (const auto& [name, help] : cmds) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--model", o.model_path, "model file (JSON)")->required();
        sub->add_option("--claim", o.claim, "claim name from the model file");
        sub->add_option("--loss", o.loss, "loss name from the model file");
        sub->add_option("--premium", o.premium,
                        "premium claim name (default: cash at the root)");
        sub->add_option("--book", o.book, "held-position claim for swap rates");
        sub->add_option("--side", o.side, "short|long")
            ->check(CLI::IsMember({"short", "long"}));
        sub->add_option("--tol", o.tol, "acceptance tolerance for verdicts");
        sub->add_option("--format", o.format, "json|csv")
            ->check(CLI::IsMember({"json", "csv"}));
        sub->add_option("--position", o.position, "claim scale multiplier");
        sub->add_option("--sweep", o.sweep, "lo:hi:n claim-scale sweep (value/swap)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    o.command = app.get_subcommands().front()->get_name();
    for (int i = 1; i < argc; ++i) o.argv_echo.push_back(argv[i]);

    try {
        return dispatch(o, out);
    } catch (const ModelError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "solver error: " << e.what() << "\n";
        return 3;
    }
}

int run_command(const std::vector<std::string>& args, std::string& out, std::string& err) {
    std::vector<const char*> argv;
    argv.push_back("illiq");
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream os, es;
    int rc = run_command(static_cast<int>(argv.size()), argv.data(), os, es);
    out = os.str();
    err = es.str();
    return rc;
}

}  // namespace illiq
