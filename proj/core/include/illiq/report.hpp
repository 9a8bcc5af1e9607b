#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "illiq/diagnostics.hpp"
#include "illiq/dual.hpp"
#include "illiq/primal.hpp"
#include "illiq/valuation.hpp"

namespace illiq {

/// Machine-readable command report.  Keys are emitted sorted, numbers in
/// shortest round-trip form, so the document is reproducible for fixed input
/// and tolerances; "timing_ms" is the one field that varies between runs.
struct Report {
    nlohmann::json doc;

    std::string to_json() const;  // two-space indent, newline-terminated
    /// Flattened "path,value" rows; arrays of {scale,value} points (sweeps,
    /// valuation samples) are emitted as their own two-column tables.
    std::string to_csv() const;

    static Report from_json(const std::string& text);
};

Report make_report(const std::string& command, nlohmann::json inputs);

/// Extended-real-safe JSON number: infinities and NaN become the strings
/// "inf", "-inf", "nan".
nlohmann::json jnum(double v);
double jnum_read(const nlohmann::json& j);

/// FNV-1a of a byte string, as a fixed-width hex digest for input echoing.
std::string content_digest(const std::string& bytes);

nlohmann::json describe(const ClaimProcess& p);
nlohmann::json describe(const PrimalSolution& s);
nlohmann::json describe(const HedgeResult& h);
nlohmann::json describe(const DualCertificate& c);
nlohmann::json describe(const OptimalityReport& r);
nlohmann::json describe(const ShadowPriceReport& r);
nlohmann::json describe(const ValuationResult& r);
nlohmann::json describe(const DualBound& b);
nlohmann::json describe(const ValidationReport& r);
nlohmann::json describe(const LinealityReport& r);
nlohmann::json describe(const RAEReport& r);
nlohmann::json describe(const ScalingReport& r);
nlohmann::json describe(const AssumptionReport& r);

}  // namespace illiq
