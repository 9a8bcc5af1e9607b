#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "illiq/market_model.hpp"

namespace illiq {

/// Problem-file or flag error; the command layer maps it to exit code 2.
struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A parsed and normalised model file: the market itself plus named losses
/// and named scalar claim processes.
struct ModelFile {
    int version = 1;
    MarketModel model;
    std::map<std::string, LossSpec> losses;
    std::map<std::string, ClaimProcess> claims;
};

/// Strict JSON ingestion: unknown fields are rejected with their location,
/// numbers may be written as "inf"/"-inf" strings, costs and constraints may
/// be given per time (broadcast across the slice) or per node.
ModelFile load_model_file(const std::string& path);
ModelFile parse_model_text(const std::string& text, const std::string& where);

/// One convex function to/from its JSON object form ("pwl", "exp", "power",
/// "indicator_nonpositive").  Conjugate-only kinds are not representable and
/// throw ModelError on output.
ConvexFunction convex_fn_from_text(const std::string& json_text);
std::string convex_fn_to_text(const ConvexFunction& f);

}  // namespace illiq
