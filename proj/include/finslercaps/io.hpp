#pragma once

#include "finslercaps/convex_body.hpp"
#include "finslercaps/errors.hpp"
#include "finslercaps/finsler.hpp"
#include "finslercaps/fourier.hpp"
#include "finslercaps/smoothing.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace finslercaps {

inline constexpr const char* kVersion = "0.3.0";

/// Output could not be written (exit status 4 in the command-line tool).
class WriteError : public Error {
public:
    using Error::Error;
};

using Json = nlohmann::json;

/// Parses JSON text; syntax errors raise DomainError with line and column.
Json parse_json(const std::string& text, const std::string& source = "<input>");
Json read_json_file(const std::string& path);
std::string read_text_file(const std::string& path);

/// Body schema: {"kind": "box" | "simplex" | "ellipsoid" | "polytope" | "slab" | "translated", ...}.
///   box:        "radii": [R_1, ..., R_n]
///   simplex:    "n", "r"
///   ellipsoid:  "Q": [[...], ...], optional "center"
///   polytope:   "vertices": [[...], ...]  or  "normals" + "offsets"
///   slab:       "axis", "half_width"
///   translated: "body", "shift"   (the body U - shift)
/// Unknown keys are rejected.
ConvexBody body_from_json(const Json& j);
Json body_to_json(const ConvexBody& U);

/// {"body": <body>, "phi": {"fourier": [[k, cos, sin], ...]}}; "phi" optional.
FinslerMetric metric_from_json(const Json& j);
Json metric_to_json(const FinslerMetric& F);

FourierField fourier_from_json(const Json& j, int dim);
Json fourier_to_json(const FourierField& f);

/// {"kind": "piecewise_linear", "corners": [[rho, f], ...], "smoothing": w}
/// {"kind": "quadratic", "c": c, "offset": b}
/// {"kind": "affine", "slope": s, "intercept": b}
RadialProfile profile_from_json(const Json& j);
Json profile_to_json(const RadialProfile& f);

/// 17 significant digits, '.' decimal separator, shortest form that round-trips
/// through the 17-digit representation ("3" rather than "3.0000000000000000").
std::string format_number(double x);
std::string format_vector(const Vec& v, const char* sep = " ");
std::string format_class(const IntVec& a);

std::uint64_t fnv1a(const std::string& data);
std::string hex64(std::uint64_t h);

struct Provenance {
    std::string command;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    /// Empty unless explicitly requested.
    std::string timestamp;

    std::vector<std::string> lines() const;
    Json to_json() const;
};

/// Comma-separated table with '#' provenance comment lines and LF endings.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns);

    void add_row(std::vector<std::string> cells);
    std::size_t rows() const { return rows_.size(); }
    /// Sorts rows lexicographically by the given key columns.
    void sort_by(const std::vector<std::size_t>& keys);
    std::string render(const Provenance& prov) const;

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

/// Writes to `path`, or to stdout when path is empty or "-". WriteError on failure.
void write_output(const std::string& path, const std::string& content);

} // namespace finslercaps
