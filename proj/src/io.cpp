#include "finslercaps/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <type_traits>
#include <variant>

namespace finslercaps {

namespace {

void require_keys(const Json& j, const std::set<std::string>& allowed, const std::string& what) {
    if (!j.is_object()) throw DomainError(what + ": expected a JSON object");
    for (const auto& [k, v] : j.items()) {
        (void)v;
        if (!allowed.count(k)) throw DomainError(what + ": unknown key \"" + k + "\"");
    }
}

const Json& field(const Json& j, const std::string& key, const std::string& what) {
    auto it = j.find(key);
    if (it == j.end()) throw DomainError(what + ": missing key \"" + key + "\"");
    return *it;
}

double number(const Json& j, const std::string& what) {
    if (!j.is_number()) throw DomainError(what + ": expected a number");
    return j.get<double>();
}

int integer(const Json& j, const std::string& what) {
    if (!j.is_number_integer()) throw DomainError(what + ": expected an integer");
    return j.get<int>();
}

Vec vector_from(const Json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw DomainError(what + ": expected a nonempty array of numbers");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], what);
    return v;
}

IntVec int_vector_from(const Json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw DomainError(what + ": expected a nonempty array of integers");
    IntVec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = integer(j[i], what);
    return v;
}

std::vector<Vec> vectors_from(const Json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw DomainError(what + ": expected a nonempty array of vectors");
    std::vector<Vec> out;
    for (const auto& e : j) out.push_back(vector_from(e, what));
    return out;
}

Mat matrix_from(const Json& j, const std::string& what) {
    const auto rows = vectors_from(j, what);
    Mat M(static_cast<Eigen::Index>(rows.size()), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != M.cols()) throw DomainError(what + ": ragged matrix");
        M.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    }
    return M;
}

Json to_array(const Vec& v) {
    Json a = Json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Json to_array(const IntVec& v) {
    Json a = Json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Json to_array(const Mat& M) {
    Json a = Json::array();
    for (int i = 0; i < M.rows(); ++i) a.push_back(to_array(Vec(M.row(i).transpose())));
    return a;
}

std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

} // namespace

Json parse_json(const std::string& text, const std::string& source) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
        const auto [line, col] = line_column(text, at);
        std::ostringstream s;
        s << source << ":" << line << ":" << col << ": malformed JSON";
        throw DomainError(s.str());
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DomainError("cannot open input file " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Json read_json_file(const std::string& path) { return parse_json(read_text_file(path), path); }

ConvexBody body_from_json(const Json& j) {
    const std::string what = "body";
    if (!j.is_object()) throw DomainError(what + ": expected a JSON object");
    const Json& kind_j = field(j, "kind", what);
    if (!kind_j.is_string()) throw DomainError(what + ": \"kind\" must be a string");
    const std::string kind = kind_j.get<std::string>();
    if (kind == "box") {
        require_keys(j, {"kind", "radii"}, what);
        return ConvexBody::box(vector_from(field(j, "radii", what), "box radii"));
    }
    if (kind == "simplex") {
        require_keys(j, {"kind", "n", "r"}, what);
        return ConvexBody::simplex(integer(field(j, "n", what), "simplex n"), number(field(j, "r", what), "simplex r"));
    }
    if (kind == "ellipsoid") {
        require_keys(j, {"kind", "Q", "center"}, what);
        const Mat Q = matrix_from(field(j, "Q", what), "ellipsoid Q");
        if (j.contains("center")) return ConvexBody::ellipsoid(Q, vector_from(j["center"], "ellipsoid center"));
        return ConvexBody::ellipsoid(Q);
    }
    if (kind == "polytope") {
        require_keys(j, {"kind", "vertices", "normals", "offsets"}, what);
        if (j.contains("vertices")) {
            if (j.contains("normals") || j.contains("offsets"))
                throw DomainError("polytope: give either vertices or normals/offsets");
            return ConvexBody::polytope_from_vertices(vectors_from(j["vertices"], "polytope vertices"));
        }
        const Vec b = vector_from(field(j, "offsets", what), "polytope offsets");
        return ConvexBody::polytope_from_halfspaces(vectors_from(field(j, "normals", what), "polytope normals"),
                                                    std::vector<double>(b.data(), b.data() + b.size()));
    }
    if (kind == "slab") {
        require_keys(j, {"kind", "axis", "half_width"}, what);
        return ConvexBody::slab(vector_from(field(j, "axis", what), "slab axis"),
                                number(field(j, "half_width", what), "slab half_width"));
    }
    if (kind == "translated") {
        require_keys(j, {"kind", "body", "shift"}, what);
        return body_from_json(field(j, "body", what)).translate(vector_from(field(j, "shift", what), "shift"));
    }
    throw DomainError(what + ": unknown kind \"" + kind + "\"");
}

Json body_to_json(const ConvexBody& U) {
    using B = ConvexBody;
    return std::visit(
        [&](const auto& r) -> Json {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, B::BoxRep>) {
                return {{"kind", "box"}, {"radii", to_array(r.radii)}};
            } else if constexpr (std::is_same_v<T, B::SimplexRep>) {
                return {{"kind", "simplex"}, {"n", r.n}, {"r", r.r}};
            } else if constexpr (std::is_same_v<T, B::EllipsoidRep>) {
                return {{"kind", "ellipsoid"}, {"Q", to_array(r.Q)}, {"center", to_array(r.center)}};
            } else if constexpr (std::is_same_v<T, B::PolytopeRep>) {
                Json out = {{"kind", "polytope"}};
                if (r.from_vertices) {
                    Json v = Json::array();
                    for (const auto& p : r.vertices) v.push_back(to_array(p));
                    out["vertices"] = v;
                } else {
                    Json a = Json::array();
                    for (const auto& p : r.normals) a.push_back(to_array(p));
                    out["normals"] = a;
                    out["offsets"] = r.offsets;
                }
                return out;
            } else if constexpr (std::is_same_v<T, B::SlabRep>) {
                return {{"kind", "slab"}, {"axis", to_array(r.axis)}, {"half_width", r.half_width}};
            } else {
                return {{"kind", "translated"}, {"body", body_to_json(*r.inner)}, {"shift", to_array(r.shift)}};
            }
        },
        U.rep());
}

FourierField fourier_from_json(const Json& j, int dim) {
    if (!j.is_array()) throw DomainError("fourier: expected an array of [k, cos, sin] terms");
    std::vector<FourierField::Term> terms;
    for (const auto& t : j) {
        if (!t.is_array() || t.size() != 3) throw DomainError("fourier: each term is [k-vector, cos, sin]");
        FourierField::Term term;
        term.k = int_vector_from(t[0], "fourier k");
        if (term.k.size() != dim) throw DomainError("fourier: wave vector dimension mismatch");
        term.cos_coeff = number(t[1], "fourier cos");
        term.sin_coeff = number(t[2], "fourier sin");
        terms.push_back(std::move(term));
    }
    return FourierField(dim, std::move(terms));
}

Json fourier_to_json(const FourierField& f) {
    Json a = Json::array();
    for (const auto& t : f.terms()) a.push_back(Json::array({to_array(t.k), t.cos_coeff, t.sin_coeff}));
    return a;
}

FinslerMetric metric_from_json(const Json& j) {
    require_keys(j, {"body", "phi"}, "metric");
    ConvexBody U = body_from_json(field(j, "body", "metric"));
    FourierField phi;
    if (j.contains("phi")) {
        const Json& p = j["phi"];
        require_keys(p, {"fourier"}, "metric phi");
        phi = fourier_from_json(field(p, "fourier", "metric phi"), U.dim());
    }
    return FinslerMetric(std::move(U), std::move(phi));
}

Json metric_to_json(const FinslerMetric& F) {
    Json out = {{"body", body_to_json(F.body())}};
    if (!F.phi().zero()) out["phi"] = {{"fourier", fourier_to_json(F.phi())}};
    return out;
}

RadialProfile profile_from_json(const Json& j) {
    const std::string what = "profile";
    if (!j.is_object()) throw DomainError(what + ": expected a JSON object");
    const Json& kind_j = field(j, "kind", what);
    if (!kind_j.is_string()) throw DomainError(what + ": \"kind\" must be a string");
    const std::string kind = kind_j.get<std::string>();
    if (kind == "piecewise_linear") {
        require_keys(j, {"kind", "corners", "smoothing"}, what);
        std::vector<RadialProfile::Corner> corners;
        for (const auto& c : vectors_from(field(j, "corners", what), "profile corners")) {
            if (c.size() != 2) throw DomainError("profile corners: each corner is [rho, f]");
            corners.push_back({c(0), c(1)});
        }
        return RadialProfile::piecewise_linear(std::move(corners), number(field(j, "smoothing", what), "smoothing"));
    }
    if (kind == "quadratic") {
        require_keys(j, {"kind", "c", "offset"}, what);
        const double off = j.contains("offset") ? number(j["offset"], "offset") : 0.0;
        return RadialProfile::quadratic(number(field(j, "c", what), "c"), off);
    }
    if (kind == "affine") {
        require_keys(j, {"kind", "slope", "intercept"}, what);
        const double b = j.contains("intercept") ? number(j["intercept"], "intercept") : 0.0;
        return RadialProfile::affine(number(field(j, "slope", what), "slope"), b);
    }
    throw DomainError(what + ": unknown kind \"" + kind + "\"");
}

Json profile_to_json(const RadialProfile& f) {
    switch (f.kind()) {
    case RadialProfile::Kind::PiecewiseLinear: {
        Json c = Json::array();
        for (const auto& k : f.corners()) c.push_back(Json::array({k.rho, k.f}));
        return {{"kind", "piecewise_linear"}, {"corners", c}, {"smoothing", f.smoothing()}};
    }
    case RadialProfile::Kind::Quadratic:
        return {{"kind", "quadratic"}, {"c", f.coefficients().first}, {"offset", f.coefficients().second}};
    case RadialProfile::Kind::Affine:
        return {{"kind", "affine"}, {"slope", f.coefficients().first}, {"intercept", f.coefficients().second}};
    case RadialProfile::Kind::Linearized: break;
    }
    throw UnsupportedRepresentation("profile_to_json: linearized profiles are not serialisable");
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    // Shortest representation that parses back to the same double (at most 17 significant digits).
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string format_vector(const Vec& v, const char* sep) {
    std::string out;
    for (int i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += format_number(v(i));
    }
    return out;
}

std::string format_class(const IntVec& a) {
    std::string out;
    for (int i = 0; i < a.size(); ++i) {
        if (i) out += ' ';
        out += std::to_string(a(i));
    }
    return out;
}

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<std::string> Provenance::lines() const {
    std::vector<std::string> out{std::string("finslercaps ") + kVersion, "command: " + command,
                                 "config-hash: " + hex64(config_hash), "seed: " + std::to_string(seed)};
    if (!timestamp.empty()) out.push_back("timestamp: " + timestamp);
    return out;
}

Json Provenance::to_json() const {
    Json j = {{"tool", "finslercaps"},
              {"version", kVersion},
              {"command", command},
              {"config_hash", hex64(config_hash)},
              {"seed", seed}};
    if (!timestamp.empty()) j["timestamp"] = timestamp;
    return j;
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
    if (cells.size() != columns_.size()) throw DomainError("csv: row width does not match the header");
    for (const auto& c : cells)
        if (c.find_first_of(",\n\r") != std::string::npos) throw DomainError("csv: cell contains a separator");
    rows_.push_back(std::move(cells));
}

void CsvTable::sort_by(const std::vector<std::size_t>& keys) {
    std::stable_sort(rows_.begin(), rows_.end(), [&](const auto& a, const auto& b) {
        for (std::size_t k : keys) {
            if (a[k] != b[k]) return a[k] < b[k];
        }
        return false;
    });
}

std::string CsvTable::render(const Provenance& prov) const {
    std::string out;
    for (const auto& l : prov.lines()) out += "# " + l + "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + columns_[i];
    out += "\n";
    for (const auto& r : rows_) {
        for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + r[i];
        out += "\n";
    }
    return out;
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout.write(content.data(), static_cast<std::streamsize>(content.size()));
        std::cout.flush();
        if (!std::cout) throw WriteError("cannot write to stdout");
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw WriteError("cannot open output file " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) throw WriteError("failed writing output file " + path);
}

} // namespace finslercaps
