#include "finslercaps/convex_body.hpp"

#include "finslercaps/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace finslercaps {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTieTol = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_nonzero(const Vec& v, const char* what) {
    if (v.size() == 0 || v.norm() == 0.0) throw DomainError(std::string(what) + ": zero direction");
}

void require_dim(const Vec& v, int n, const char* what) {
    if (v.size() != n) throw DomainError(std::string(what) + ": dimension mismatch");
}

/// Visits every k-subset of {0, ..., m-1} in lexicographic order.
template <class Fn>
void for_each_subset(int m, int k, Fn&& fn) {
    if (k > m || k < 0) return;
    std::vector<int> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        fn(idx);
        int i = k - 1;
        while (i >= 0 && idx[i] == m - k + i) --i;
        if (i < 0) return;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

double binomial(int m, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (m - k + i) / i;
    return r;
}

constexpr double kEnumerationBudget = 4e6;

/// One-dimensional kernel of a (k x n) matrix with k = n - 1, or empty.
std::optional<Vec> line_kernel(const Mat& rows) {
    const auto n = rows.cols();
    if (rows.rows() == 0) {
        if (n == 1) return Vec::Ones(1);
        return std::nullopt;
    }
    Eigen::FullPivLU<Mat> lu(rows);
    lu.setThreshold(1e-10);
    if (lu.rank() != n - 1) return std::nullopt;
    Vec k = lu.kernel().col(0);
    return k.normalized();
}

bool same_direction(const Vec& a, const Vec& b, double tol = 1e-9) { return (a - b).norm() <= tol; }

std::vector<Vec> halfspace_vertices(const std::vector<Vec>& normals, const std::vector<double>& offsets, int n) {
    const int m = static_cast<int>(normals.size());
    if (binomial(m, n) > kEnumerationBudget) throw DomainError("polytope: vertex enumeration budget exceeded");
    double scale = 1.0;
    for (double b : offsets) scale = std::max(scale, std::abs(b));
    const double tol = 1e-10 * scale;
    std::vector<Vec> out;
    Mat A(n, n);
    Vec b(n);
    for_each_subset(m, n, [&](const std::vector<int>& idx) {
        for (int r = 0; r < n; ++r) {
            A.row(r) = normals[idx[r]].transpose();
            b(r) = offsets[idx[r]];
        }
        Eigen::FullPivLU<Mat> lu(A);
        lu.setThreshold(1e-12);
        if (lu.rank() < n) return;
        Vec p = lu.solve(b);
        for (int j = 0; j < m; ++j)
            if (normals[j].dot(p) > offsets[j] + tol) return;
        for (const auto& q : out)
            if ((q - p).norm() <= 1e-9 * std::max(1.0, p.norm())) return;
        out.push_back(p);
    });
    return out;
}

std::vector<Vec> box_vertices(const Vec& R) {
    const int n = static_cast<int>(R.size());
    std::vector<Vec> out;
    for (int mask = 0; mask < (1 << n); ++mask) {
        Vec p(n);
        for (int i = 0; i < n; ++i) p(i) = (mask >> i & 1) ? R(i) : -R(i);
        out.push_back(p);
    }
    return out;
}

std::vector<Vec> simplex_vertices(int n, double r) {
    std::vector<Vec> out{Vec::Zero(n)};
    for (int i = 0; i < n; ++i) out.push_back(r * Vec::Unit(n, i));
    return out;
}

} // namespace

std::vector<Facet> hull_facets(const std::vector<Vec>& points) {
    if (points.empty()) throw DomainError("hull: empty point set");
    const int n = static_cast<int>(points.front().size());
    const int m = static_cast<int>(points.size());
    if (m < n + 1) throw DomainError("hull: point set is not full-dimensional");
    if (binomial(m, n) > kEnumerationBudget) throw DomainError("hull: facet enumeration budget exceeded");
    double scale = 1.0;
    for (const auto& p : points) scale = std::max(scale, p.norm());
    const double tol = 1e-10 * scale;

    std::vector<Facet> facets;
    Mat rows(n - 1, n);
    for_each_subset(m, n, [&](const std::vector<int>& idx) {
        for (int r = 1; r < n; ++r) rows.row(r - 1) = (points[idx[r]] - points[idx[0]]).transpose();
        auto a = line_kernel(rows);
        if (!a) return;
        const double b = a->dot(points[idx[0]]);
        bool below = true, above = true;
        for (const auto& p : points) {
            const double s = a->dot(p) - b;
            below = below && s <= tol;
            above = above && s >= -tol;
        }
        if (!below && !above) return;
        Facet f{below ? *a : Vec(-*a), below ? b : -b};
        for (const auto& g : facets)
            if (same_direction(g.normal, f.normal) && std::abs(g.offset - f.offset) <= tol) return;
        facets.push_back(std::move(f));
    });
    if (facets.size() < static_cast<std::size_t>(n + 1))
        throw DomainError("hull: point set is not full-dimensional");
    return facets;
}

ConvexBody::ConvexBody(int dim, std::shared_ptr<const Rep> rep, Vec witness)
    : dim_(dim), rep_(std::move(rep)), witness_(std::move(witness)) {}

ConvexBody ConvexBody::box(Vec radii) {
    if (radii.size() == 0) throw DomainError("box: empty radius vector");
    if ((radii.array() <= 0.0).any()) throw DomainError("box: radii must be positive");
    const int n = static_cast<int>(radii.size());
    return ConvexBody(n, std::make_shared<Rep>(BoxRep{std::move(radii)}), Vec::Zero(n));
}

ConvexBody ConvexBody::simplex(int n, double r) {
    if (n < 1 || !(r > 0.0)) throw DomainError("simplex: need n >= 1 and r > 0");
    return ConvexBody(n, std::make_shared<Rep>(SimplexRep{n, r}), Vec::Constant(n, r / (n + 1)));
}

ConvexBody ConvexBody::ellipsoid(Mat Q, Vec center) {
    const auto n = Q.rows();
    if (n == 0 || Q.cols() != n || center.size() != n) throw DomainError("ellipsoid: dimension mismatch");
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, Q.cwiseAbs().maxCoeff()))
        throw DomainError("ellipsoid: Q is not symmetric");
    Mat sym = 0.5 * (Q + Q.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym);
    if (!(es.eigenvalues().minCoeff() > 0.0)) throw DomainError("ellipsoid: Q is not positive definite");
    Mat inv = sym.inverse();
    inv = 0.5 * (inv + inv.transpose());
    Vec c = center;
    return ConvexBody(static_cast<int>(n), std::make_shared<Rep>(EllipsoidRep{sym, inv, std::move(center)}), c);
}

ConvexBody ConvexBody::ellipsoid(Mat Q) {
    const auto n = Q.rows();
    return ellipsoid(std::move(Q), Vec::Zero(n));
}

ConvexBody ConvexBody::ball(int n, double r) {
    if (n < 1 || !(r > 0.0)) throw DomainError("ball: need n >= 1 and r > 0");
    return ellipsoid(Mat::Identity(n, n) / (r * r), Vec::Zero(n));
}

ConvexBody ConvexBody::polytope_from_vertices(std::vector<Vec> points) {
    if (points.empty()) throw DomainError("polytope: no vertices");
    const int n = static_cast<int>(points.front().size());
    for (const auto& p : points) require_dim(p, n, "polytope");
    auto facets = hull_facets(points);
    std::vector<Vec> normals;
    std::vector<double> offsets;
    for (auto& f : facets) {
        normals.push_back(f.normal);
        offsets.push_back(f.offset);
    }
    // Keep extreme points only: a vertex is tight on at least n facets.
    std::vector<Vec> extreme;
    for (const auto& p : points) {
        int tight = 0;
        for (std::size_t j = 0; j < normals.size(); ++j)
            if (std::abs(normals[j].dot(p) - offsets[j]) <= 1e-10 * std::max(1.0, std::abs(offsets[j]))) ++tight;
        if (tight < n) continue;
        bool dup = false;
        for (const auto& q : extreme) dup = dup || (q - p).norm() <= 1e-12;
        if (!dup) extreme.push_back(p);
    }
    Vec w = Vec::Zero(n);
    for (const auto& p : extreme) w += p;
    w /= static_cast<double>(extreme.size());
    return ConvexBody(n, std::make_shared<Rep>(PolytopeRep{std::move(extreme), std::move(normals), std::move(offsets), true}),
                      std::move(w));
}

ConvexBody ConvexBody::polytope_from_halfspaces(std::vector<Vec> normals, std::vector<double> offsets) {
    if (normals.empty() || normals.size() != offsets.size()) throw DomainError("polytope: bad half-space list");
    const int n = static_cast<int>(normals.front().size());
    for (auto& a : normals) {
        require_dim(a, n, "polytope");
        require_nonzero(a, "polytope normal");
    }
    // Normalise so that offsets are comparable to distances.
    for (std::size_t i = 0; i < normals.size(); ++i) {
        const double s = normals[i].norm();
        normals[i] /= s;
        offsets[i] /= s;
    }
    if (!dual_cone(make_cone(normals)).generators.empty())
        throw DomainError("polytope: half-space intersection is unbounded");
    auto verts = halfspace_vertices(normals, offsets, n);
    if (verts.size() < static_cast<std::size_t>(n + 1)) throw DomainError("polytope: empty or degenerate");
    Vec w = Vec::Zero(n);
    for (const auto& p : verts) w += p;
    w /= static_cast<double>(verts.size());
    return ConvexBody(n, std::make_shared<Rep>(PolytopeRep{std::move(verts), std::move(normals), std::move(offsets), false}),
                      std::move(w));
}

ConvexBody ConvexBody::slab(Vec axis, double half_width) {
    require_nonzero(axis, "slab axis");
    if (!(half_width > 0.0)) throw DomainError("slab: half-width must be positive");
    const int n = static_cast<int>(axis.size());
    axis.normalize();
    return ConvexBody(n, std::make_shared<Rep>(SlabRep{std::move(axis), half_width}), Vec::Zero(n));
}

ConvexBody::Kind ConvexBody::kind() const {
    return std::visit(overloaded{[](const BoxRep&) { return Kind::Box; },
                                 [](const SimplexRep&) { return Kind::Simplex; },
                                 [](const EllipsoidRep&) { return Kind::Ellipsoid; },
                                 [](const PolytopeRep&) { return Kind::Polytope; },
                                 [](const SlabRep&) { return Kind::Slab; },
                                 [](const TranslatedRep&) { return Kind::Translated; }},
                      *rep_);
}

std::string ConvexBody::kind_name() const {
    switch (kind()) {
    case Kind::Box: return "box";
    case Kind::Simplex: return "simplex";
    case Kind::Ellipsoid: return "ellipsoid";
    case Kind::Polytope: return "polytope";
    case Kind::Slab: return "slab";
    case Kind::Translated: return "translated";
    }
    return "unknown";
}

bool ConvexBody::bounded() const {
    return std::visit(overloaded{[](const SlabRep&) { return false; },
                                 [](const TranslatedRep& t) { return t.inner->bounded(); },
                                 [](const auto&) { return true; }},
                      *rep_);
}

bool ConvexBody::smooth() const {
    return std::visit(overloaded{[](const EllipsoidRep&) { return true; },
                                 [](const TranslatedRep& t) { return t.inner->smooth(); },
                                 [](const auto&) { return false; }},
                      *rep_);
}

bool ConvexBody::polytopal() const {
    return std::visit(overloaded{[](const BoxRep&) { return true; },
                                 [](const SimplexRep&) { return true; },
                                 [](const PolytopeRep&) { return true; },
                                 [](const TranslatedRep& t) { return t.inner->polytopal(); },
                                 [](const auto&) { return false; }},
                      *rep_);
}

bool ConvexBody::origin_interior() const { return depth(Vec::Zero(dim_)) > 1e-12; }

double ConvexBody::support(const Vec& v) const {
    require_dim(v, dim_, "support");
    require_nonzero(v, "support");
    return std::visit(
        overloaded{
            [&](const BoxRep& b) { return b.radii.dot(v.cwiseAbs()); },
            [&](const SimplexRep& s) { return std::max(0.0, s.r * v.maxCoeff()); },
            [&](const EllipsoidRep& e) { return e.center.dot(v) + std::sqrt(v.dot(e.Qinv * v)); },
            [&](const PolytopeRep& p) {
                double best = -kInf;
                for (const auto& q : p.vertices) best = std::max(best, q.dot(v));
                return best;
            },
            [&](const SlabRep& s) {
                const double along = v.dot(s.axis);
                const double across = (v - along * s.axis).norm();
                if (across > 1e-12 * v.norm()) return kInf;
                return s.half_width * std::abs(along);
            },
            [&](const TranslatedRep& t) { return t.inner->support(v) - t.shift.dot(v); }},
        *rep_);
}

Vec ConvexBody::support_point(const Vec& v) const {
    require_dim(v, dim_, "support_point");
    require_nonzero(v, "support_point");
    return std::visit(
        overloaded{
            [&](const BoxRep& b) {
                // Near-ties resolve to the same face so that rounding in v
                // does not switch the selected subgradient.
                const double tie = kTieTol * v.norm();
                Vec p(dim_);
                for (int i = 0; i < dim_; ++i) p(i) = v(i) >= -tie ? b.radii(i) : -b.radii(i);
                return p;
            },
            [&](const SimplexRep& s) {
                const double m = v.maxCoeff(), tie = kTieTol * v.norm();
                if (m <= tie) return Vec(Vec::Zero(dim_));
                int i = 0;
                while (v(i) < m - tie) ++i;
                return Vec(s.r * Vec::Unit(dim_, i));
            },
            [&](const EllipsoidRep& e) {
                Vec w = e.Qinv * v;
                return Vec(e.center + w / std::sqrt(v.dot(w)));
            },
            [&](const PolytopeRep& p) {
                double m = -INFINITY, scale = 0.0;
                for (const auto& q : p.vertices) {
                    m = std::max(m, q.dot(v));
                    scale = std::max(scale, q.norm());
                }
                const double tie = kTieTol * scale * v.norm();
                std::size_t i = 0;
                while (p.vertices[i].dot(v) < m - tie) ++i;
                return p.vertices[i];
            },
            [&](const SlabRep& s) -> Vec {
                if (!std::isfinite(support(v))) throw DomainError("support_point: unbounded direction");
                return s.half_width * (v.dot(s.axis) >= 0.0 ? 1.0 : -1.0) * s.axis;
            },
            [&](const TranslatedRep& t) { return Vec(t.inner->support_point(v) - t.shift); }},
        *rep_);
}

Mat ConvexBody::support_hessian(const Vec& v) const {
    require_dim(v, dim_, "support_hessian");
    require_nonzero(v, "support_hessian");
    return std::visit(overloaded{[&](const EllipsoidRep& e) -> Mat {
                                     Vec w = e.Qinv * v;
                                     const double a = std::sqrt(v.dot(w));
                                     return (e.Qinv - w * w.transpose() / (a * a)) / a;
                                 },
                                 [&](const TranslatedRep& t) -> Mat { return t.inner->support_hessian(v); },
                                 [&](const auto&) -> Mat {
                                     throw UnsupportedRepresentation("support_hessian: body is not smooth (" +
                                                                     kind_name() + ")");
                                 }},
                      *rep_);
}

double ConvexBody::gauge(const Vec& p) const {
    require_dim(p, dim_, "gauge");
    if (!origin_interior()) throw DomainError("gauge: origin is not an interior point of the body");
    if (p.norm() == 0.0) return 0.0;
    return std::visit(
        overloaded{
            [&](const BoxRep& b) { return p.cwiseAbs().cwiseQuotient(b.radii).maxCoeff(); },
            [&](const SimplexRep&) -> double { throw DomainError("gauge: origin is not interior"); },
            [&](const EllipsoidRep& e) {
                // (p - t c)^T Q (p - t c) = t^2, i.e. a t^2 + 2 b t - q = 0; positive root.
                const double a = 1.0 - e.center.dot(e.Q * e.center);
                const double b = e.center.dot(e.Q * p);
                const double q = p.dot(e.Q * p);
                const double disc = std::sqrt(b * b + a * q);
                return b >= 0.0 ? q / (disc + b) : (disc - b) / a;
            },
            [&](const PolytopeRep& poly) {
                double g = 0.0;
                for (std::size_t i = 0; i < poly.normals.size(); ++i)
                    g = std::max(g, poly.normals[i].dot(p) / poly.offsets[i]);
                return g;
            },
            [&](const SlabRep& s) { return std::abs(p.dot(s.axis)) / s.half_width; },
            [&](const TranslatedRep&) {
                // Bisection on membership of p / t.
                double hi = 1.0;
                int guard = 0;
                while (!contains(p / hi, 0.0)) {
                    hi *= 2.0;
                    if (++guard > 2000) throw NumericalFailure("gauge: bracketing failed");
                }
                double lo = 0.0;
                if (hi == 1.0) {
                    lo = 0.5;
                    while (contains(p / lo, 0.0)) {
                        hi = lo;
                        lo *= 0.5;
                        if (++guard > 2000) throw NumericalFailure("gauge: bracketing failed");
                    }
                } else {
                    lo = hi / 2.0;
                }
                for (int it = 0; it < 80; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if (contains(p / mid, 0.0)) hi = mid;
                    else lo = mid;
                }
                return hi;
            }},
        *rep_);
}

Vec ConvexBody::gauge_gradient(const Vec& p) const {
    require_nonzero(p, "gauge_gradient");
    if (!smooth()) throw UnsupportedRepresentation("gauge_gradient: body is not smooth (" + kind_name() + ")");
    // Outward normal n at the boundary point q = p / gauge(p); grad = n / <n, q>.
    const double t = gauge(p);
    const Vec q = p / t;
    Vec n = std::visit(overloaded{[&](const EllipsoidRep& e) -> Vec { return e.Q * (q - e.center); },
                                  [&](const TranslatedRep& tr) -> Vec {
                                      const auto& e = std::get<EllipsoidRep>(tr.inner->rep());
                                      return e.Q * (q + tr.shift - e.center);
                                  },
                                  [&](const auto&) -> Vec { return Vec(); }},
                       *rep_);
    return n / n.dot(q);
}

double ConvexBody::depth(const Vec& p) const {
    require_dim(p, dim_, "depth");
    return std::visit(
        overloaded{
            [&](const BoxRep& b) { return (b.radii - p.cwiseAbs()).minCoeff(); },
            [&](const SimplexRep& s) {
                return std::min(p.minCoeff(), (s.r - p.sum()) / std::sqrt(static_cast<double>(s.n)));
            },
            [&](const EllipsoidRep& e) {
                const Vec d = p - e.center;
                return 1.0 - d.dot(e.Q * d);
            },
            [&](const PolytopeRep& poly) {
                double m = kInf;
                for (std::size_t i = 0; i < poly.normals.size(); ++i)
                    m = std::min(m, poly.offsets[i] - poly.normals[i].dot(p));
                return m;
            },
            [&](const SlabRep& s) { return s.half_width - std::abs(p.dot(s.axis)); },
            [&](const TranslatedRep& t) { return t.inner->depth(p + t.shift); }},
        *rep_);
}

ConvexBody ConvexBody::translate(const Vec& shift) const {
    require_dim(shift, dim_, "translate");
    return std::visit(overloaded{[&](const EllipsoidRep& e) { return ellipsoid(e.Q, e.center - shift); },
                                 [&](const TranslatedRep& t) { return t.inner->translate(t.shift + shift); },
                                 [&](const auto&) {
                                     if (shift.norm() == 0.0) return *this;
                                     auto inner = std::make_shared<const ConvexBody>(*this);
                                     Vec w = witness_ - shift;
                                     return ConvexBody(dim_, std::make_shared<Rep>(TranslatedRep{inner, shift}),
                                                       std::move(w));
                                 }},
                      *rep_);
}

double ConvexBody::radius() const {
    return std::visit(
        overloaded{[&](const BoxRep& b) { return b.radii.norm(); },
                   [&](const SimplexRep& s) { return s.r; },
                   [&](const EllipsoidRep& e) {
                       Eigen::SelfAdjointEigenSolver<Mat> es(e.Q);
                       return e.center.norm() + 1.0 / std::sqrt(es.eigenvalues().minCoeff());
                   },
                   [&](const PolytopeRep& p) {
                       double r = 0.0;
                       for (const auto& q : p.vertices) r = std::max(r, q.norm());
                       return r;
                   },
                   [&](const SlabRep&) { return kInf; },
                   [&](const TranslatedRep& t) {
                       if (t.inner->polytopal()) {
                           double r = 0.0;
                           for (const auto& q : vertices()) r = std::max(r, q.norm());
                           return r;
                       }
                       return t.inner->radius() + t.shift.norm();
                   }},
        *rep_);
}

double ConvexBody::truncated_support(const Vec& v, double rho) const {
    require_nonzero(v, "truncated_support");
    if (!(rho > 0.0)) throw DomainError("truncated_support: radius must be positive");
    if (const auto* s = std::get_if<SlabRep>(rep_.get())) {
        const double a = v.dot(s->axis);
        const double b = (v - a * s->axis).norm();
        const double lim = std::min(s->half_width, rho);
        const double norm = std::hypot(a, b);
        double t = norm > 0.0 ? a * rho / norm : 0.0;
        t = std::clamp(t, -lim, lim);
        return a * t + b * std::sqrt(std::max(0.0, rho * rho - t * t));
    }
    if (const auto* tr = std::get_if<TranslatedRep>(rep_.get()); tr && !bounded())
        return tr->inner->truncated_support(v, rho + tr->shift.norm()) - tr->shift.dot(v);
    const double h = support(v);
    if (radius() <= rho) return h;
    return std::min(h, rho * v.norm());
}

std::vector<Vec> ConvexBody::vertices() const {
    return std::visit(overloaded{[&](const BoxRep& b) { return box_vertices(b.radii); },
                                 [&](const SimplexRep& s) { return simplex_vertices(s.n, s.r); },
                                 [&](const PolytopeRep& p) { return p.vertices; },
                                 [&](const TranslatedRep& t) {
                                     auto vs = t.inner->vertices();
                                     for (auto& q : vs) q -= t.shift;
                                     return vs;
                                 },
                                 [&](const auto&) -> std::vector<Vec> {
                                     throw UnsupportedRepresentation("vertices: body is not polytopal (" +
                                                                     kind_name() + ")");
                                 }},
                      *rep_);
}

Vec support_batch(const ConvexBody& body, const Mat& directions, Exec exec) {
    Vec out(directions.cols());
    parallel_for(static_cast<std::size_t>(directions.cols()), exec, [&](std::size_t j) {
        out(static_cast<Eigen::Index>(j)) = body.support(directions.col(static_cast<Eigen::Index>(j)));
    });
    return out;
}

Cone make_cone(std::vector<Vec> generators) {
    if (generators.empty()) throw DomainError("cone: empty generator list");
    const auto n = generators.front().size();
    for (const auto& g : generators) {
        if (g.size() != n) throw DomainError("cone: dimension mismatch");
        require_nonzero(g, "cone generator");
    }
    return Cone{std::move(generators)};
}

Cone dual_cone(const Cone& c) {
    if (c.generators.empty()) throw DomainError("dual_cone: empty generator list");
    const int n = c.dim();
    if (n > 8) throw DomainError("dual_cone: dimension above 8");
    const int m = static_cast<int>(c.generators.size());
    Mat G(n, m);
    for (int j = 0; j < m; ++j) G.col(j) = c.generators[j].normalized();

    Eigen::JacobiSVD<Mat> svd(G, Eigen::ComputeFullU);
    const Vec& s = svd.singularValues();
    int d = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > 1e-10 * std::max(1.0, s(0))) ++d;
    const Mat span = svd.matrixU().leftCols(d);
    const Mat lineality = svd.matrixU().rightCols(n - d);

    std::vector<Vec> rays;
    const Mat Gs = span.transpose() * G; // generators in span coordinates (d x m)
    auto accept = [&](const Vec& w_span) {
        bool nonneg = true, nonpos = true;
        for (int j = 0; j < m; ++j) {
            const double t = w_span.dot(Gs.col(j));
            nonneg = nonneg && t >= -1e-10;
            nonpos = nonpos && t <= 1e-10;
        }
        if (!nonneg && !nonpos) return;
        Vec w = span * (nonneg ? w_span : Vec(-w_span));
        w.normalize();
        for (const auto& r : rays)
            if (same_direction(r, w)) return;
        rays.push_back(w);
    };
    if (d == 1) {
        accept(Vec::Ones(1));
    } else if (d > 1) {
        if (binomial(m, d - 1) > kEnumerationBudget) throw DomainError("dual_cone: enumeration budget exceeded");
        Mat rows(d - 1, d);
        for_each_subset(m, d - 1, [&](const std::vector<int>& idx) {
            for (int r = 0; r < d - 1; ++r) rows.row(r) = Gs.col(idx[r]).transpose();
            if (auto k = line_kernel(rows)) accept(*k);
        });
    }
    // A ray is extreme only if no other ray set reproduces it; with tight
    // enumeration every accepted ray lies on d-1 independent tight generators,
    // which is exactly the extreme-ray condition for the pointed part.
    for (int i = 0; i < n - d; ++i) {
        rays.push_back(lineality.col(i));
        rays.push_back(-lineality.col(i));
    }
    return Cone{std::move(rays)};
}

bool cone_contains(const Cone& c, const Vec& w, double tol) {
    const Cone dual = dual_cone(c);
    const double scale = std::max(1.0, w.norm());
    for (const auto& d : dual.generators)
        if (d.dot(w) < -tol * scale) return false;
    return true;
}

bool dual_cone_interior(const Cone& c, const Vec& w, double tol) {
    for (const auto& g : c.generators)
        if (g.normalized().dot(w) <= tol) return false;
    return true;
}

std::vector<double> default_ladder() { return {1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8}; }

UnboundedEvidence unbounded_along(const ConvexBody& body, const Vec& v, const std::vector<double>& ladder) {
    if (ladder.empty() || ladder.back() < 1e6) throw DomainError("unbounded_along: ladder must reach 1e6");
    for (std::size_t i = 1; i < ladder.size(); ++i)
        if (!(ladder[i] > ladder[i - 1])) throw DomainError("unbounded_along: ladder must increase");
    UnboundedEvidence ev;
    ev.ladder = ladder;
    for (double rho : ladder) ev.truncated_support.push_back(body.truncated_support(v, rho));
    ev.exceeds = ev.truncated_support.back() >= ev.threshold;
    return ev;
}

} // namespace finslercaps
