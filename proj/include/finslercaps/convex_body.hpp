#pragma once

#include "finslercaps/parallel.hpp"
#include "finslercaps/types.hpp"

#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace finslercaps {

/// Fiber convex bodies U in R^n, described by the oracles the rest of the
/// toolkit needs: support function h_U, gauge (Minkowski functional),
/// membership and a few representation-specific extras.
///
/// Bodies are immutable values; copies share their representation.
class ConvexBody {
public:
    enum class Kind { Box, Simplex, Ellipsoid, Polytope, Slab, Translated };

    /// Axis-aligned box prod_i (-R_i, R_i).
    static ConvexBody box(Vec radii);
    /// Simplex with vertices 0, r e_1, ..., r e_n.
    static ConvexBody simplex(int n, double r);
    /// Ellipsoid {p : (p-c)^T Q (p-c) <= 1}; Q must be symmetric positive definite.
    static ConvexBody ellipsoid(Mat Q, Vec center);
    static ConvexBody ellipsoid(Mat Q);
    /// Euclidean ball of radius r centred at the origin.
    static ConvexBody ball(int n, double r);
    /// Convex hull of a full-dimensional point set.
    static ConvexBody polytope_from_vertices(std::vector<Vec> points);
    /// Bounded intersection of half-spaces {p : <a_i, p> <= b_i}.
    static ConvexBody polytope_from_halfspaces(std::vector<Vec> normals, std::vector<double> offsets);
    /// Slab-cylinder {p : |<p, axis>| < half_width}; axis is normalised.
    static ConvexBody slab(Vec axis, double half_width);

    Kind kind() const;
    std::string kind_name() const;
    int dim() const { return dim_; }
    bool bounded() const;
    /// True when the boundary is C^2 and strictly convex (ellipsoids), so
    /// that the associated Minkowski metric admits a fundamental tensor.
    bool smooth() const;

    const Vec& interior_point() const { return witness_; }
    bool origin_interior() const;

    /// h_U(v) = sup_{p in U} <p, v>; +infinity when unbounded in direction v.
    /// Throws DomainError for v = 0.
    double support(const Vec& v) const;
    /// A maximiser of <p, v> over the closed body (bounded directions only).
    Vec support_point(const Vec& v) const;
    /// Hessian of h_U at v != 0 (smooth bodies only).
    Mat support_hessian(const Vec& v) const;

    /// inf{t > 0 : p in tU}. Requires the origin to be interior.
    double gauge(const Vec& p) const;
    /// Gradient of the gauge at p != 0 (smooth bodies only).
    Vec gauge_gradient(const Vec& p) const;

    /// Signed depth of p: positive inside, zero on the boundary, negative
    /// outside. The scale is representation-specific; only the sign and the
    /// zero set carry meaning.
    double depth(const Vec& p) const;
    bool contains(const Vec& p, double tol = 1e-12) const { return depth(p) >= -tol; }

    /// The body U - shift. Translating an ellipsoid moves its centre, nested
    /// translations merge.
    ConvexBody translate(const Vec& shift) const;

    /// Support of U intersected with the centred ball of radius rho. Exact for
    /// slabs and for bounded bodies contained in the ball; otherwise the upper
    /// bound min(h_U(v), rho |v|).
    double truncated_support(const Vec& v, double rho) const;

    /// max |p| over the closed body (+infinity when unbounded).
    double radius() const;

    /// Vertex list of polytopal bodies (box, simplex, polytope, translated polytopes).
    std::vector<Vec> vertices() const;
    bool polytopal() const;

    // Representation access for serialisation.
    struct BoxRep {
        Vec radii;
    };
    struct SimplexRep {
        int n;
        double r;
    };
    struct EllipsoidRep {
        Mat Q;
        Mat Qinv;
        Vec center;
    };
    struct PolytopeRep {
        std::vector<Vec> vertices;
        std::vector<Vec> normals;
        std::vector<double> offsets;
        bool from_vertices;
    };
    struct SlabRep {
        Vec axis;
        double half_width;
    };
    struct TranslatedRep {
        std::shared_ptr<const ConvexBody> inner;
        Vec shift;
    };
    using Rep = std::variant<BoxRep, SimplexRep, EllipsoidRep, PolytopeRep, SlabRep, TranslatedRep>;
    const Rep& rep() const { return *rep_; }

private:
    ConvexBody(int dim, std::shared_ptr<const Rep> rep, Vec witness);

    int dim_ = 0;
    std::shared_ptr<const Rep> rep_;
    Vec witness_;
};

/// Evaluates h_U at every column of `directions`.
Vec support_batch(const ConvexBody& body, const Mat& directions, Exec exec = Exec::Serial);

/// Closed polyhedral cone given by generators (conic hull).
struct Cone {
    std::vector<Vec> generators;

    int dim() const { return generators.empty() ? 0 : static_cast<int>(generators.front().size()); }
};

Cone make_cone(std::vector<Vec> generators);

/// Generators of {w : <w, v> >= 0 for all v in C}. Lineality directions of the
/// dual (present when C is not full-dimensional) are listed as +/- pairs after
/// the extreme rays. Generators are unit vectors. Requires n <= 8.
Cone dual_cone(const Cone& c);

/// Membership in the conic hull, tested against the dual generators.
bool cone_contains(const Cone& c, const Vec& w, double tol = 1e-12);
/// Membership in the interior of the dual cone: <w, g> > tol for every generator g.
bool dual_cone_interior(const Cone& c, const Vec& w, double tol = 1e-12);

/// Certification bar for "infinite" support values.
inline constexpr double kUnboundedThreshold = 1e6;

struct UnboundedEvidence {
    std::vector<double> ladder;
    std::vector<double> truncated_support;
    double threshold = kUnboundedThreshold;
    bool exceeds = false;
};

/// Probes support(U intersect B(rho), v) along an increasing radius ladder whose
/// last entry is at least 1e6. The verdict means "exceeds threshold", never a
/// proof of unboundedness.
UnboundedEvidence unbounded_along(const ConvexBody& body, const Vec& v, const std::vector<double>& ladder);
std::vector<double> default_ladder();

/// Facets {a, b} (unit a, <a, p> <= b) of the convex hull of a full-dimensional point set.
struct Facet {
    Vec normal;
    double offset;
};
std::vector<Facet> hull_facets(const std::vector<Vec>& points);

} // namespace finslercaps
