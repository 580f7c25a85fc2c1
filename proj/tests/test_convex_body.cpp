#include "doctest.h"
#include "oracles.hpp"

#include "finslercaps/convex_body.hpp"
#include "finslercaps/errors.hpp"

#include <cmath>

using namespace finslercaps;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

Mat diag2(double a, double b) {
    Mat Q = Mat::Zero(2, 2);
    Q(0, 0) = a;
    Q(1, 1) = b;
    return Q;
}

std::vector<ConvexBody> sample_bodies() {
    Mat Q(3, 3);
    Q << 2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.7;
    Vec c(3);
    c << 0.1, -0.2, 0.05;
    return {ConvexBody::box(v2(1, 2)),
            ConvexBody::simplex(3, 1.5),
            ConvexBody::ellipsoid(Q, c),
            ConvexBody::ball(2, 0.7),
            ConvexBody::polytope_from_vertices({v2(1, 0), v2(0, 1), v2(-1, 0.2), v2(0.1, -1), v2(0.2, 0.2)}),
            ConvexBody::box(v2(1, 1)).translate(v2(0.3, -0.1))};
}

} // namespace

TEST_CASE("support: spec examples") {
    CHECK(ConvexBody::box(v2(1, 2)).support(v2(1, 1)) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(ConvexBody::simplex(2, 2.0).support(v2(1, 0)) == doctest::Approx(2.0).epsilon(1e-15));

    const Mat Q = diag2(1, 4);
    const double h = ConvexBody::ellipsoid(Q).support(v2(0, 1));
    CHECK(h == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(std::abs(h - oracle::ellipsoid_support_ascent(Q, Vec::Zero(2), v2(0, 1))) < 1e-9);
}

TEST_CASE("support: ellipsoid closed form agrees with projected ascent") {
    std::mt19937_64 rng(7);
    Mat Q(3, 3);
    Q << 2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.7;
    Vec c(3);
    c << 0.1, -0.2, 0.05;
    const auto U = ConvexBody::ellipsoid(Q, c);
    for (int i = 0; i < 20; ++i) {
        const Vec v = oracle::random_unit(rng, 3);
        CHECK(std::abs(U.support(v) - oracle::ellipsoid_support_ascent(Q, c, v)) < 1e-9);
    }
}

TEST_CASE("support: errors and unbounded marker") {
    CHECK_THROWS_AS(ConvexBody::box(v2(1, 2)).support(Vec::Zero(2)), DomainError);
    const auto slab = ConvexBody::slab(v2(1, 0), 1.0);
    CHECK(std::isinf(slab.support(v2(0, 1))));
    CHECK(slab.support(v2(1, 0)) == 1.0);
    CHECK_FALSE(slab.bounded());
    CHECK_THROWS_AS(ConvexBody::ellipsoid(diag2(1, -1)), DomainError);
}

TEST_CASE("gauge: spec examples") {
    CHECK(ConvexBody::ball(2, 1.0).gauge(v2(3, 4)) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(ConvexBody::box(v2(1, 2)).gauge(v2(1, 1)) == 1.0);
    const Mat Q = diag2(1, 4);
    const auto E = ConvexBody::ellipsoid(Q);
    const double g = E.gauge(v2(1, 1));
    const double bis = oracle::bisect_gauge([&](const Vec& p) { return p.dot(Q * p) <= 1.0; }, v2(1, 1));
    CHECK(std::abs(g - std::sqrt(5.0)) < 1e-12);
    CHECK(std::abs(bis - std::sqrt(5.0)) < 1e-10);
    CHECK(E.gauge(Vec::Zero(2)) == 0.0);
}

TEST_CASE("gauge: origin outside or on boundary is rejected") {
    CHECK_THROWS_AS(ConvexBody::simplex(2, 1.0).gauge(v2(0.1, 0.1)), DomainError);
    CHECK_THROWS_AS(ConvexBody::box(v2(1, 1)).translate(v2(2, 0)).gauge(v2(1, 0)), DomainError);
}

TEST_CASE("gauge: off-centre ellipsoid matches membership bisection") {
    std::mt19937_64 rng(11);
    Mat Q(2, 2);
    Q << 1.5, 0.4, 0.4, 0.8;
    const Vec c = v2(0.2, -0.3);
    const auto U = ConvexBody::ellipsoid(Q, c);
    for (int i = 0; i < 50; ++i) {
        const Vec p = oracle::random_vec(rng, 2, -3, 3);
        const double bis =
            oracle::bisect_gauge([&](const Vec& q) { return (q - c).dot(Q * (q - c)) <= 1.0; }, p);
        CHECK(std::abs(U.gauge(p) - bis) < 1e-10 * std::max(1.0, bis));
    }
}

TEST_CASE("translate: shift rule and examples") {
    const auto B = ConvexBody::box(v2(1, 1)).translate(v2(0.5, 0));
    CHECK(B.support(v2(1, 0)) == doctest::Approx(0.5).epsilon(1e-15));

    std::mt19937_64 rng(3);
    for (const auto& U : sample_bodies()) {
        const int n = U.dim();
        const auto same = U.translate(Vec::Zero(n));
        const Vec shift = oracle::random_vec(rng, n, -0.2, 0.2);
        const auto T = U.translate(shift);
        for (int i = 0; i < 100; ++i) {
            const Vec v = oracle::random_unit(rng, n);
            CHECK(same.support(v) == U.support(v));
            CHECK(std::abs(T.support(v) - (U.support(v) - shift.dot(v))) < 1e-12);
        }
    }

    // Simplex shifted by its centroid, against a vertex enumeration.
    const Vec centroid = v2(2.0 / 3.0, 2.0 / 3.0);
    const auto S = ConvexBody::simplex(2, 2.0).translate(centroid);
    const std::vector<Vec> verts = {-centroid, v2(2, 0) - centroid, v2(0, 2) - centroid};
    CHECK(std::abs(S.support(v2(1, 1)) - oracle::vertex_support(verts, v2(1, 1))) < 1e-14);
    CHECK(S.origin_interior());
    const double g = S.gauge(v2(0.5, 0.1));
    const double bis = oracle::bisect_gauge(
        [&](const Vec& p) {
            const Vec q = p + centroid;
            return q.minCoeff() >= 0.0 && q.sum() <= 2.0;
        },
        v2(0.5, 0.1));
    CHECK(std::abs(g - bis) < 1e-12);
}

TEST_CASE("contains: spec examples") {
    const auto B = ConvexBody::box(v2(1, 2));
    CHECK(B.contains(v2(0, 0)));
    CHECK_FALSE(B.contains(v2(1.01, 0)));
    CHECK(ConvexBody::ellipsoid(diag2(1, 4)).contains(v2(0.9, 0.1)));
}

TEST_CASE("properties: homogeneity, subadditivity, gauge duality") {
    std::mt19937_64 rng(5);
    for (const auto& U : sample_bodies()) {
        const int n = U.dim();
        for (int i = 0; i < 200; ++i) {
            const Vec v = oracle::random_unit(rng, n);
            const Vec w = oracle::random_unit(rng, n);
            for (double t : {0.5, 2.0, 7.0}) {
                const double a = U.support(t * v), b = t * U.support(v);
                CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)));
            }
            CHECK(U.support(v + w) <= U.support(v) + U.support(w) + 1e-12);
        }
        if (!U.origin_interior()) continue;
        for (int i = 0; i < 100; ++i) {
            const Vec p = oracle::random_vec(rng, n, -2, 2);
            const double g = U.gauge(p);
            CHECK(U.contains(p, 1e-10) == (g <= 1.0 + 1e-10));
            if (U.polytopal()) {
                // gauge = max over facet normals of <p, a> / h(a).
                double best = 0.0;
                for (const auto& f : hull_facets(U.vertices())) best = std::max(best, p.dot(f.normal) / U.support(f.normal));
                CHECK(std::abs(best - g) < 1e-10 * std::max(1.0, g));
            } else {
                // Probe directions only give a lower bound.
                for (int j = 0; j < 20; ++j) {
                    const Vec v = oracle::random_unit(rng, n);
                    CHECK(p.dot(v) / U.support(v) <= g + 1e-12);
                }
            }
        }
    }
}

TEST_CASE("polytopes: vertex and half-space representations agree") {
    const auto V = ConvexBody::polytope_from_vertices({v2(1, 1), v2(-1, 1), v2(-1, -1), v2(1, -1), v2(0.2, 0.3)});
    CHECK(V.vertices().size() == 4);
    const auto H = ConvexBody::polytope_from_halfspaces({v2(1, 0), v2(-1, 0), v2(0, 1), v2(0, -1)}, {1, 1, 1, 1});
    std::mt19937_64 rng(9);
    for (int i = 0; i < 50; ++i) {
        const Vec v = oracle::random_unit(rng, 2);
        CHECK(std::abs(V.support(v) - H.support(v)) < 1e-12);
        CHECK(std::abs(V.support(v) - ConvexBody::box(v2(1, 1)).support(v)) < 1e-12);
    }
    CHECK_THROWS_AS(ConvexBody::polytope_from_halfspaces({v2(1, 0), v2(-1, 0), v2(0, 1)}, {1, 1, 1}), DomainError);
}

TEST_CASE("dual_cone: examples") {
    const auto orthant = dual_cone(make_cone({v2(1, 0), v2(0, 1)}));
    CHECK(orthant.generators.size() == 2);
    for (const auto& g : orthant.generators) CHECK((std::abs(g(0) * g(1)) < 1e-14 && g.minCoeff() > -1e-14));

    // Self-dual cone{(1,1),(1,-1)}; compare with a half-space grid oracle.
    const std::vector<Vec> gens = {v2(1, 1), v2(1, -1)};
    const auto D = dual_cone(make_cone(gens));
    const auto grid = oracle::dual_cone_grid_2d(gens);
    REQUIRE(!grid.empty());
    for (const auto& w : grid) CHECK(cone_contains(D, w, 1e-9));
    for (int i = 0; i < 3600; i += 7) {
        const double th = 2.0 * M_PI * i / 3600.0;
        const Vec w = v2(std::cos(th), std::sin(th));
        const bool in_grid = w.dot(gens[0]) >= 1e-9 && w.dot(gens[1]) >= 1e-9;
        const bool out_grid = w.dot(gens[0]) < -1e-9 || w.dot(gens[1]) < -1e-9;
        if (in_grid) CHECK(cone_contains(D, w));
        if (out_grid) CHECK_FALSE(cone_contains(D, w));
    }
    for (const auto& g : D.generators) {
        CHECK(std::abs(std::abs(g(0)) - std::abs(g(1))) < 1e-12);
        CHECK(g(0) > 0.0);
    }

    // Ray: dual is the closed half-plane w1 >= 0.
    const auto H = dual_cone(make_cone({v2(1, 0)}));
    CHECK(H.generators.size() == 3);
    CHECK(cone_contains(H, v2(0, -5)));
    CHECK(cone_contains(H, v2(0.1, 3)));
    CHECK_FALSE(cone_contains(H, v2(-0.1, 3)));
}

TEST_CASE("dual_cone: double dual reproduces the cone (NNLS membership oracle)") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 3;
        std::vector<Vec> gens;
        for (int i = 0; i < 4; ++i) {
            Vec g = oracle::random_vec(rng, n);
            g(0) = std::abs(g(0)) + 1.0;
            gens.push_back(g);
        }
        const auto C = make_cone(gens);
        const auto DD = dual_cone(dual_cone(C));
        Mat G(n, 4);
        for (int i = 0; i < 4; ++i) G.col(i) = gens[i];
        for (int k = 0; k < 30; ++k) {
            const Vec w = oracle::random_unit(rng, n);
            const double res = oracle::nnls_residual(G, w, 20000);
            if (res < 1e-6) CHECK(cone_contains(C, w, 1e-9));
            if (res > 1e-3) CHECK_FALSE(cone_contains(C, w, 1e-9));
            CHECK(cone_contains(C, w, 1e-9) == cone_contains(DD, w, 1e-9));
        }
    }
}

TEST_CASE("unbounded_along: examples") {
    const auto slab = ConvexBody::slab(v2(1, 0), 1.0);
    const auto ladder = default_ladder();
    const auto a = unbounded_along(slab, v2(0, 1), ladder);
    CHECK(a.exceeds);
    // Oracle: the slab truncated by the ball of radius 1e6 has support ~1e6 along (0,1).
    CHECK(std::abs(a.truncated_support[4] - std::sqrt(1e12 - 1.0)) < 1e-6);
    const auto b = unbounded_along(slab, v2(1, 0), ladder);
    CHECK_FALSE(b.exceeds);
    for (double s : b.truncated_support) CHECK(s == 1.0);
    CHECK_FALSE(unbounded_along(ConvexBody::box(v2(1, 2)), v2(0.3, 0.7), ladder).exceeds);
    CHECK_THROWS_AS(unbounded_along(slab, v2(0, 1), {1.0, 10.0}), DomainError);
}

TEST_CASE("support_batch: serial and parallel agree bit for bit") {
    std::mt19937_64 rng(17);
    Mat D(3, 500);
    for (int j = 0; j < 500; ++j) D.col(j) = oracle::random_unit(rng, 3);
    const auto U = sample_bodies()[2];
    const Vec a = support_batch(U, D, Exec::Serial);
    const Vec b = support_batch(U, D, Exec::Parallel);
    CHECK((a.array() == b.array()).all());
}
