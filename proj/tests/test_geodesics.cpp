#include "doctest.h"
#include "oracles.hpp"

#include "finslercaps/errors.hpp"
#include "finslercaps/geodesics.hpp"

#include <cmath>

using namespace finslercaps;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

IntVec i2(int a, int b) {
    IntVec v(2);
    v << a, b;
    return v;
}

FourierField conformal_02() { return FourierField(2, {{i2(0, 1), 0.2, 0.0}}); }
FourierField curved() { return FourierField(2, {{i2(0, 1), 0.2, 0.0}, {i2(1, 1), 0.0, 0.1}}); }

} // namespace

TEST_CASE("minimize_energy: flat examples") {
    GeodesicOptions o;
    o.N = 64;
    const auto r = minimize_energy(FinslerMetric(ConvexBody::ball(2, 1.0)), i2(1, 0), o);
    CHECK(r.converged);
    CHECK(std::abs(r.length - 1.0) < 1e-6);
    CHECK(r.length * r.length <= 2.0 * r.energy * (1 + 1e-14));

    o.N = 256;
    const FinslerMetric box(ConvexBody::box(v2(1, 2)));
    const auto b = minimize_energy(box, i2(1, 1), o, initial_loop(i2(1, 1), 256, 3, 2, 0.2));
    CHECK(b.converged);
    CHECK(std::abs(b.length - box.body().support(v2(1, 1))) < 1e-6);
    CHECK(b.speed_variance < 1e-6);
}

TEST_CASE("minimize_energy: conformal metric, refinement oracle") {
    const FinslerMetric F(ConvexBody::ball(2, 1.0), conformal_02());
    GeodesicOptions o;
    auto run = [&](int N) {
        o.N = N;
        o.multistart = 8;
        return minimal_length(F, i2(1, 0), o);
    };
    const auto a = run(256), b = run(1024);
    CHECK(a.value < std::exp(0.2));
    CHECK(std::abs(a.value - b.value) < 1e-4 * b.value);
    // The line x2 = 1/2 is the minimiser: length exp(-0.2).
    CHECK(std::abs(b.value - std::exp(-0.2)) < 1e-8);
    CHECK(a.witness.speed_variance < 1e-6);
}

TEST_CASE("minimize_energy: refinement order on a curved metric") {
    const FinslerMetric F(ConvexBody::ball(2, 1.0), curved());
    GeodesicOptions o;
    o.multistart = 4;
    std::vector<double> l;
    for (int N : {32, 64, 128, 256}) {
        o.N = N;
        l.push_back(minimal_length(F, i2(1, 1), o).value);
    }
    const double e1 = std::abs(l[0] - l[1]), e2 = std::abs(l[1] - l[2]), e3 = std::abs(l[2] - l[3]);
    CHECK(e2 < e1);
    CHECK(e3 < e2);
    CHECK(std::log2(e1 / e2) >= 1.9);
    CHECK(std::log2(e2 / e3) >= 1.9);
}

TEST_CASE("minimal_length: closed forms") {
    GeodesicOptions o;
    o.multistart = 4;
    Vec R(3);
    R << 0.5, 1.5, 2.0;
    IntVec a(3);
    a << 2, -1, 3;
    const auto box = minimal_length(FinslerMetric(ConvexBody::box(R)), a, o);
    CHECK(box.closed_form);
    CHECK(box.value == doctest::Approx(0.5 * 2 + 1.5 * 1 + 2.0 * 3).epsilon(1e-14));
    CHECK(std::abs(box.optimizer_value - box.value) < 1e-4);

    const auto ball = minimal_length(FinslerMetric(ConvexBody::ball(2, 1.7)), i2(3, 4), o);
    CHECK(ball.value == doctest::Approx(1.7 * 5.0).epsilon(1e-14));
    const auto simplex = minimal_length(FinslerMetric(ConvexBody::simplex(2, 2.0)), i2(1, 0), o);
    CHECK(simplex.value == 2.0);
    CHECK_THROWS_AS(minimal_length(FinslerMetric(ConvexBody::ball(2, 1.0)), i2(0, 0), o), DomainError);
}

TEST_CASE("minimal_length: monotonicity, scaling and symmetry on polytopes") {
    std::mt19937_64 rng(41);
    GeodesicOptions o;
    o.multistart = 2;
    o.N = 64;
    for (int t = 0; t < 10; ++t) {
        std::vector<Vec> pts;
        for (int i = 0; i < 6; ++i) pts.push_back(oracle::random_vec(rng, 2));
        pts.push_back(v2(0.5, 0.5));
        pts.push_back(v2(-0.5, -0.5));
        pts.push_back(v2(0.5, -0.5));
        const auto inner = ConvexBody::polytope_from_vertices(pts);
        std::vector<Vec> outer_pts = pts;
        for (int i = 0; i < 3; ++i) outer_pts.push_back(1.5 * oracle::random_vec(rng, 2));
        const auto outer = ConvexBody::polytope_from_vertices(outer_pts);
        IntVec a(2);
        a << static_cast<int>(rng() % 5) - 2, static_cast<int>(rng() % 5) - 2;
        if (a.isZero()) a(0) = 1;
        const double li = minimal_length(FinslerMetric(inner), a, o).value;
        const double lo = minimal_length(FinslerMetric(outer), a, o).value;
        CHECK(li <= lo + 1e-12);
        std::vector<Vec> scaled;
        for (const auto& p : pts) scaled.push_back(2.5 * p);
        CHECK(std::abs(minimal_length(FinslerMetric(ConvexBody::polytope_from_vertices(scaled)), a, o).value - 2.5 * li) <
              1e-12);
    }
    const FinslerMetric sym(ConvexBody::ellipsoid((Mat(2, 2) << 1.5, 0.4, 0.4, 0.8).finished()), curved());
    o.N = 128;
    o.multistart = 4;
    const double p = minimal_length(sym, i2(1, 1), o).value;
    const double m = minimal_length(sym, i2(-1, -1), o).value;
    CHECK(std::abs(p - m) < 1e-6);
}

TEST_CASE("spectrum_sample") {
    GeodesicOptions o;
    o.N = 128;
    const FinslerMetric flat(ConvexBody::ellipsoid((Mat(2, 2) << 1.5, 0.4, 0.4, 0.8).finished(), v2(0.2, -0.1)));
    const auto s = spectrum_sample(flat, i2(2, 1), 20, o);
    REQUIRE(s.lengths.size() == 1);
    CHECK(std::abs(s.lengths[0] - flat.body().support(v2(2, 1))) < 1e-6);

    const FinslerMetric F(ConvexBody::ball(2, 1.0), conformal_02());
    const auto c = spectrum_sample(F, i2(1, 0), 50, o);
    CHECK(!c.lengths.empty());
    CHECK(c.lengths.size() < 50);
    for (std::size_t i = 1; i < c.lengths.size(); ++i) CHECK(c.lengths[i] > c.lengths[i - 1] + 1e-4);
    o.multistart = 8;
    CHECK(std::abs(c.lengths.front() - minimal_length(F, i2(1, 0), o).value) < 1e-6);
    CHECK_THROWS_AS(spectrum_sample(F, i2(0, 0), 5, o), DomainError);
}

TEST_CASE("geodesic_residual") {
    const FinslerMetric flat(ConvexBody::ball(2, 1.0));
    const auto straight = DiscreteLoop::straight(i2(1, 2), 64, v2(0.1, 0.2));
    CHECK(geodesic_residual(flat, straight) < 1e-12);

    const FinslerMetric F(ConvexBody::ball(2, 1.0), conformal_02());
    GeodesicOptions o;
    o.N = 128;
    const auto r = minimize_energy(F, i2(1, 0), o, initial_loop(i2(1, 0), 128, 1, 1, 0.2));
    CHECK(r.converged);
    CHECK(geodesic_residual(F, r.loop) < 1e-8);

    auto bent = DiscreteLoop::straight(i2(1, 0), 128, v2(0.0, 0.3));
    for (int k = 0; k < 128; ++k) bent.samples()(1, k) += 0.05 * std::sin(2 * M_PI * k / 128.0);
    CHECK(geodesic_residual(F, bent) > 1e-3);

    // Gradient against finite differences of the discrete energy.
    const auto g = energy_gradient(F, bent);
    const double h = 1e-6;
    for (int k : {0, 17, 127}) {
        for (int j = 0; j < 2; ++j) {
            auto a = bent, b = bent;
            a.samples()(j, k) += h;
            b.samples()(j, k) -= h;
            const double fd = (loop_energy(F, a) - loop_energy(F, b)) / (2 * h);
            CHECK(std::abs(fd - g(j, k)) < 1e-5 * std::max(1.0, std::abs(g(j, k))));
        }
    }
}

TEST_CASE("minimize_energy: non-smooth locus and parallel determinism") {
    const FinslerMetric box(ConvexBody::box(v2(1, 2)));
    GeodesicOptions o;
    const auto r = minimize_energy(box, i2(1, 0), o, initial_loop(i2(1, 0), 256, 0, 1, 0.2));
    CHECK_FALSE(r.converged);
    CHECK(r.hit_nonsmooth);
    const auto m = minimal_length(box, i2(1, 0), o);
    CHECK(m.value == 1.0);
    CHECK(m.converged_runs >= 1);

    const FinslerMetric F(ConvexBody::ball(2, 1.0), curved());
    o.N = 128;
    o.multistart = 6;
    o.exec = Exec::Serial;
    const auto a = spectrum_sample(F, i2(1, 1), 6, o);
    o.exec = Exec::Parallel;
    const auto b = spectrum_sample(F, i2(1, 1), 6, o);
    CHECK(a.lengths == b.lengths);
    CHECK(a.multiplicity == b.multiplicity);
}
