#include "doctest.h"
#include "oracles.hpp"

#include "finslercaps/errors.hpp"
#include "finslercaps/finsler.hpp"

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

FourierField cos_x1(double amp) { return FourierField(2, {{i2(1, 0), amp, 0.0}}); }

FinslerMetric randers() {
    Mat Q(2, 2);
    Q << 1.5, 0.4, 0.4, 0.8;
    return FinslerMetric(ConvexBody::ellipsoid(Q, v2(0.25, -0.15)),
                         FourierField(2, {{i2(1, 0), 0.1, 0.05}, {i2(1, 1), 0.0, -0.08}}));
}

} // namespace

TEST_CASE("metric_eval and co_metric: examples") {
    const FinslerMetric ball(ConvexBody::ball(2, 1.0));
    const FinslerMetric box(ConvexBody::box(v2(1, 2)));
    CHECK(ball.eval(v2(0, 0), v2(3, 4)) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(box.eval(v2(0.3, 0.1), v2(1, 1)) == 3.0);
    CHECK(ball.eval(v2(0, 0), Vec::Zero(2)) == 0.0);

    const FinslerMetric conf(ConvexBody::ball(2, 1.0), cos_x1(0.1));
    CHECK(std::abs(conf.eval(v2(0, 0), v2(1, 0)) - std::exp(0.1)) < 1e-15);
    CHECK(ball.co_metric(v2(0, 0), v2(3, 4)) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(box.co_metric(v2(0, 0), v2(1, 1)) == 1.0);
    CHECK(std::abs(conf.co_metric(v2(0, 0), v2(1, 0)) - std::exp(-0.1)) < 1e-15);
}

TEST_CASE("metric: homogeneity and duality pairing") {
    std::mt19937_64 rng(21);
    const auto F = randers();
    for (int i = 0; i < 500; ++i) {
        const Vec x = oracle::random_vec(rng, 2, 0, 1);
        const Vec v = oracle::random_vec(rng, 2, -2, 2);
        const Vec p = oracle::random_vec(rng, 2, -2, 2);
        for (double t : {0.5, 2.0, 7.0}) {
            CHECK(std::abs(F.eval(x, t * v) - t * F.eval(x, v)) < 1e-12 * t * F.eval(x, v));
            CHECK(std::abs(F.co_metric(x, t * p) - t * F.co_metric(x, p)) < 1e-12 * t * F.co_metric(x, p));
        }
        CHECK(F.eval(x, v) > 0.0);
        CHECK(p.dot(v) <= F.eval(x, v) * F.co_metric(x, p) * (1 + 1e-12) + 1e-14);
    }
}

TEST_CASE("fundamental_tensor: examples") {
    const FinslerMetric ball(ConvexBody::ball(2, 1.0));
    const Mat I = Mat::Identity(2, 2);
    CHECK((ball.fundamental_tensor(v2(0, 0), v2(0.3, -2)) - I).norm() < 1e-14);

    Mat Q = Mat::Zero(2, 2);
    Q(0, 0) = 1.0;
    Q(1, 1) = 4.0;
    const FinslerMetric ell(ConvexBody::ellipsoid(Q));
    for (const auto& y : {v2(1, 0), v2(0.2, 1.3), v2(-1, 5)}) {
        CHECK((ell.fundamental_tensor(v2(0.1, 0.2), y) - Q.inverse()).norm() < 1e-14);
        CHECK((ell.legendre(v2(0, 0), y) - Q.inverse() * y).norm() < 1e-14);
        CHECK((ell.legendre_inverse(v2(0, 0), y) - Q * y).norm() < 1e-14);
    }

    const FinslerMetric box(ConvexBody::box(v2(1, 2)));
    CHECK_THROWS_AS(box.fundamental_tensor(v2(0, 0), v2(1, 0)), UnsupportedRepresentation);
    CHECK_THROWS_AS(box.legendre(v2(0, 0), v2(1, 0)), UnsupportedRepresentation);
    CHECK_THROWS_AS(ell.fundamental_tensor(v2(0, 0), v2(1e-7, 0)), DomainError);
}

TEST_CASE("fundamental_tensor: Euler identity, symmetry, definiteness, 0-homogeneity") {
    std::mt19937_64 rng(23);
    const auto F = randers();
    using TM = FinslerMetric::TensorMethod;
    for (int i = 0; i < 100; ++i) {
        const Vec x = oracle::random_vec(rng, 2, 0, 1);
        const Vec y = oracle::random_vec(rng, 2, -2, 2);
        const double F2 = std::pow(F.eval(x, y), 2);
        const Mat ga = F.fundamental_tensor(x, y, TM::Analytic);
        const Mat gf = F.fundamental_tensor(x, y, TM::FiniteDifference);
        CHECK(std::abs(y.dot(ga * y) - F2) < 1e-12 * F2);
        CHECK(std::abs(y.dot(gf * y) - F2) < 1e-6 * F2);
        CHECK((ga - ga.transpose()).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(Eigen::LLT<Mat>(ga).info() == Eigen::Success);
        CHECK((ga - gf).norm() < 1e-5 * ga.norm());
        for (double t : {0.5, 2.0}) CHECK((F.fundamental_tensor(x, t * y) - ga).norm() < 1e-6 * ga.norm());
        // Oracle: Hessian of F^2/2 by finite differences of the gradient of F^2/2.
        const Mat co = F.co_tensor(x, F.legendre(x, y));
        CHECK((co * ga - Mat::Identity(2, 2)).norm() < 1e-10);
    }
}

TEST_CASE("legendre: Euler, round trip against Newton oracle") {
    std::mt19937_64 rng(29);
    const auto F = randers();
    for (int i = 0; i < 100; ++i) {
        const Vec x = oracle::random_vec(rng, 2, 0, 1);
        const Vec v = oracle::random_vec(rng, 2, -2, 2);
        const Vec p = F.legendre(x, v);
        CHECK(std::abs(p.dot(v) - std::pow(F.eval(x, v), 2)) < 1e-10);
        CHECK(std::abs(F.co_metric(x, p) - F.eval(x, v)) < 1e-10);
        CHECK((F.legendre_inverse(x, p) - v).norm() < 1e-10);
        // legendre = 1/2 grad F^2 (finite differences)
        const Vec g = oracle::fd_gradient([&](const Vec& w) { return 0.5 * std::pow(F.eval(x, w), 2); }, v);
        CHECK((g - p).norm() < 1e-7);
        const Vec newton = oracle::newton_inverse([&](const Vec& w) { return F.legendre(x, w); }, p, p);
        CHECK((F.legendre_inverse(x, p) - newton).norm() < 1e-9);
    }
    CHECK(F.legendre(v2(0, 0), Vec::Zero(2)).isZero());
    CHECK(F.legendre_inverse(v2(0, 0), Vec::Zero(2)).isZero());
}

TEST_CASE("loop length and energy: examples") {
    const FinslerMetric ball(ConvexBody::ball(2, 1.0));
    const auto L = DiscreteLoop::straight(i2(1, 0), 64, v2(0, 0));
    CHECK(std::abs(loop_length(ball, L) - 1.0) < 1e-15);
    CHECK(std::abs(loop_energy(ball, L) - 0.5) < 1e-15);

    const FinslerMetric box(ConvexBody::box(v2(1, 2)));
    const auto L2 = DiscreteLoop::straight(i2(1, 1), 64, v2(0.2, 0.7));
    CHECK(std::abs(loop_length(box, L2) - 3.0) < 1e-13);
    CHECK(std::abs(loop_energy(box, L2) - 4.5) < 1e-12);

    CHECK_THROWS_AS(DiscreteLoop::straight(i2(1, 0), 8, v2(0, 0)), DomainError);
    Mat s = Mat::Zero(2, 16);
    CHECK_THROWS_AS(loop_length(ball, DiscreteLoop(s, i2(1, 0))), DomainError);
}

TEST_CASE("loop length: conformal quadrature against a refined reference") {
    const FourierField phi(2, {{i2(1, 0), 0.2, 0.1}, {i2(2, 1), 0.05, 0.0}});
    const FinslerMetric F(ConvexBody::ball(2, 1.0), phi);
    const Vec base = v2(0.1, 0.3);
    const auto L = DiscreteLoop::straight(i2(1, 0), 64, base);
    const double ref = oracle::simpson([&](double t) { return std::exp(phi.value(base + t * v2(1, 0))); }, 0.0, 1.0, 640);
    CHECK(std::abs(loop_length(F, L) - ref) < 1e-6 * ref);
}

TEST_CASE("loop: discrete Cauchy-Schwarz") {
    std::mt19937_64 rng(31);
    const auto F = randers();
    for (int trial = 0; trial < 20; ++trial) {
        auto L = DiscreteLoop::straight(i2(1, 2), 32, v2(0, 0));
        for (int k = 0; k < 32; ++k) L.samples().col(k) += 0.05 * oracle::random_vec(rng, 2);
        const double len = loop_length(F, L), en = loop_energy(F, L);
        CHECK(len * len <= 2.0 * en * (1 + 1e-14));
    }
    const FinslerMetric flat(ConvexBody::ball(2, 1.0));
    const auto S = DiscreteLoop::straight(i2(1, 2), 32, v2(0, 0));
    CHECK(std::abs(std::pow(loop_length(flat, S), 2) - 2.0 * loop_energy(flat, S)) < 1e-12);
}
