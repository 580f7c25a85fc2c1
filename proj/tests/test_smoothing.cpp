#include "doctest.h"
#include "oracles.hpp"

#include "finslercaps/errors.hpp"
#include "finslercaps/smoothing.hpp"

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

FinslerMetric randers() {
    Mat Q(2, 2);
    Q << 1.5, 0.4, 0.4, 0.8;
    return FinslerMetric(ConvexBody::ellipsoid(Q, v2(0.25, -0.15)),
                         FourierField(2, {{i2(1, 0), 0.1, 0.05}, {i2(1, 1), 0.0, -0.08}}));
}

} // namespace

TEST_CASE("select_params: schedule and invariants") {
    const auto p = select_params(1.0, 1.0);
    CHECK(p.delta == doctest::Approx(1.0 / 8.0).epsilon(1e-15));
    CHECK(p.eps == doctest::Approx(p.delta / 32.0).epsilon(1e-15));
    CHECK(check_invariants(p).empty());
    CHECK(check_invariants(select_params(0.01, 4.0)).empty());
    for (int k = -8; k <= 4; ++k) {
        const auto q = select_params(std::pow(10.0, k / 2.0), 2.5);
        CHECK(check_invariants(q).empty());
        CHECK(q.kappa * (q.delta - q.eps) + q.sigma > 0.0);
    }
    CHECK_THROWS_AS(select_params(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(select_params(1.0, 0.5), DomainError);

    auto bad = p;
    bad.mu = 0.5 * p.kappa;
    CHECK_FALSE(check_invariants(bad).empty());
    CHECK_THROWS_AS(require_invariants(bad), ContractError);
}

TEST_CASE("lambda and chi: branch values") {
    const auto p = select_params(1.0, 1.0);
    const Jet a = lambda_profile(p, p.eps / 2.0);
    CHECK(a.f == 0.0);
    CHECK(a.df == 0.0);
    const Jet b = lambda_profile(p, 2.0 * p.delta);
    CHECK(std::abs(b.f - (2.0 * p.mu * p.delta + p.sigma)) < 1e-14);
    CHECK(b.df == doctest::Approx(p.mu).epsilon(1e-15));
    CHECK(chi_profile(p, 0.0).f == doctest::Approx(-p.kappa * p.delta).epsilon(1e-15));
    CHECK(chi_profile(p, p.eta / p.A + 1.0).f == p.rho);
    CHECK(chi_profile(p, p.delta / 2.0).df == p.kappa);
}

TEST_CASE("lambda and chi: C2, convex / concave, nondecreasing") {
    const auto p = select_params(0.3, 2.0);
    const double h = 1e-7 * p.eta;
    double prev_l = -1.0, prev_c = -1e300;
    for (int i = 0; i <= 4000; ++i) {
        const double s = 1.2 * p.eta * i / 4000.0 + 1e-6 * p.eta;
        const Jet l = lambda_profile(p, s), c = chi_profile(p, s);
        CHECK(l.d2f >= 0.0);
        CHECK(c.d2f <= 0.0);
        CHECK(c.df >= 0.0);
        CHECK(l.f >= prev_l);
        CHECK(c.f >= prev_c);
        prev_l = l.f;
        prev_c = c.f;
        if (s > p.eps) CHECK(l.df > 0.0);
        // Derivatives against central differences of the values.
        const double dl = (lambda_profile(p, s + h).f - lambda_profile(p, s - h).f) / (2 * h);
        const double dc = (chi_profile(p, s + h).f - chi_profile(p, s - h).f) / (2 * h);
        CHECK(std::abs(dl - l.df) < 1e-6 * std::max(1.0, p.mu));
        CHECK(std::abs(dc - c.df) < 1e-6 * std::max(1.0, p.kappa));
        const double d2l = (lambda_profile(p, s + h).df - lambda_profile(p, s - h).df) / (2 * h);
        const double d2c = (chi_profile(p, s + h).df - chi_profile(p, s - h).df) / (2 * h);
        CHECK(std::abs(d2l - l.d2f) < 1e-4 * (1.0 + std::abs(l.d2f)));
        CHECK(std::abs(d2c - c.d2f) < 1e-4 * (1.0 + std::abs(c.d2f)));
    }
}

TEST_CASE("modified Lagrangian: sandwich, equality region, value at zero") {
    const auto F = randers();
    for (double eta : {1.0, 0.1, 0.01}) {
        const ModifiedLagrangian L(F, eta);
        const double z = L.at_zero();
        CHECK(z >= -eta);
        CHECK(z <= 0.0);
        CHECK(L.value(v2(0.3, 0.4), Vec::Zero(2)) == doctest::Approx(z).epsilon(1e-14));
        std::mt19937_64 rng(101);
        for (int i = 0; i < 20000; ++i) {
            const Vec x = oracle::random_vec(rng, 2, 0, 1);
            const Vec v = oracle::random_unit(rng, 2) * std::sqrt(eta) * std::pow(10.0, oracle::random_vec(rng, 1, -2, 0.5)(0));
            const double l0 = std::pow(F.eval(x, v), 2);
            const double le = L.value(x, v);
            CHECK(le <= l0 + 1e-9);
            CHECK(le >= l0 - eta - 1e-9);
            if (l0 >= eta) CHECK(std::abs(le - l0) <= 1e-12 * std::max(1.0, l0));
        }
    }
}

TEST_CASE("modified Lagrangian: gradient and Hessian against finite differences") {
    const auto F = randers();
    const ModifiedLagrangian L(F, 0.1);
    std::mt19937_64 rng(103);
    for (int i = 0; i < 300; ++i) {
        const Vec x = oracle::random_vec(rng, 2, 0, 1);
        const Vec v = oracle::random_unit(rng, 2) * std::sqrt(0.1) * std::pow(10.0, oracle::random_vec(rng, 1, -1.5, 0.3)(0));
        const Vec g = L.gradient(x, v);
        const Vec gf = oracle::fd_gradient([&](const Vec& w) { return L.value(x, w); }, v, 1e-7);
        CHECK((g - gf).norm() < 1e-5 * std::max(1.0, g.norm()));
        const Mat H = L.hessian(x, v);
        Mat Hf(2, 2);
        for (int j = 0; j < 2; ++j) {
            Vec a = v, b = v;
            a(j) += 1e-6;
            b(j) -= 1e-6;
            Hf.col(j) = (L.gradient(x, a) - L.gradient(x, b)) / 2e-6;
        }
        CHECK((H - Hf).norm() < 1e-4 * std::max(1.0, H.norm()));
        CHECK(Eigen::SelfAdjointEigenSolver<Mat>(H).eigenvalues()(0) > 0.0);
    }
}

TEST_CASE("modified Lagrangian: monotone in eta") {
    const auto F = randers();
    const ModifiedLagrangian a(F, 0.05), b(F, 0.2), c(F, 1.0);
    std::mt19937_64 rng(107);
    for (int i = 0; i < 20000; ++i) {
        const Vec x = oracle::random_vec(rng, 2, 0, 1);
        const Vec v = oracle::random_vec(rng, 2, -1.2, 1.2);
        CHECK(a.value(x, v) >= b.value(x, v) - 1e-12);
        CHECK(b.value(x, v) >= c.value(x, v) - 1e-12);
    }
}

TEST_CASE("fenchel_dual: quadratic examples") {
    const LagrangianOracle half_sq{[](const Vec&, const Vec& v) { return 0.5 * v.squaredNorm(); },
                                   [](const Vec&, const Vec& v) { return v; },
                                   [](const Vec&, const Vec& v) { return Mat(Mat::Identity(v.size(), v.size())); }};
    const auto r = fenchel_dual(half_sq, Vec::Zero(2), v2(0.7, -2), Vec::Zero(2));
    CHECK(std::abs(r.value - 0.5 * (0.49 + 4.0)) < 1e-13);
    CHECK((r.argmax - v2(0.7, -2)).norm() < 1e-12);

    Mat Q(2, 2);
    Q << 2.0, 0.5, 0.5, 1.0;
    const LagrangianOracle riem{[&](const Vec&, const Vec& v) { return 0.5 * v.dot(Q * v); },
                                [&](const Vec&, const Vec& v) { return Vec(Q * v); },
                                [&](const Vec&, const Vec&) { return Q; }};
    const Vec p = v2(1, 3);
    const auto s = fenchel_dual(riem, Vec::Zero(2), p, v2(5, 5));
    CHECK(std::abs(s.value - 0.5 * p.dot(Q.inverse() * p)) < 1e-12);
    CHECK(s.residual < 1e-9);

    // Non-convex "Lagrangian": Hessian indefinite, reported as a numerical failure.
    const LagrangianOracle bad{[](const Vec&, const Vec& v) { return -v.squaredNorm(); },
                               [](const Vec&, const Vec& v) { return Vec(-2.0 * v); },
                               [](const Vec&, const Vec& v) { return Mat(-2.0 * Mat::Identity(v.size(), v.size())); }};
    CHECK_THROWS_AS(fenchel_dual(bad, Vec::Zero(2), p, Vec::Zero(2)), NumericalFailure);
}

TEST_CASE("fenchel_dual: modified Hamiltonian outside the sqrt(eta) disk, biconjugation") {
    const auto F = randers();
    const double eta = 0.1;
    const ModifiedLagrangian L(F, eta);
    std::mt19937_64 rng(109);
    for (int i = 0; i < 300; ++i) {
        const Vec x = oracle::random_vec(rng, 2, 0, 1);
        Vec p = oracle::random_unit(rng, 2);
        const double fs = std::sqrt(eta) * (0.05 + 3.0 * oracle::random_vec(rng, 1, 0, 1)(0));
        p *= fs / F.co_metric(x, p);
        const auto H = modified_hamiltonian(L, x, p);
        CHECK(H.residual < 1e-9);
        const double half = 0.5 * fs * fs;
        if (fs >= std::sqrt(eta)) CHECK(std::abs(H.value - half) < 1e-6 * half);
        CHECK(H.value >= half * (1.0 - 1e-12));

        // L**(v) = <grad L(v), v> - H(grad L(v)) for the half Lagrangian.
        const Vec v = oracle::random_unit(rng, 2) * std::sqrt(eta) * (0.1 + 2.0 * oracle::random_vec(rng, 1, 0, 1)(0));
        const Vec q = 0.5 * L.gradient(x, v);
        const double bi = q.dot(v) - modified_hamiltonian(L, x, q).value;
        CHECK(std::abs(bi - 0.5 * L.value(x, v)) < 1e-7);
    }
}

TEST_CASE("verify_modification: report and serial/parallel agreement") {
    const ModifiedLagrangian L(randers(), 0.1);
    ModificationCheck chk;
    chk.samples = 3000;
    chk.hessian_samples = 1000;
    chk.dual_samples = 300;
    const auto a = verify_modification(L, chk, 5, Exec::Serial);
    const auto b = verify_modification(L, chk, 5, Exec::Parallel);
    CHECK(a.ok());
    CHECK(a.min_hessian_eig == b.min_hessian_eig);
    CHECK(a.max_dual_rel_error == b.max_dual_rel_error);
    CHECK(a.hist_counts == b.hist_counts);
    CHECK_THROWS_AS(ModifiedLagrangian(FinslerMetric(ConvexBody::box(v2(1, 1))), 0.1), UnsupportedRepresentation);
}

TEST_CASE("profiles: linearize and action bound") {
    const auto f = RadialProfile::quadratic(0.5);
    const auto lin = linearize_profile(f, 1.0);
    CHECK(std::abs(lin.r - 1.0) < 1e-12);
    const double w = 0.05;
    for (double rho : {1.0 + w, 1.5, 3.0, 10.0}) {
        CHECK(std::abs(lin.profile.value(rho) - (rho - 0.5)) < 1e-12);
        CHECK(std::abs(lin.profile.d1(rho) - 1.0) < 1e-12);
    }
    for (double rho : {0.0, 0.3, 1.0 - w}) CHECK(lin.profile.value(rho) == f.value(rho));
    // C^2 across the blend window.
    for (double rho : {1.0 - w, 1.0 + w}) {
        const double e = 1e-7;
        CHECK(std::abs(lin.profile.d1(rho + e) - lin.profile.d1(rho - e)) < 1e-5);
        CHECK(std::abs(lin.profile.d2(rho + e) - lin.profile.d2(rho - e)) < 1e-4);
    }
    CHECK(std::abs(action_bound(f, 1.0) - 0.5) < 1e-12);

    const auto aff = RadialProfile::affine(2.0, -0.7);
    const auto same = linearize_profile(aff, 2.0);
    for (double rho : {0.0, 0.5, 4.0}) CHECK(same.profile.value(rho) == aff.value(rho));
    CHECK(std::abs(action_bound(aff, 2.0) - 0.7) < 1e-15);

    // Plateau at f(0) up to rho0, then slope lambda.
    const double rho0 = 0.4, lambda = 3.0;
    const auto pl = RadialProfile::piecewise_linear({{0.0, -1.0}, {rho0, -1.0}, {2.0, -1.0 + lambda * (2.0 - rho0)}}, 0.02);
    CHECK(pl.plateau() == doctest::Approx(rho0 - 0.02));
    CHECK(std::abs(action_bound(pl, lambda) - (lambda * rho0 - (-1.0))) < 1e-9);
    CHECK_THROWS_AS(action_bound(pl, lambda + 0.1), DomainError);
}

TEST_CASE("profiles: exhausting shape has its first slope point on the convex corner") {
    const double m = 1.2, delta = 0.1, nu = 5.0, S = 0.8;
    const double rise = delta + (S + m) / nu;
    const auto h = RadialProfile::piecewise_linear({{0.0, -m}, {delta, -m}, {rise, S}, {0.9, S}}, 0.01);
    const double lambda = 2.0;
    const double r = first_slope_point(h, lambda);
    CHECK(r > delta - 0.01);
    CHECK(r < delta + 0.01);
    // Bisection oracle on f' with its own bracket.
    double lo = delta - 0.01, hi = delta + 0.01;
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        (h.d1(mid) >= lambda ? hi : lo) = mid;
    }
    CHECK(std::abs(r - hi) < 1e-12);
    const double c = action_bound(h, lambda);
    CHECK(std::abs(c - (r * h.d1(r) - h.value(r))) < 1e-15);
}

TEST_CASE("profiles: action bound depends only on the tangent intercept") {
    const auto f = RadialProfile::piecewise_linear({{0.0, 0.0}, {0.5, 0.0}, {1.5, 2.0}, {3.0, 8.0}}, 0.05);
    const auto g = RadialProfile::piecewise_linear({{0.0, 0.0}, {0.5, 0.0}, {1.5, 2.0}, {3.0, 5.0}}, 0.05);
    CHECK(std::abs(action_bound(f, 2.0) - action_bound(g, 2.0)) < 1e-12);
    CHECK(std::abs(action_bound(f, 2.0) - 1.0) < 1e-9);
}

TEST_CASE("exhausting_step_params: formulas and domains") {
    const auto a = exhausting_step_params(2.0, 1.0, 0.1, 1.25);
    CHECK(a.first_case);
    CHECK(a.nu == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(0.75 / (2.0 * std::sqrt(0.1)) - 1.25 < 0.0);
    CHECK(a.S == 0.0);
    const auto b = exhausting_step_params(1.0, 2.0, 0.25, NAN);
    CHECK_FALSE(b.first_case);
    CHECK(b.mu == doctest::Approx(2.0).epsilon(1e-15));
    const auto c = exhausting_step_params(1.0, 2.0, 0.25, 2.5, {0.5, 1.5, 3.0});
    CHECK(c.mu_minus == 1.5);
    CHECK(c.mu_plus == 3.0);
    CHECK(c.mu_prime == doctest::Approx(1.75));
    CHECK(c.T == 0.0);
    double prev = 0.0;
    for (double d : {0.2, 0.1, 0.01, 0.001}) {
        const double nu = exhausting_step_params(2.0, 1.0, d, 1.25).nu;
        CHECK(nu > prev);
        prev = nu;
    }
    CHECK_THROWS_AS(exhausting_step_params(2.0, 1.0, 0.3, 1.25), DomainError);
    CHECK_THROWS_AS(exhausting_step_params(2.0, 1.0, 0.1, 1.6), DomainError);
    CHECK_THROWS_AS(exhausting_step_params(1.0, 2.0, 0.6, NAN), DomainError);
    CHECK_THROWS_AS(exhausting_step_params(1.0, 2.0, 0.25, NAN, {2.0}), DomainError);
}
