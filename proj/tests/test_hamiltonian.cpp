#include "doctest.h"
#include "oracles.hpp"

#include "finslercaps/errors.hpp"
#include "finslercaps/geodesics.hpp"
#include "finslercaps/hamiltonian.hpp"

#include <cmath>

using namespace finslercaps;

namespace {

Vec vec(std::initializer_list<double> v) {
    Vec out(static_cast<Eigen::Index>(v.size()));
    int i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

IntVec ivec(std::initializer_list<int> v) {
    IntVec out(static_cast<Eigen::Index>(v.size()));
    int i = 0;
    for (int x : v) out(i++) = x;
    return out;
}

Vec stack(const Vec& x, const Vec& p) {
    Vec z(x.size() + p.size());
    z << x, p;
    return z;
}

Mat Q0() { return (Mat(2, 2) << 1.5, 0.4, 0.4, 0.8).finished(); }

FinslerMetric randers_flat() { return FinslerMetric(ConvexBody::ellipsoid(Q0(), vec({0.25, -0.15}))); }

FinslerMetric randers_conformal() {
    return FinslerMetric(ConvexBody::ellipsoid(Q0(), vec({0.25, -0.15})),
                         FourierField(2, {{ivec({1, 0}), std::cos(0.1), 0.05}, {ivec({1, 1}), 0.0, -0.08}}));
}

LorentzSystem cos_potential() {
    return lorentz_system(FourierField(2, {{ivec({1, 0}), 1.0, 0.0}, {ivec({0, 0}), -1.0, 0.0}}));
}

} // namespace

TEST_CASE("radial_rhs: examples") {
    const RadialSystem flat{randers_flat(), RadialProfile::quadratic(1.0)};
    const Vec x = vec({0.3, 0.7}), y = vec({0.4, -0.9});
    const auto v = radial_rhs(flat, x, y);
    CHECK(v.ydot.norm() == 0.0);
    const auto w = radial_rhs(flat, vec({0.9, 0.1}), y);
    CHECK((v.xdot - w.xdot).norm() < 1e-15);

    const RadialSystem euclid{FinslerMetric(ConvexBody::ball(2, 1.0)), RadialProfile::quadratic(0.5)};
    const auto e = radial_rhs(euclid, x, y);
    CHECK((e.xdot - y).norm() < 1e-14);
    CHECK(e.ydot.norm() == 0.0);
    CHECK(radial_rhs(euclid, x, Vec::Zero(2)).xdot.norm() == 0.0);

    const RadialSystem box{FinslerMetric(ConvexBody::box(vec({1, 2}))), RadialProfile::quadratic(1.0)};
    CHECK_THROWS_AS(radial_rhs(box, x, y), UnsupportedRepresentation);
}

TEST_CASE("radial_rhs: conformal case against the finite-difference vector field") {
    const RadialSystem sys{randers_conformal(), RadialProfile::piecewise_linear({{0.0, 0.0}, {0.3, 0.0}, {1.0, 1.4}}, 0.05)};
    const HamiltonianSystem H = radial_hamiltonian(sys);
    CHECK(H.analytic_gradient());
    CHECK(H.gradient_check(100, 3) < 1e-5);
    std::mt19937_64 rng(7);
    for (int t = 0; t < 50; ++t) {
        const Vec x = oracle::random_vec(rng, 2), y = 2.0 * oracle::random_vec(rng, 2);
        const auto v = radial_rhs(sys, x, y);
        const Vec gx = oracle::fd_gradient([&](const Vec& q) { return H.value(0.0, q, y); }, x, 1e-6);
        const Vec gy = oracle::fd_gradient([&](const Vec& q) { return H.value(0.0, x, q); }, y, 1e-6);
        CHECK((v.xdot - gy).cwiseAbs().maxCoeff() < 1e-6);
        CHECK((v.ydot + gx).cwiseAbs().maxCoeff() < 1e-6);
    }
    // Inside the plateau the field vanishes.
    const Vec x = vec({0.2, 0.4});
    Vec y = vec({0.05, 0.02});
    REQUIRE(sys.metric.co_metric(x, y) < 0.3 - 0.05);
    CHECK(radial_rhs(sys, x, y).xdot.norm() == 0.0);
}

TEST_CASE("integrate: flat closed form, time reversal, drift") {
    const RadialSystem flat{randers_flat(), RadialProfile::quadratic(1.0)};
    const HamiltonianSystem H = radial_hamiltonian(flat);
    const Vec x0 = vec({0.1, 0.2}), y0 = vec({0.7, -0.3});
    const auto tr = integrate(H, stack(x0, y0), 1.0, {}, co_metric_squared(flat.metric));
    const auto v = radial_rhs(flat, x0, y0);
    const Vec end = tr.z.col(tr.z.cols() - 1);
    CHECK((end.head(2) - (x0 + v.xdot)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((end.tail(2) - y0).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(tr.max_drift < 1e-12);

    HamiltonianSystem osc(1, [](double, const Vec& x, const Vec& p) {
        const double s = std::sin(2.0 * M_PI * x(0));
        return 0.5 * p.squaredNorm() + 0.5 * s * s;
    });
    const Vec z0 = vec({0.1, 0.7});
    IntegratorOptions o4;
    o4.scheme = Scheme::Yoshida4;
    CHECK(integrate(osc, z0, 5.0, o4).drift_rate < 1e-8);
    // Plain midpoint: second-order energy error.
    IntegratorOptions a, b;
    a.dt = 2e-3;
    b.dt = 1e-3;
    const double da = integrate(osc, z0, 2.0, a).max_drift, db = integrate(osc, z0, 2.0, b).max_drift;
    CHECK(std::log2(da / db) == doctest::Approx(2.0).epsilon(0.1));

    const auto fwd = integrate(osc, z0, 3.0);
    const auto back = flow_map(osc, fwd.z.col(fwd.z.cols() - 1), 3.0, -3.0);
    CHECK((back - z0).cwiseAbs().maxCoeff() < 1e-9);

    IntegratorOptions bad;
    bad.dt = 2e-2;
    CHECK_THROWS_AS(integrate(osc, z0, 1.0, bad), DomainError);
    HamiltonianSystem stiff(1, [](double, const Vec& x, const Vec& p) { return 1e8 * (x(0) * x(0) + p(0) * p(0)); });
    CHECK_THROWS_AS(integrate(stiff, z0, 0.01), NumericalFailure);
}

TEST_CASE("integrate: radial conservation on a curved metric") {
    const RadialSystem sys{randers_conformal(), RadialProfile::quadratic(0.5)};
    const HamiltonianSystem H = radial_hamiltonian(sys);
    IntegratorOptions o;
    o.scheme = Scheme::Yoshida4;
    const auto tr = integrate(H, vec({0.1, 0.3, 0.8, -0.2}), 2.0, o, co_metric_squared(sys.metric));
    CHECK(tr.drift_rate < 1e-8);
}

TEST_CASE("radial_orbit: examples and action") {
    const RadialSystem euclid{FinslerMetric(ConvexBody::ball(2, 1.0)), RadialProfile::quadratic(1.0)};
    const auto o = radial_orbit(euclid, ivec({1, 0}), Vec::Zero(2));
    CHECK(radial_orbit_radius(euclid, ivec({1, 0})) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(o.action - 0.25) < 1e-12);
    const HamiltonianSystem H = radial_hamiltonian(euclid);
    CHECK(std::abs(action(H, o) - 0.25) < 1e-8);
    const auto tr = integrate(H, o.samples.col(0), 1.0, {}, co_metric_squared(euclid.metric));
    Vec shift = Vec::Zero(4);
    shift(0) = 1.0;
    CHECK((tr.z.col(tr.z.cols() - 1) - o.samples.col(0) - shift).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(tr.max_drift < 1e-8);

    const RadialSystem box{FinslerMetric(ConvexBody::box(vec({1, 2}))), RadialProfile::quadratic(1.0)};
    const auto b = radial_orbit(box, ivec({1, 1}), Vec::Zero(2));
    CHECK(radial_orbit_radius(box, ivec({1, 1})) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(std::abs(b.action - 2.25) < 1e-12);
    HamiltonianSystem Hb(2, [&](double, const Vec& x, const Vec& p) {
        return box.f.value(box.metric.co_metric(x, p));
    });
    CHECK(std::abs(action(Hb, b) - 2.25) < 1e-8);

    const RadialSystem shallow{euclid.metric, RadialProfile::piecewise_linear({{0.0, 0.0}, {0.5, 0.0}}, 0.0)};
    CHECK_THROWS_AS(radial_orbit(shallow, ivec({1, 0}), Vec::Zero(2)), DomainError);
    const RadialSystem affine{euclid.metric, RadialProfile::affine(0.5, 0.0)};
    CHECK_THROWS_AS(radial_orbit(affine, ivec({1, 0}), Vec::Zero(2)), DomainError);
    const RadialSystem curved{randers_conformal(), RadialProfile::quadratic(1.0)};
    CHECK_THROWS_AS(radial_orbit(curved, ivec({1, 0}), Vec::Zero(2)), DomainError);
}

TEST_CASE("radial orbits: smooth cross-check, geodesic correspondence, orientation") {
    const RadialSystem sys{randers_flat(), RadialProfile::quadratic(0.75, -0.2)};
    const HamiltonianSystem H = radial_hamiltonian(sys);
    for (const IntVec& a : {ivec({1, 0}), ivec({2, -1}), ivec({-1, 3})}) {
        const auto o = radial_orbit(sys, a, vec({0.3, 0.1}));
        const double r = radial_orbit_radius(sys, a);
        const Jet j = sys.f.eval(r);
        CHECK(std::abs(action(H, o) - (r * j.df - j.f)) < 1e-8);
        const auto tr = integrate(H, o.samples.col(0), 1.0);
        Vec shift = Vec::Zero(4);
        shift.head(2) = to_real(a);
        CHECK((tr.z.col(tr.z.cols() - 1) - o.samples.col(0) - shift).cwiseAbs().maxCoeff() < 1e-9);

        // Projection of the orbit sampled at t = k / 256.
        Mat xs(2, 256);
        for (int k = 0; k < 256; ++k) xs.col(k) = vec({0.3, 0.1}) + (k / 256.0) * to_real(a);
        const DiscreteLoop loop(xs, a);
        CHECK(geodesic_residual(sys.metric, loop) < 1e-6);
        const Vec speeds = loop_speeds(sys.metric, loop);
        CHECK((speeds.array() - j.df).abs().maxCoeff() < 1e-6);

        // The time reversal is an orbit of -H(-t, z) in class -alpha.
        const auto rev = reverse_orbit(o);
        CHECK(rev.winding == -a);
        const auto tb = integrate(reversed(H), rev.samples.col(0), 1.0);
        CHECK((tb.z.col(tb.z.cols() - 1) - rev.samples.col(rev.size())).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(measured_winding(tb.z) == -a);
    }
}

TEST_CASE("action: constant loops and orientation") {
    HamiltonianSystem c(2, [](double, const Vec&, const Vec& p) { return 0.7 + p.squaredNorm(); });
    PeriodicOrbit o;
    o.samples = Mat::Zero(4, 101);
    o.samples.topRows(2).colwise() = vec({0.2, 0.4});
    o.winding = IntVec::Zero(2);
    CHECK(action(c, o) == doctest::Approx(-0.7).epsilon(1e-14));

    HamiltonianSystem zero(2, [](double, const Vec&, const Vec&) { return 0.0; });
    const RadialSystem euclid{FinslerMetric(ConvexBody::ball(2, 1.0)), RadialProfile::quadratic(1.0)};
    const auto r = radial_orbit(euclid, ivec({1, 2}), Vec::Zero(2));
    const double fwd = action(zero, r), bwd = action(zero, reverse_orbit(r));
    CHECK(fwd > 0.0);
    CHECK(bwd == doctest::Approx(-fwd).epsilon(1e-14));
}

TEST_CASE("find_periodic_orbit") {
    const RadialSystem sys{randers_flat(), RadialProfile::quadratic(1.0)};
    const HamiltonianSystem H = radial_hamiltonian(sys);
    const IntVec a = ivec({1, 1});
    const auto exact = radial_orbit(sys, a, vec({0.2, 0.6}));
    Vec seed = exact.samples.col(0);
    seed += vec({0.04, -0.03, 0.05, -0.06});
    ShootingOptions so;
    const auto found = find_periodic_orbit(H, a, {seed}, so);
    REQUIRE(found.size() == 1);
    const auto& f = found.front();
    CHECK(f.closure_residual < so.tol);
    CHECK(f.winding == a);
    CHECK((f.y(0) - exact.y(0)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(std::abs(f.action - exact.action) < 1e-8);
    const auto shifted = radial_orbit(sys, a, f.x(0));
    CHECK(orbit_distance(f, shifted) < 1e-8);

    // Several seeds converging to the same orbit are deduplicated; serial and parallel agree.
    std::vector<Vec> seeds{f.samples.col(0), f.samples.col(0) + 1e-7 * Vec::Ones(4)};
    so.exec = Exec::Serial;
    const auto s1 = find_periodic_orbit(H, a, seeds, so);
    so.exec = Exec::Parallel;
    const auto s2 = find_periodic_orbit(H, a, seeds, so);
    CHECK(s1.size() == 1);
    REQUIRE(s1.size() == s2.size());
    CHECK(s1[0].samples == s2[0].samples);

    HamiltonianSystem zero(2, [](double, const Vec&, const Vec&) { return 0.0; });
    CHECK(find_periodic_orbit(zero, a, {seed}).empty());
    const auto trivial = find_periodic_orbit(zero, IntVec::Zero(2), {seed});
    REQUIRE(trivial.size() == 1);
    CHECK(trivial[0].winding == IntVec::Zero(2));
}

TEST_CASE("shift_by_one_form") {
    const ShiftMap id = shift_by_one_form(OneForm::constant(Vec::Zero(2)));
    const auto q = id.apply(vec({0.3, 0.4}), vec({1.0, -2.0}));
    CHECK(q.x == vec({0.3, 0.4}));
    CHECK(q.p == vec({1.0, -2.0}));

    const FourierField S(2, {{ivec({1, 0}), 0.0, 1.0 / (2.0 * M_PI)}});
    const ShiftMap exact = shift_by_one_form(OneForm::differential(S));
    const auto cert = exact.certify(100, 5);
    CHECK(cert.certified);
    CHECK(cert.residual < 1e-8);
    const auto back = exact.inverse(exact.apply(vec({0.3, 0.4}), vec({1.0, -2.0})).x,
                                    exact.apply(vec({0.3, 0.4}), vec({1.0, -2.0})).p);
    CHECK((back.p - vec({1.0, -2.0})).norm() < 1e-15);

    const ShiftMap twisted(OneForm({FourierField(2, {{ivec({0, 1}), 0.3, 0.0}}), FourierField()}));
    const auto tc = twisted.certify(20, 5);
    CHECK_FALSE(tc.certified);
    CHECK(tc.residual > 1e-3);

    // Constant sigma = p*: conjugated radial orbits are the shifted ones.
    const RadialSystem sys{randers_flat(), RadialProfile::quadratic(1.0)};
    const HamiltonianSystem H = radial_hamiltonian(sys);
    const Vec pstar = vec({0.3, -0.2});
    const ShiftMap shift = shift_by_one_form(OneForm::constant(pstar));
    const HamiltonianSystem G = shift.conjugate(H);
    CHECK(G.gradient_check(50, 2) < 1e-5);
    const auto o = radial_orbit(sys, ivec({2, 1}), vec({0.1, 0.1}));
    const auto z = shift.apply(o.x(0), o.y(0));
    const auto tr = integrate(G, stack(z.x, z.p), 1.0);
    CHECK(measured_winding(tr.z) == ivec({2, 1}));
    CHECK((tr.z.col(tr.z.cols() - 1).tail(2) - (o.y(0) - pstar)).norm() < 1e-10);
}

TEST_CASE("cat_map") {
    const CatMap id = cat_map(Mat::Identity(2, 2));
    const auto q = id.apply(vec({0.3, 0.4}), vec({1.0, -2.0}));
    CHECK((q.x - vec({0.3, 0.4})).norm() < 1e-15);
    CHECK((q.p - vec({1.0, -2.0})).norm() < 1e-15);

    const Mat A = (Mat(2, 2) << 2, 1, 1, 1).finished();
    const CatMap cm = cat_map(A);
    const Vec ev = cm.eigenvalues();
    CHECK(ev(0) == doctest::Approx((3 - std::sqrt(5.0)) / 2).epsilon(1e-14));
    CHECK(ev(1) == doctest::Approx((3 + std::sqrt(5.0)) / 2).epsilon(1e-14));
    for (int i = 0; i < 2; ++i) CHECK(std::abs(ev(i) * ev(i) - 3 * ev(i) + 1) < 1e-12);
    CHECK(cm.certify(100, 9).residual < 1e-8);
    CHECK(symplectic_residual(cm.jacobian()) < 1e-14);
    CHECK((cm.fiber_matrix() - A.inverse().transpose()).norm() < 1e-15);
    CHECK_THROWS_AS(cat_map((Mat(2, 2) << 2, 1, 1, 2).finished()), DomainError);
    CHECK_THROWS_AS(cat_map((Mat(2, 2) << 1.5, 0, 0, 1).finished()), DomainError);

    // Fiber images of the square's corners contract along the expanding eigenvector at rate 1/lambda_+.
    Eigen::SelfAdjointEigenSolver<Mat> es(A);
    const Vec u = es.eigenvectors().col(1);
    const double lp = es.eigenvalues()(1);
    Vec c = vec({1.0, -1.0});
    const double c0 = std::abs(c.dot(u));
    for (int n = 1; n <= 6; ++n) {
        c = cm.fiber_matrix() * c;
        CHECK(std::abs(c.dot(u)) == doctest::Approx(c0 * std::pow(lp, -n)).epsilon(1e-10));
    }
    // Non-symmetric unimodular: still symplectic by construction.
    CHECK(cat_map((Mat(2, 2) << 1, 1, 0, 1).finished()).certify(20, 1).certified);
}

TEST_CASE("lorentz_system and cutoff") {
    const LorentzSystem free = lorentz_system(FourierField(2, {}));
    CHECK(free.H.value(0.0, vec({0.3, 0.1}), vec({1.0, 0.0})) == 0.5);
    const LorentzSystem L = cos_potential();
    CHECK(std::abs(L.shift) < 1e-14);
    CHECK(L.potential(vec({0.0, 0.37})) == doctest::Approx(0.0));
    CHECK(L.H.gradient_check(100, 4) < 1e-6);
    const LorentzSystem raised = lorentz_system(FourierField(2, {{ivec({1, 0}), 1.0, 0.0}, {ivec({1, 1}), 0.0, 0.3}}));
    std::mt19937_64 rng(3);
    for (int i = 0; i < 2000; ++i) CHECK(raised.potential(Vec(oracle::random_vec(rng, 2))) <= 1e-12);

    const double a = 0.5, b = 1.0, c = 2.0, R = 10.0;
    const HamiltonianSystem G = lorentz_cutoff(L, a, b, c, R);
    CHECK(G.value(0.0, vec({0.0, 0.0}), vec({1.0, 0.9})) == 0.0);
    CHECK(G.value(0.0, vec({0.0, 0.0}), vec({10.5, 1.0})) == 0.0);
    CHECK(G.value(0.0, vec({0.0, 0.0}), vec({3.0, 0.5})) == c);
    for (int i = 0; i < 5000; ++i) {
        const Vec q = oracle::random_vec(rng, 2);
        const Vec p = 12.0 * (2.0 * oracle::random_vec(rng, 2) - Vec::Ones(2));
        const double g = G.value(0.0, q, p);
        if (!in_lorentz_cone(p) || L.H.value(0.0, q, p) <= a || p.norm() >= R) CHECK(std::abs(g) <= 1e-14);
        CHECK(g >= 0.0);
        CHECK(g <= c);
    }
    CHECK_THROWS_AS(lorentz_cutoff(L, 0.0, 1.0, c, R), DomainError);
    CHECK_THROWS_AS(lorentz_cutoff(L, 1.0, 0.5, c, R), DomainError);
}

TEST_CASE("lorentz_orbit_search") {
    const LorentzSystem free = lorentz_system(FourierField(2, {}));
    const IntVec a = ivec({2, 1});
    LorentzSearchOptions o;
    o.levels = 2;
    for (const auto& l : lorentz_orbit_search(free, a, 0.5, 1.5, o)) {
        REQUIRE(!l.orbits.empty());
        const auto [p, T] = lorentz_free_orbit(a, l.energy);
        CHECK(std::abs(l.orbits[0].period - T) < 1e-8);
        CHECK((l.orbits[0].y(0) - p).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(0.5 * (p(0) * p(0) - p(1) * p(1)) == doctest::Approx(l.energy).epsilon(1e-14));
    }
    const auto L = cos_potential();
    o.levels = 2;
    for (const auto& l : lorentz_orbit_search(L, a, 0.5, 1.5, o)) {
        REQUIRE(!l.orbits.empty());
        const auto& orb = l.orbits[0];
        CHECK(orb.closure_residual < 1e-8);
        CHECK(orb.winding == a);
        CHECK((orb.energy.array() - l.energy).abs().maxCoeff() < 1e-8);
    }
    CHECK_THROWS_AS(lorentz_orbit_search(L, ivec({1, 2}), 0.5, 1.5, o), DomainError);
    CHECK_THROWS_AS(lorentz_free_orbit(ivec({1, 1}), 1.0), DomainError);
}
