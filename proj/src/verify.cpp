#include "finslercaps/verify.hpp"

#include "finslercaps/capacities.hpp"
#include "finslercaps/convex_body.hpp"
#include "finslercaps/errors.hpp"
#include "finslercaps/finsler.hpp"
#include "finslercaps/geodesics.hpp"
#include "finslercaps/hamiltonian.hpp"
#include "finslercaps/log.hpp"
#include "finslercaps/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <tuple>
#include <random>

namespace finslercaps {

namespace {

// Accumulates error / tolerance ratios; a ratio above 1 is a violation.
struct Tally {
    std::int64_t trials = 0;
    std::int64_t violations = 0;
    double max_ratio = 0.0;

    bool check(double err, double tol) {
        const double r = std::isfinite(err) ? err / tol : INFINITY;
        max_ratio = std::max(max_ratio, r);
        if (!(r <= 1.0)) {
            ++violations;
            return false;
        }
        return true;
    }
    void merge(const Tally& o) {
        trials += o.trials;
        violations += o.violations;
        max_ratio = std::max(max_ratio, o.max_ratio);
    }
};

SuiteResult finish(std::string name, const Tally& t, std::vector<std::pair<std::string, double>> metrics) {
    SuiteResult r;
    r.name = std::move(name);
    r.trials = t.trials;
    r.violations = t.violations;
    r.max_error = t.max_ratio;
    r.passed = t.violations == 0;
    r.metrics = std::move(metrics);
    return r;
}

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Vec gaussian(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> g;
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = g(rng);
    return v;
}

Vec cube(std::mt19937_64& rng, int n, double a) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = uniform(rng, -a, a);
    return v;
}

IntVec random_class(std::mt19937_64& rng, int n, int bound) {
    IntVec a(n);
    do {
        for (int i = 0; i < n; ++i) a(i) = static_cast<int>(rng() % static_cast<std::uint64_t>(2 * bound + 1)) - bound;
    } while (a.isZero());
    return a;
}

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

// Random body with the origin in its interior, rebuildable at any real scale s
// (s < 0 gives the reflected body).
struct BodySpec {
    enum Kind { Box, Ellipsoid, Polytope, ShiftedBox } kind = Box;
    int n = 2;
    Vec radii;
    Mat Q;
    Vec center;
    std::vector<Vec> points;
    Vec shift;

    bool centrally_symmetric() const {
        return kind == Box || (kind == Ellipsoid && center.isZero());
    }

    ConvexBody build(double s = 1.0) const {
        switch (kind) {
        case Box: return ConvexBody::box(std::abs(s) * radii);
        case Ellipsoid: return ConvexBody::ellipsoid(Q / (s * s), s * center);
        case Polytope: {
            std::vector<Vec> pts;
            for (const auto& p : points) pts.push_back(s * p);
            return ConvexBody::polytope_from_vertices(std::move(pts));
        }
        case ShiftedBox: return ConvexBody::box(std::abs(s) * radii).translate(s * shift);
        }
        throw ContractError("unreachable body kind");
    }
};

BodySpec random_body(std::mt19937_64& rng) {
    BodySpec b;
    b.kind = static_cast<BodySpec::Kind>(rng() % 4);
    switch (b.kind) {
    case BodySpec::Box:
        b.n = 2 + static_cast<int>(rng() % 3);
        b.radii = Vec(b.n);
        for (int i = 0; i < b.n; ++i) b.radii(i) = uniform(rng, 0.1, 5.0);
        break;
    case BodySpec::Ellipsoid: {
        b.n = 2 + static_cast<int>(rng() % 2);
        const Mat B = cube(rng, b.n * b.n, 1.0).reshaped(b.n, b.n);
        b.Q = B.transpose() * B + 0.2 * Mat::Identity(b.n, b.n);
        b.center = Vec::Zero(b.n);
        if (rng() % 2) {
            // Off-centre, keeping the origin inside: c^T Q c <= 0.25.
            const Vec c = gaussian(rng, b.n);
            b.center = uniform(rng, 0.0, 0.5) * c / std::sqrt(c.dot(b.Q * c));
        }
        break;
    }
    case BodySpec::Polytope: {
        b.n = 2 + static_cast<int>(rng() % 2);
        for (int i = 0; i < 4 + 2 * b.n; ++i) b.points.push_back(cube(rng, b.n, 2.0));
        for (int i = 0; i < b.n; ++i) {
            Vec e = Vec::Zero(b.n);
            e(i) = 0.2;
            b.points.push_back(e);
            b.points.push_back(-e);
        }
        break;
    }
    case BodySpec::ShiftedBox:
        b.n = 2 + static_cast<int>(rng() % 3);
        b.radii = Vec(b.n);
        b.shift = Vec(b.n);
        for (int i = 0; i < b.n; ++i) {
            b.radii(i) = uniform(rng, 0.1, 5.0);
            b.shift(i) = uniform(rng, -0.5, 0.5) * b.radii(i);
        }
        break;
    }
    return b;
}

// A body containing spec.build(): extra hull points, larger radii or a dilation.
ConvexBody enlarge(const BodySpec& b, std::mt19937_64& rng) {
    switch (b.kind) {
    case BodySpec::Polytope: {
        std::vector<Vec> pts = b.points;
        for (int i = 0; i < 3; ++i) pts.push_back(cube(rng, b.n, 3.0));
        return ConvexBody::polytope_from_vertices(std::move(pts));
    }
    case BodySpec::Box: {
        Vec r = b.radii;
        for (int i = 0; i < b.n; ++i) r(i) += uniform(rng, 0.0, 1.0);
        return ConvexBody::box(r);
    }
    default: return b.build(uniform(rng, 1.0, 3.0));
    }
}

constexpr std::int64_t kPropertyTrials = 10000;
constexpr double kExactRel = 1e-10;

// Support-function homogeneity, subadditivity and the gauge / support pairing.
SuiteResult convex_suite(const SuiteOptions& o) {
    const auto per = parallel_map(static_cast<std::size_t>(kPropertyTrials), o.exec, [&](std::size_t t) {
        auto rng = item_rng(o.seed, t);
        const BodySpec spec = random_body(rng);
        const ConvexBody U = spec.build();
        const int n = U.dim();
        Tally tl;
        tl.trials = 1;
        const Vec u = gaussian(rng, n), v = gaussian(rng, n);
        const double s = uniform(rng, 0.01, 10.0);
        const double hu = U.support(u), hv = U.support(v);
        tl.check(std::abs(U.support(s * u) - s * hu), kExactRel * (1.0 + std::abs(s * hu)));
        tl.check(std::max(0.0, U.support(u + v) - hu - hv), kExactRel * (1.0 + std::abs(hu) + std::abs(hv)));
        const Vec p = cube(rng, n, 3.0);
        tl.check(std::max(0.0, p.dot(v) - U.gauge(p) * hv), kExactRel * (1.0 + p.norm() * v.norm()));
        return tl;
    });
    Tally all;
    for (const auto& t : per) all.merge(t);
    return finish("convex", all, {{"checks", 3.0 * static_cast<double>(kPropertyTrials)}});
}

// Capacity monotonicity under nesting, scaling equivariance and central symmetry.
SuiteResult capacity_suite(const SuiteOptions& o) {
    CapacityOptions co;
    co.cross_check = false;
    const auto per = parallel_map(static_cast<std::size_t>(kPropertyTrials), o.exec, [&](std::size_t t) {
        auto rng = item_rng(o.seed, t);
        const BodySpec spec = random_body(rng);
        const ConvexBody U = spec.build();
        const IntVec a = random_class(rng, U.dim(), 3);
        Tally tl;
        tl.trials = 1;
        const double c = *bps_capacity(U, a, co).value;
        const double big = *bps_capacity(enlarge(spec, rng), a, co).value;
        tl.check(std::max(0.0, c - big), kExactRel * (1.0 + std::abs(c)));
        const double s = uniform(rng, 0.1, 10.0);
        const double cs = *bps_capacity(spec.build(s), a, co).value;
        tl.check(std::abs(cs - s * c), kExactRel * (1.0 + std::abs(s * c)));
        const IntVec ma = -a;
        const double reflected = *bps_capacity(spec.build(-1.0), ma, co).value;
        tl.check(std::abs(reflected - c), kExactRel * (1.0 + std::abs(c)));
        if (spec.centrally_symmetric()) {
            const double cm = *bps_capacity(U, ma, co).value;
            tl.check(std::abs(cm - c), kExactRel * (1.0 + std::abs(c)));
        }
        return tl;
    });
    Tally all;
    for (const auto& t : per) all.merge(t);
    return finish("capacity", all, {});
}

FinslerMetric riemannian_metric() {
    const Mat Q = (Mat(2, 2) << 2.0, 0.3, 0.3, 0.7).finished();
    return FinslerMetric(ConvexBody::ellipsoid(Q), FourierField(2, {{i2(1, 0), 0.15, 0.0}, {i2(0, 1), 0.0, 0.1}}));
}

FinslerMetric randers_metric() {
    const Mat Q = (Mat(2, 2) << 1.5, 0.4, 0.4, 0.8).finished();
    return FinslerMetric(ConvexBody::ellipsoid(Q, v2(0.25, -0.15)),
                         FourierField(2, {{i2(1, 0), 0.1, 0.05}, {i2(1, 1), 0.0, -0.08}}));
}

// Legendre round trip and F*(l(v)) = F(v) at 1e3 samples per metric.
SuiteResult legendre_suite(const SuiteOptions& o) {
    constexpr int kSamples = 1000;
    constexpr double kTol = 1e-8;
    const std::vector<std::pair<std::string, FinslerMetric>> metrics{{"riemannian", riemannian_metric()},
                                                                     {"randers", randers_metric()}};
    Tally all;
    std::vector<std::pair<std::string, double>> out;
    for (std::size_t m = 0; m < metrics.size(); ++m) {
        const FinslerMetric& F = metrics[m].second;
        const auto per = parallel_map(kSamples, o.exec, [&](std::size_t i) {
            auto rng = item_rng(o.seed + 7919 * (m + 1), i);
            const Vec x = cube(rng, 2, 1.0);
            const Vec v = std::exp(uniform(rng, -3.0, 3.0)) * gaussian(rng, 2).normalized();
            const Vec p = F.legendre(x, v);
            const double fv = F.eval(x, v);
            return std::make_pair((F.legendre_inverse(x, p) - v).norm() / (1.0 + v.norm()),
                                  std::abs(F.co_metric(x, p) - fv) / (1.0 + fv));
        });
        Tally tl;
        double round = 0.0, dual = 0.0;
        for (const auto& [r, d] : per) {
            ++tl.trials;
            tl.check(std::max(r, d), kTol);
            round = std::max(round, r);
            dual = std::max(dual, d);
        }
        out.emplace_back(metrics[m].first + ".round_trip", round);
        out.emplace_back(metrics[m].first + ".dual_norm", dual);
        all.merge(tl);
    }
    return finish("legendre", all, out);
}

// Quadratic modification at 1e5 samples for eta in {1, 0.1, 0.01}.
SuiteResult modification_suite(const SuiteOptions& o) {
    Tally all;
    std::vector<std::pair<std::string, double>> out;
    const FinslerMetric F = randers_metric();
    const double etas[] = {1.0, 0.1, 0.01};
    for (int k = 0; k < 3; ++k) {
        const ModifiedLagrangian L(F, etas[k]);
        const ModificationCheck chk;
        const auto r = verify_modification(L, chk, o.seed + static_cast<std::uint64_t>(k), o.exec);
        all.trials += r.samples;
        all.violations += r.sandwich_violations + r.equality_violations + r.dual_violations;
        if (!(r.min_hessian_eig > 0.0)) ++all.violations;
        all.max_ratio = std::max({all.max_ratio, r.max_sandwich_excess / chk.sandwich_tol,
                                  r.max_equality_error / chk.equality_tol, r.max_dual_rel_error / chk.dual_rel_tol});
        const std::string tag = k == 0 ? "eta=1" : k == 1 ? "eta=0.1" : "eta=0.01";
        out.emplace_back(tag + ".max_sandwich_excess", r.max_sandwich_excess);
        out.emplace_back(tag + ".max_equality_error", r.max_equality_error);
        out.emplace_back(tag + ".min_hessian_eig", r.min_hessian_eig);
        out.emplace_back(tag + ".max_dual_rel_error", r.max_dual_rel_error);
    }
    return finish("modification", all, out);
}

// Flat metrics with random ellipsoid fibers recover h_U(alpha) from randomized
// initial loops at N = 256; a conformal factor of amplitude 0.2 passes the
// N = 256 / 1024 comparison. Polytopal fibers are covered by the closed form.
SuiteResult geodesic_suite(const SuiteOptions& o) {
    constexpr int kCases = 30;
    const auto per = parallel_map(kCases, o.exec, [&](std::size_t t) {
        auto rng = item_rng(o.seed + 104729, t);
        BodySpec spec;
        do spec = random_body(rng);
        while (spec.kind != BodySpec::Ellipsoid);
        const FinslerMetric F(spec.build());
        const IntVec a = random_class(rng, F.dim(), 2);
        GeodesicOptions g;
        g.N = 256;
        g.exec = Exec::Serial;
        const auto r = minimize_energy(F, a, g, initial_loop(a, g.N, o.seed, t + 1, g.jitter));
        const double h = F.body().support(to_real(a));
        return std::make_tuple(std::abs(r.length - h) / std::max(1.0, h), r.speed_variance, r.converged);
    });
    Tally tl;
    double worst_len = 0.0, worst_var = 0.0;
    int converged = 0;
    for (const auto& [err, var, conv] : per) {
        ++tl.trials;
        tl.check(err, 1e-4);
        tl.check(var, 1e-6);
        worst_len = std::max(worst_len, err);
        worst_var = std::max(worst_var, var);
        converged += conv ? 1 : 0;
    }

    const FinslerMetric C(ConvexBody::ball(2, 1.0), FourierField(2, {{i2(0, 1), 0.2, 0.0}}));
    GeodesicOptions g;
    g.multistart = 8;
    g.seed = o.seed;
    g.exec = o.exec;
    g.N = 256;
    const double coarse = minimal_length(C, i2(1, 0), g).value;
    g.N = 1024;
    const double fine = minimal_length(C, i2(1, 0), g).value;
    ++tl.trials;
    const double refine = std::abs(coarse - fine) / fine;
    tl.check(refine, 1e-4);
    return finish("geodesic", tl,
                  {{"flat.max_length_error", worst_len},
                   {"flat.max_speed_variance", worst_var},
                   {"flat.converged", static_cast<double>(converged)},
                   {"conformal.length_256", coarse},
                   {"conformal.length_1024", fine},
                   {"conformal.refinement_error", refine}});
}

// Euclidean torus, f(r) = r^2, class (1, 0): analytic orbit against the integrator.
SuiteResult radial_suite(const SuiteOptions&) {
    const RadialSystem sys{FinslerMetric(ConvexBody::ball(2, 1.0)), RadialProfile::quadratic(1.0)};
    const PeriodicOrbit orbit = radial_orbit(sys, i2(1, 0), Vec::Zero(2));
    const HamiltonianSystem H = radial_hamiltonian(sys);
    IntegratorOptions io;
    io.dt = 1e-3;
    io.scheme = Scheme::Midpoint;
    const Trajectory tr = integrate(H, orbit.samples.col(0), 1.0, io, co_metric_squared(sys.metric));
    Vec shift = Vec::Zero(4);
    shift(0) = 1.0;
    const double closure = (tr.z.col(tr.z.cols() - 1) - orbit.samples.col(0) - shift).cwiseAbs().maxCoeff();
    PeriodicOrbit numeric = orbit;
    numeric.samples = tr.z;
    const double act = action(H, numeric);
    Tally tl;
    tl.trials = 1;
    tl.check(std::abs(radial_orbit_radius(sys, i2(1, 0)) - 0.5), 1e-12);
    tl.check(closure, 1e-9);
    tl.check(std::abs(act - 0.25), 1e-8);
    tl.check(tr.max_drift, 1e-8);
    return finish("radial", tl,
                  {{"radius", radial_orbit_radius(sys, i2(1, 0))},
                   {"closure_residual", closure},
                   {"action", act},
                   {"action_error", std::abs(act - 0.25)},
                   {"max_drift", tr.max_drift}});
}

// J^T Omega J = Omega for the cat map, closed shift maps and radial time-one maps.
SuiteResult symplectic_suite(const SuiteOptions& o) {
    Tally tl;
    std::vector<std::pair<std::string, double>> out;
    const auto cat = cat_map((Mat(2, 2) << 2, 1, 1, 1).finished()).certify(100, o.seed);
    ++tl.trials;
    tl.check(cat.residual, 1e-8);
    out.emplace_back("cat_map.residual", cat.residual);

    const FourierField S(2, {{i2(1, 0), 0.3, 0.1}, {i2(1, 2), 0.0, 0.2}});
    OneForm dS = OneForm::differential(S);
    std::vector<FourierField> comps = dS.components();
    comps[0] = FourierField(2, [&] {
        auto terms = comps[0].terms();
        terms.push_back({IntVec::Zero(2), 0.7, 0.0});
        return terms;
    }());
    const auto closed = shift_by_one_form(OneForm(comps)).certify(100, o.seed);
    ++tl.trials;
    if (!closed.certified) ++tl.violations;
    tl.check(closed.residual, 1e-8);
    out.emplace_back("closed_shift.residual", closed.residual);

    const OneForm twisted(std::vector<FourierField>{FourierField(2, {{i2(0, 1), 0.2, 0.0}}), FourierField(2, {})});
    const auto open = shift_by_one_form(twisted).certify(20, o.seed);
    ++tl.trials;
    if (open.certified) ++tl.violations;
    out.emplace_back("non_closed_shift.certified", open.certified ? 1.0 : 0.0);

    const HamiltonianSystem H = radial_hamiltonian({randers_metric(), RadialProfile::quadratic(1.0)});
    IntegratorOptions io;
    io.dt = 1e-3;
    io.scheme = Scheme::Yoshida4;
    const auto res = parallel_map(8, o.exec, [&](std::size_t k) {
        auto rng = item_rng(o.seed + 15485863, k);
        Vec z(4);
        z << uniform(rng, 0, 1), uniform(rng, 0, 1), uniform(rng, -2, 2), uniform(rng, -2, 2);
        Mat J(4, 4);
        for (int j = 0; j < 4; ++j) {
            // The implicit stages are solved to ~1e-13, so a 1e-5 step keeps the
            // difference quotient accurate to ~1e-8.
            const double h = 1e-5 * std::max(1.0, std::abs(z(j)));
            Vec a = z, b = z;
            a(j) += h;
            b(j) -= h;
            J.col(j) = (flow_map(H, a, 0.0, 0.5, io) - flow_map(H, b, 0.0, 0.5, io)) / (2.0 * h);
        }
        return symplectic_residual(J) / std::max(1.0, J.squaredNorm());
    });
    double worst = 0.0;
    for (double r : res) {
        ++tl.trials;
        tl.check(r, 1e-6);
        worst = std::max(worst, r);
    }
    out.emplace_back("radial_flow.relative_residual", worst);
    return finish("symplectic", tl, out);
}

// Cat-map squeezing of the square [-1, 1]^2 into the slab of half-width 0.1.
SuiteResult squeeze_suite(const SuiteOptions&) {
    const Mat A = (Mat(2, 2) << 2, 1, 1, 1).finished();
    const auto s = squeeze_min_iterations(A, ConvexBody::box(v2(1, 1)), 0.1);
    const Mat M = A.inverse().transpose();
    std::vector<Vec> corners{v2(1, 1), v2(1, -1), v2(-1, 1), v2(-1, -1)};
    int n = 0;
    for (; n < 10000; ++n) {
        double m = 0.0;
        for (const auto& c : corners) m = std::max(m, std::abs(c.dot(s.direction)));
        if (m <= 0.1) break;
        for (auto& c : corners) c = M * c;
    }
    Tally tl;
    tl.trials = 1;
    if (!s.verified || s.iterations != n) ++tl.violations;
    tl.check(std::abs(s.iterations - s.predicted), 1.0);
    return finish("squeeze", tl,
                  {{"iterations", static_cast<double>(s.iterations)},
                   {"oracle_iterations", static_cast<double>(n)},
                   {"predicted", static_cast<double>(s.predicted)},
                   {"lambda", s.lambda}});
}

using SuiteFn = SuiteResult (*)(const SuiteOptions&);

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
    static const std::vector<std::pair<std::string, SuiteFn>> r{
        {"convex", convex_suite},         {"capacity", capacity_suite}, {"legendre", legendre_suite},
        {"modification", modification_suite}, {"geodesic", geodesic_suite}, {"radial", radial_suite},
        {"symplectic", symplectic_suite}, {"squeeze", squeeze_suite},
    };
    return r;
}

} // namespace

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& [k, f] : registry()) n.push_back(k);
        return n;
    }();
    return names;
}

SuiteResult run_suite(const std::string& name, const SuiteOptions& opts) {
    for (const auto& [k, f] : registry()) {
        if (k != name) continue;
        log_info("verify: running suite " + name);
        SuiteResult r = f(opts);
        log_info("verify: " + name + (r.passed ? " passed" : " FAILED") + " (" + std::to_string(r.violations) + " violations)");
        return r;
    }
    throw DomainError("verify: unknown suite \"" + name + "\"");
}

std::vector<SuiteResult> run_suites(const std::string& name, const SuiteOptions& opts) {
    std::vector<SuiteResult> out;
    if (name == "all") {
        for (const auto& n : suite_names()) out.push_back(run_suite(n, opts));
    } else {
        out.push_back(run_suite(name, opts));
    }
    return out;
}

} // namespace finslercaps
