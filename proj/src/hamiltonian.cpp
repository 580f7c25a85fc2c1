#include "finslercaps/hamiltonian.hpp"

#include "finslercaps/errors.hpp"
#include "finslercaps/log.hpp"
#include "finslercaps/smoothstep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace finslercaps {

namespace {

constexpr double kFdStep = 1e-6;

Vec stack(const Vec& x, const Vec& p) {
    Vec z(x.size() + p.size());
    z << x, p;
    return z;
}

Mat standard_form(int n) {
    Mat O = Mat::Zero(2 * n, 2 * n);
    O.topRightCorner(n, n) = Mat::Identity(n, n);
    O.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
    return O;
}

double wrap_distance(double a, double b) {
    double d = std::abs(a - b);
    d -= std::floor(d);
    return std::min(d, 1.0 - d);
}

} // namespace

// HamiltonianSystem --------------------------------------------------------------

HamiltonianSystem::HamiltonianSystem(int dim, Value H, Gradient grad, bool autonomous)
    : dim_(dim), H_(std::move(H)), grad_(std::move(grad)), autonomous_(autonomous) {
    if (dim < 1) throw DomainError("HamiltonianSystem: dimension must be positive");
    if (!H_) throw DomainError("HamiltonianSystem: missing evaluator");
}

HamiltonianSystem HamiltonianSystem::with_support(ConvexBody body) const {
    if (body.dim() != dim_) throw DomainError("HamiltonianSystem: support body dimension mismatch");
    HamiltonianSystem out = *this;
    out.support_ = std::move(body);
    return out;
}

double HamiltonianSystem::value(double t, const Vec& x, const Vec& p) const { return H_(t, x, p); }

double HamiltonianSystem::value(double t, const Vec& z) const {
    return H_(t, z.head(dim_), z.tail(dim_));
}

void HamiltonianSystem::gradient(double t, const Vec& x, const Vec& p, Vec& dx, Vec& dp) const {
    if (grad_) {
        grad_(t, x, p, dx, dp);
        return;
    }
    dx.resize(dim_);
    dp.resize(dim_);
    Vec a = x, b = p;
    for (int i = 0; i < dim_; ++i) {
        const double h = kFdStep * std::max(1.0, std::abs(x(i)));
        a(i) = x(i) + h;
        const double up = H_(t, a, p);
        a(i) = x(i) - h;
        const double dn = H_(t, a, p);
        a(i) = x(i);
        dx(i) = (up - dn) / (2.0 * h);
    }
    for (int i = 0; i < dim_; ++i) {
        const double h = kFdStep * std::max(1.0, std::abs(p(i)));
        b(i) = p(i) + h;
        const double up = H_(t, x, b);
        b(i) = p(i) - h;
        const double dn = H_(t, x, b);
        b(i) = p(i);
        dp(i) = (up - dn) / (2.0 * h);
    }
}

Vec HamiltonianSystem::field(double t, const Vec& z) const {
    Vec dx, dp;
    gradient(t, z.head(dim_), z.tail(dim_), dx, dp);
    return stack(dp, -dx);
}

double HamiltonianSystem::gradient_check(int probes, std::uint64_t seed, double p_scale) const {
    double worst = 0.0;
    for (int k = 0; k < probes; ++k) {
        auto rng = item_rng(seed, static_cast<std::uint64_t>(k));
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        Vec x(dim_), p(dim_), dx0(dim_), dp0(dim_);
        for (int i = 0; i < dim_; ++i) {
            x(i) = 0.5 * (u(rng) + 1.0);
            p(i) = p_scale * u(rng);
            dx0(i) = u(rng);
            dp0(i) = u(rng);
        }
        const double t = 0.5 * (u(rng) + 1.0);
        const double norm = std::sqrt(dx0.squaredNorm() + dp0.squaredNorm());
        dx0 /= norm;
        dp0 /= norm;
        Vec gx, gp;
        gradient(t, x, p, gx, gp);
        const double exact = gx.dot(dx0) + gp.dot(dp0);
        const double h = 1e-5;
        const double fd = (H_(t, x + h * dx0, p + h * dp0) - H_(t, x - h * dx0, p - h * dp0)) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - exact) / std::max(1.0, std::abs(exact)));
    }
    return worst;
}

HamiltonianSystem reversed(const HamiltonianSystem& H) {
    HamiltonianSystem::Gradient g = [H](double t, const Vec& x, const Vec& p, Vec& dx, Vec& dp) {
        H.gradient(-t, x, p, dx, dp);
        dx = -dx;
        dp = -dp;
    };
    return HamiltonianSystem(
        H.dim(), [H](double t, const Vec& x, const Vec& p) { return -H.value(-t, x, p); }, g, H.autonomous());
}

HamiltonianSystem rescaled(const HamiltonianSystem& H, double tau) {
    HamiltonianSystem::Gradient g = [H, tau](double s, const Vec& x, const Vec& p, Vec& dx, Vec& dp) {
        H.gradient(tau * s, x, p, dx, dp);
        dx *= tau;
        dp *= tau;
    };
    return HamiltonianSystem(
        H.dim(), [H, tau](double s, const Vec& x, const Vec& p) { return tau * H.value(tau * s, x, p); }, g,
        H.autonomous());
}

// Integration ---------------------------------------------------------------------

namespace {

// One implicit midpoint step, z1 = z0 + h X(t + h/2, (z0 + z1)/2), solved by
// fixed-point iteration; on failure the step is split in two (recursively).
Vec midpoint_step(const HamiltonianSystem& H, const Vec& z0, double t, double h, const IntegratorOptions& o,
                  int depth, int& halvings) {
    const double th = t + 0.5 * h;
    Vec z1 = z0 + h * H.field(th, z0);
    for (int it = 0; it < o.max_fixed_point; ++it) {
        Vec next = z0 + h * H.field(th, 0.5 * (z0 + z1));
        const double diff = (next - z1).cwiseAbs().maxCoeff();
        z1 = std::move(next);
        if (!z1.allFinite()) break;
        if (diff <= o.fixed_point_tol * (1.0 + z1.cwiseAbs().maxCoeff())) return z1;
    }
    if (depth >= o.max_halvings) {
        std::ostringstream d;
        d << "t = " << t << ", h = " << h;
        throw NumericalFailure("integrate: implicit midpoint iteration did not converge", d.str());
    }
    halvings = std::max(halvings, depth + 1);
    const Vec zm = midpoint_step(H, z0, t, 0.5 * h, o, depth + 1, halvings);
    return midpoint_step(H, zm, t + 0.5 * h, 0.5 * h, o, depth + 1, halvings);
}

Vec step(const HamiltonianSystem& H, const Vec& z, double t, double h, const IntegratorOptions& o, int& halvings) {
    if (o.scheme == Scheme::Midpoint) return midpoint_step(H, z, t, h, o, 0, halvings);
    const double c = std::cbrt(2.0);
    const double w1 = 1.0 / (2.0 - c), w0 = -c / (2.0 - c);
    Vec a = midpoint_step(H, z, t, w1 * h, o, 0, halvings);
    Vec b = midpoint_step(H, a, t + w1 * h, w0 * h, o, 0, halvings);
    return midpoint_step(H, b, t + (w1 + w0) * h, w1 * h, o, 0, halvings);
}

int step_count(double T, double dt) {
    if (!(dt > 0.0) || dt > 1e-2) throw DomainError("integrate: dt must lie in (0, 1e-2]");
    if (!std::isfinite(T)) throw DomainError("integrate: duration must be finite");
    return std::max(1, static_cast<int>(std::ceil(std::abs(T) / dt - 1e-9)));
}

} // namespace

Trajectory integrate(const HamiltonianSystem& H, const Vec& z0, double T, const IntegratorOptions& opts,
                     const Monitor& monitor, double t0) {
    const int n = H.dim();
    if (z0.size() != 2 * n) throw DomainError("integrate: state dimension mismatch");
    const int steps = step_count(T, opts.dt);
    const double h = T / steps;
    Trajectory tr;
    tr.t.resize(steps + 1);
    tr.z.resize(2 * n, steps + 1);
    tr.energy.resize(steps + 1);
    tr.monitor.resize(steps + 1);
    Vec z = z0;
    auto record = [&](int k, double t) {
        tr.t[k] = t;
        tr.z.col(k) = z;
        tr.energy(k) = H.value(t, z);
        tr.monitor(k) = monitor ? monitor(z.head(n), z.tail(n)) : tr.energy(k);
    };
    record(0, t0);
    for (int k = 0; k < steps; ++k) {
        const double t = t0 + k * h;
        z = step(H, z, t, h, opts, tr.halvings);
        record(k + 1, t0 + (k + 1) * h);
    }
    tr.max_drift = (tr.monitor.array() - tr.monitor(0)).abs().maxCoeff();
    tr.drift_rate = T != 0.0 ? tr.max_drift / std::abs(T) : 0.0;
    if (tr.halvings > 0) log_debug("integrate: step halvings used (depth " + std::to_string(tr.halvings) + ")");
    return tr;
}

Vec flow_map(const HamiltonianSystem& H, const Vec& z0, double t0, double T, const IntegratorOptions& opts) {
    if (z0.size() != 2 * H.dim()) throw DomainError("flow_map: state dimension mismatch");
    const int steps = step_count(T, opts.dt);
    const double h = T / steps;
    Vec z = z0;
    int halvings = 0;
    for (int k = 0; k < steps; ++k) z = step(H, z, t0 + k * h, h, opts, halvings);
    return z;
}

double symplectic_residual(const Mat& J) {
    const int n = static_cast<int>(J.rows() / 2);
    const Mat O = standard_form(n);
    return (J.transpose() * O * J - O).cwiseAbs().maxCoeff();
}

// Radial systems -------------------------------------------------------------------

namespace {

void radial_gradient(const RadialSystem& sys, const Vec& x, const Vec& y, Vec& dx, Vec& dy) {
    const int n = static_cast<int>(x.size());
    dx = Vec::Zero(n);
    dy = Vec::Zero(n);
    if (y.norm() == 0.0) return;
    const FinslerMetric& F = sys.metric;
    const double gy = F.body().gauge(y);
    const double ephi = F.conformal(x);
    const double r = gy / ephi;
    if (r < sys.f.plateau()) return;
    const double fp = sys.f.d1(r);
    if (fp == 0.0) return;
    dy = (fp / ephi) * F.body().gauge_gradient(y);
    if (!F.phi().zero()) dx = (-fp * r) * F.phi().gradient(x);
}

} // namespace

PhaseVelocity radial_rhs(const RadialSystem& sys, const Vec& x, const Vec& y) {
    if (!sys.metric.smooth())
        throw UnsupportedRepresentation("radial_rhs: the fiber body is not smooth (" +
                                        sys.metric.body().kind_name() + ")");
    Vec dx, dy;
    radial_gradient(sys, x, y, dx, dy);
    return {dy, -dx};
}

HamiltonianSystem radial_hamiltonian(const RadialSystem& sys) {
    if (!sys.metric.smooth())
        throw UnsupportedRepresentation("radial_hamiltonian: the fiber body is not smooth (" +
                                        sys.metric.body().kind_name() + ")");
    HamiltonianSystem::Gradient g = [sys](double, const Vec& x, const Vec& p, Vec& dx, Vec& dp) {
        radial_gradient(sys, x, p, dx, dp);
    };
    HamiltonianSystem H(
        sys.metric.dim(),
        [sys](double, const Vec& x, const Vec& p) { return sys.f.value(sys.metric.co_metric(x, p)); }, g, true);
    return H.with_support(sys.metric.body());
}

Monitor co_metric_squared(const FinslerMetric& F) {
    return [F](const Vec& x, const Vec& p) {
        const double r = F.co_metric(x, p);
        return r * r;
    };
}

IntVec measured_winding(const Mat& samples) {
    const int n = static_cast<int>(samples.rows() / 2);
    const Vec d = samples.col(samples.cols() - 1).head(n) - samples.col(0).head(n);
    IntVec a(n);
    for (int i = 0; i < n; ++i) {
        const double r = std::round(d(i));
        if (std::abs(d(i) - r) > 1e-3) {
            std::ostringstream s;
            s << "displacement " << d.transpose();
            throw NumericalFailure("winding: lifted displacement is not close to an integer vector", s.str());
        }
        a(i) = static_cast<int>(r);
    }
    return a;
}

double action(const HamiltonianSystem& H, const PeriodicOrbit& orbit) {
    const int n = orbit.dim();
    const int K = orbit.size();
    if (K < 1) throw DomainError("action: orbit needs at least two samples");
    const double dt = orbit.period / K;
    double pairing = 0.0, energy = 0.0;
    for (int k = 0; k < K; ++k) {
        const Vec zm = 0.5 * (orbit.samples.col(k) + orbit.samples.col(k + 1));
        const Vec dx = orbit.samples.col(k + 1).head(n) - orbit.samples.col(k).head(n);
        pairing += zm.tail(n).dot(dx);
        energy += H.value((k + 0.5) * dt, zm);
    }
    return pairing - energy * dt;
}

PeriodicOrbit reverse_orbit(const PeriodicOrbit& orbit) {
    PeriodicOrbit r = orbit;
    r.samples = orbit.samples.rowwise().reverse();
    r.winding = -orbit.winding;
    if (orbit.energy.size() > 0) r.energy = orbit.energy.reverse();
    r.action = std::numeric_limits<double>::quiet_NaN();
    return r;
}

double radial_orbit_radius(const RadialSystem& sys, const IntVec& alpha) {
    if (!sys.metric.flat()) throw DomainError("radial_orbit: the analytic orbit needs a flat (Minkowski) metric");
    if (alpha.size() != sys.metric.dim()) throw DomainError("radial_orbit: class dimension mismatch");
    if (alpha.isZero()) throw DomainError("radial_orbit: class must be nonzero");
    const double Fa = sys.metric.body().support(to_real(alpha));
    double r = 0.0;
    try {
        r = first_slope_point(sys.f, Fa);
    } catch (const DomainError&) {
        throw DomainError("radial_orbit: no orbit in this class (f' never reaches F(alpha))");
    }
    if (r <= 0.0 || std::abs(sys.f.d1(r) - Fa) > 1e-9 * std::max(1.0, Fa))
        throw DomainError("radial_orbit: no orbit in this class (f' never equals F(alpha))");
    return r;
}

PeriodicOrbit radial_orbit(const RadialSystem& sys, const IntVec& alpha, const Vec& x0, int samples) {
    const double r = radial_orbit_radius(sys, alpha);
    if (samples < 1) throw DomainError("radial_orbit: samples must be positive");
    const int n = sys.metric.dim();
    const Vec a = to_real(alpha);
    // l(alpha) / F(alpha) is the maximising point of <., alpha> on the fiber.
    const Vec y = r * sys.metric.body().support_point(a);
    PeriodicOrbit o;
    o.period = 1.0;
    o.winding = alpha;
    o.samples.resize(2 * n, samples + 1);
    o.energy.resize(samples + 1);
    const double Hval = sys.f.value(r);
    for (int k = 0; k <= samples; ++k) {
        o.samples.col(k) = stack(x0 + (static_cast<double>(k) / samples) * a, y);
        o.energy(k) = Hval;
    }
    const Jet j = sys.f.eval(r);
    o.action = r * j.df - j.f;
    o.closure_residual = 0.0;
    return o;
}

// Shooting --------------------------------------------------------------------------

namespace {

struct LMResult {
    Vec u;
    double residual = INFINITY;
    int iterations = 0;
    bool converged = false;
};

using Residual = std::function<Vec(const Vec&)>;

Vec safe_eval(const Residual& r, const Vec& u, int m) {
    try {
        Vec v = r(u);
        if (v.allFinite()) return v;
    } catch (const NumericalFailure&) {
    }
    return Vec::Constant(m, INFINITY);
}

// Levenberg-Marquardt with a forward-difference Jacobian.
LMResult levenberg_marquardt(const Residual& res, Vec u, int m, double tol, int max_iter, double fd_step) {
    LMResult out;
    Vec r = safe_eval(res, u, m);
    double lambda = 1e-3;
    for (int it = 0; it < max_iter; ++it) {
        out.iterations = it;
        const double rn = r.cwiseAbs().maxCoeff();
        if (!std::isfinite(rn)) break;
        if (rn < tol) {
            out.converged = true;
            break;
        }
        const int k = static_cast<int>(u.size());
        Mat J(m, k);
        bool ok = true;
        for (int j = 0; j < k && ok; ++j) {
            Vec up = u;
            const double h = fd_step * std::max(1.0, std::abs(u(j)));
            up(j) += h;
            const Vec rp = safe_eval(res, up, m);
            if (!rp.allFinite()) ok = false;
            J.col(j) = (rp - r) / h;
        }
        if (!ok) break;
        const Mat JtJ = J.transpose() * J;
        const Vec g = J.transpose() * r;
        const Vec d = JtJ.diagonal().cwiseMax(1e-12 * std::max(1.0, JtJ.diagonal().maxCoeff()));
        bool improved = false;
        for (int tries = 0; tries < 30; ++tries) {
            Mat A = JtJ;
            A.diagonal() += lambda * d;
            const Vec delta = A.ldlt().solve(-g);
            const Vec un = u + delta;
            const Vec rn_vec = safe_eval(res, un, m);
            if (rn_vec.allFinite() && rn_vec.squaredNorm() < r.squaredNorm()) {
                u = un;
                r = rn_vec;
                lambda = std::max(lambda / 5.0, 1e-15);
                improved = true;
                break;
            }
            lambda *= 4.0;
        }
        if (!improved) break;
    }
    out.u = u;
    out.residual = r.cwiseAbs().maxCoeff();
    if (out.residual < tol) out.converged = true;
    return out;
}

// Integrates from z0 over [0, period-time 1] segment-wise with the same step
// grid as the shooting residual, recording every step.
Mat record_orbit(const HamiltonianSystem& H, const Vec& z0, int segments, const IntegratorOptions& io) {
    std::vector<Mat> parts;
    Vec z = z0;
    int total = 0;
    for (int j = 0; j < segments; ++j) {
        const double t0 = static_cast<double>(j) / segments;
        Trajectory tr = integrate(H, z, 1.0 / segments, io, {}, t0);
        z = tr.z.col(tr.z.cols() - 1);
        total += static_cast<int>(tr.z.cols()) - (j == 0 ? 0 : 1);
        parts.push_back(std::move(tr.z));
    }
    Mat out(z0.size(), total);
    int c = 0;
    for (std::size_t j = 0; j < parts.size(); ++j) {
        const int skip = j == 0 ? 0 : 1;
        const int cols = static_cast<int>(parts[j].cols()) - skip;
        out.middleCols(c, cols) = parts[j].rightCols(cols);
        c += cols;
    }
    return out;
}

Mat subsample(const Mat& s, int cap) {
    const int K = static_cast<int>(s.cols());
    if (K <= cap) return s;
    Mat out(s.rows(), cap);
    for (int i = 0; i < cap; ++i) out.col(i) = s.col(static_cast<int>(static_cast<long long>(i) * (K - 1) / (cap - 1)));
    return out;
}

double directed_hausdorff(const Mat& a, const Mat& b, int n) {
    double worst = 0.0;
    for (int i = 0; i < a.cols(); ++i) {
        double best = INFINITY;
        for (int j = 0; j < b.cols() && best > 0.0; ++j) {
            double d = 0.0;
            for (int c = 0; c < n; ++c) d = std::max(d, wrap_distance(a(c, i), b(c, j)));
            for (int c = n; c < 2 * n; ++c) d = std::max(d, std::abs(a(c, i) - b(c, j)));
            best = std::min(best, d);
        }
        worst = std::max(worst, best);
    }
    return worst;
}

std::vector<PeriodicOrbit> dedup_orbits(std::vector<PeriodicOrbit> found, double tol) {
    std::vector<PeriodicOrbit> out;
    for (auto& o : found) {
        bool dup = false;
        for (const auto& k : out)
            if (orbit_distance(o, k) < tol) {
                dup = true;
                break;
            }
        if (!dup) out.push_back(std::move(o));
    }
    return out;
}

} // namespace

double orbit_distance(const PeriodicOrbit& a, const PeriodicOrbit& b) {
    if (a.dim() != b.dim()) throw DomainError("orbit_distance: dimension mismatch");
    const Mat sa = subsample(a.samples, 256), sb = subsample(b.samples, 256);
    return std::max(directed_hausdorff(sa, sb, a.dim()), directed_hausdorff(sb, sa, a.dim()));
}

std::vector<PeriodicOrbit> find_periodic_orbit(const HamiltonianSystem& H, const IntVec& alpha,
                                               const std::vector<Vec>& seeds, const ShootingOptions& opts) {
    const int n = H.dim();
    if (alpha.size() != n) throw DomainError("find_periodic_orbit: class dimension mismatch");
    if (opts.segments < 1) throw DomainError("find_periodic_orbit: segments must be positive");
    if (!(opts.tol > 0.0)) throw DomainError("find_periodic_orbit: tolerance must be positive");
    const int M = opts.segments, d = 2 * n;
    Vec shift = Vec::Zero(d);
    shift.head(n) = to_real(alpha);

    auto residual = [&](const Vec& u) {
        Vec r(M * d);
        for (int j = 0; j < M; ++j) {
            const Vec zj = u.segment(j * d, d);
            const Vec end = flow_map(H, zj, static_cast<double>(j) / M, 1.0 / M, opts.integrator);
            const Vec target = j + 1 < M ? Vec(u.segment((j + 1) * d, d)) : Vec(u.head(d) + shift);
            r.segment(j * d, d) = end - target;
        }
        return r;
    };

    auto attempt = [&](std::size_t s) -> std::optional<PeriodicOrbit> {
        const Vec& seed = seeds[s];
        if (seed.size() != d) throw DomainError("find_periodic_orbit: seed dimension mismatch");
        Vec u(M * d);
        for (int j = 0; j < M; ++j) {
            Vec zj = seed;
            zj.head(n) += (static_cast<double>(j) / M) * to_real(alpha);
            u.segment(j * d, d) = zj;
        }
        const LMResult lm = levenberg_marquardt(residual, u, M * d, opts.tol, opts.max_iter, opts.fd_step);
        if (!lm.converged) return std::nullopt;
        PeriodicOrbit o;
        try {
            o.samples = record_orbit(H, lm.u.head(d), M, opts.integrator);
            o.winding = measured_winding(o.samples);
        } catch (const NumericalFailure&) {
            return std::nullopt;
        }
        const Vec end = o.samples.col(o.samples.cols() - 1);
        o.closure_residual = (end - o.samples.col(0) - shift).cwiseAbs().maxCoeff();
        if (!(o.closure_residual < opts.tol) || o.winding != alpha) return std::nullopt;
        o.period = 1.0;
        o.energy.resize(o.samples.cols());
        const double dt = 1.0 / (o.samples.cols() - 1);
        for (int k = 0; k < o.samples.cols(); ++k) o.energy(k) = H.value(k * dt, o.samples.col(k));
        o.action = action(H, o);
        return o;
    };

    auto results = parallel_map(seeds.size(), opts.exec, attempt);
    std::vector<PeriodicOrbit> found;
    for (auto& r : results)
        if (r) found.push_back(std::move(*r));
    log_info("find_periodic_orbit: " + std::to_string(found.size()) + " of " + std::to_string(seeds.size()) +
             " seeds converged");
    return dedup_orbits(std::move(found), opts.dedup);
}

// Shift and cat maps ---------------------------------------------------------------

ShiftMap::ShiftMap(OneForm sigma) : sigma_(std::move(sigma)) {
    if (sigma_.dim() < 1) throw DomainError("ShiftMap: empty one-form");
}

PhasePoint ShiftMap::apply(const Vec& x, const Vec& p) const { return {x, p - sigma_.value(x)}; }

PhasePoint ShiftMap::inverse(const Vec& x, const Vec& p) const { return {x, p + sigma_.value(x)}; }

Mat ShiftMap::jacobian(const Vec& x) const {
    const int n = dim();
    Mat J = Mat::Identity(2 * n, 2 * n);
    J.bottomLeftCorner(n, n) = -sigma_.jacobian(x);
    return J;
}

HamiltonianSystem ShiftMap::conjugate(const HamiltonianSystem& H) const {
    if (H.dim() != dim()) throw DomainError("ShiftMap: dimension mismatch");
    const OneForm s = sigma_;
    HamiltonianSystem::Value v = [H, s](double t, const Vec& x, const Vec& p) {
        return H.value(t, x, p + s.value(x));
    };
    HamiltonianSystem::Gradient g = [H, s](double t, const Vec& x, const Vec& p, Vec& dx, Vec& dp) {
        H.gradient(t, x, p + s.value(x), dx, dp);
        dx += s.jacobian(x).transpose() * dp;
    };
    return HamiltonianSystem(H.dim(), v, g, H.autonomous());
}

namespace {

// Central-difference Jacobian of a map R^{2n} -> R^{2n}.
template <class Map>
Mat fd_jacobian(const Map& f, const Vec& z) {
    const int d = static_cast<int>(z.size());
    Mat J(d, d);
    for (int j = 0; j < d; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(z(j)));
        Vec a = z, b = z;
        a(j) += h;
        b(j) -= h;
        J.col(j) = (f(a) - f(b)) / (2.0 * h);
    }
    return J;
}

template <class Map>
double max_symplectic_residual(const Map& f, int n, int probes, std::uint64_t seed) {
    double worst = 0.0;
    for (int k = 0; k < probes; ++k) {
        auto rng = item_rng(seed, static_cast<std::uint64_t>(k));
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        Vec z(2 * n);
        for (int i = 0; i < n; ++i) z(i) = 0.5 * (u(rng) + 1.0);
        for (int i = n; i < 2 * n; ++i) z(i) = 2.0 * u(rng);
        worst = std::max(worst, symplectic_residual(fd_jacobian(f, z)));
    }
    return worst;
}

} // namespace

SymplecticCertificate ShiftMap::certify(int probes, std::uint64_t seed) const {
    const int n = dim();
    auto f = [this, n](const Vec& z) {
        const PhasePoint q = apply(z.head(n), z.tail(n));
        return stack(q.x, q.p);
    };
    SymplecticCertificate c;
    c.residual = max_symplectic_residual(f, n, probes, seed);
    if (!closed()) {
        c.certified = false;
        c.note = "sigma is not closed: the map pulls the standard form back to the twisted form omega + pi^* d sigma";
        return c;
    }
    c.certified = c.residual < 1e-8;
    c.note = c.certified ? "J^T Omega J = Omega at all probes" : "Jacobian residual above 1e-8";
    return c;
}

ShiftMap shift_by_one_form(OneForm sigma) { return ShiftMap(std::move(sigma)); }

CatMap::CatMap(Mat A) : A_(std::move(A)) {
    if (A_.rows() != A_.cols() || A_.rows() < 1) throw DomainError("cat_map: matrix must be square");
    for (int i = 0; i < A_.rows(); ++i)
        for (int j = 0; j < A_.cols(); ++j)
            if (A_(i, j) != std::round(A_(i, j))) throw DomainError("cat_map: matrix must have integer entries");
    const double det = A_.determinant();
    if (std::abs(std::abs(det) - 1.0) > 1e-9) throw DomainError("cat_map: matrix must be unimodular (det = +-1)");
    AinvT_ = A_.inverse().transpose().array().round().matrix();
}

PhasePoint CatMap::apply(const Vec& x, const Vec& y) const {
    Vec ax = A_ * x;
    for (int i = 0; i < ax.size(); ++i) ax(i) -= std::floor(ax(i));
    return {ax, AinvT_ * y};
}

Mat CatMap::jacobian() const {
    const int n = dim();
    Mat J = Mat::Zero(2 * n, 2 * n);
    J.topLeftCorner(n, n) = A_;
    J.bottomRightCorner(n, n) = AinvT_;
    return J;
}

Vec CatMap::eigenvalues() const {
    Eigen::EigenSolver<Mat> es(A_);
    const auto ev = es.eigenvalues();
    Vec out(ev.size());
    for (int i = 0; i < ev.size(); ++i) {
        if (std::abs(ev(i).imag()) > 1e-12) throw DomainError("cat_map: complex eigenvalues");
        out(i) = ev(i).real();
    }
    std::sort(out.data(), out.data() + out.size());
    return out;
}

SymplecticCertificate CatMap::certify(int probes, std::uint64_t seed) const {
    const int n = dim();
    // Lifted map (no reduction mod Z^n) so differences stay continuous.
    auto f = [this, n](const Vec& z) { return stack(A_ * z.head(n), AinvT_ * z.tail(n)); };
    SymplecticCertificate c;
    c.residual = max_symplectic_residual(f, n, probes, seed);
    c.certified = c.residual < 1e-8;
    c.note = c.certified ? "J^T Omega J = Omega at all probes" : "Jacobian residual above 1e-8";
    return c;
}

CatMap cat_map(Mat A) { return CatMap(std::move(A)); }

// Lorentzian system ------------------------------------------------------------------

double field_max(const FourierField& V) {
    const int n = V.dim();
    if (n < 1 || V.zero()) return V.mean();
    const int g = n == 1 ? 1024 : n == 2 ? 128 : n == 3 ? 32 : 12;
    long long total = 1;
    for (int i = 0; i < n; ++i) total *= g;
    // Keep the best few grid points as starting points for refinement.
    std::vector<std::pair<double, Vec>> best;
    Vec x(n);
    for (long long idx = 0; idx < total; ++idx) {
        long long r = idx;
        for (int i = 0; i < n; ++i) {
            x(i) = static_cast<double>(r % g) / g;
            r /= g;
        }
        const double v = V.value(x);
        if (best.size() < 8 || v > best.back().first) {
            best.emplace_back(v, x);
            std::sort(best.begin(), best.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
            if (best.size() > 8) best.pop_back();
        }
    }
    double m = best.front().first;
    for (auto& [v0, x0] : best) {
        Vec y = x0;
        for (int it = 0; it < 50; ++it) {
            const Vec gr = V.gradient(y);
            if (gr.norm() < 1e-14) break;
            const Mat Hs = V.hessian(y);
            Eigen::SelfAdjointEigenSolver<Mat> es(Hs);
            Vec stepv;
            if (es.eigenvalues().maxCoeff() < 0.0) stepv = -Hs.ldlt().solve(gr);
            else stepv = 1e-3 * gr;
            const Vec yn = y + stepv;
            if (V.value(yn) < V.value(y)) break;
            y = yn;
        }
        m = std::max(m, V.value(y));
    }
    return m;
}

LorentzSystem lorentz_system(const FourierField& V) {
    const int n = V.dim();
    if (n < 2) throw DomainError("lorentz_system: dimension must be at least 2");
    const double shift = field_max(V);
    HamiltonianSystem::Value val = [V, shift](double, const Vec& q, const Vec& p) {
        return 0.5 * (p(0) * p(0) - p.tail(p.size() - 1).squaredNorm()) + V.value(q) - shift;
    };
    HamiltonianSystem::Gradient grad = [V](double, const Vec& q, const Vec& p, Vec& dq, Vec& dp) {
        dq = V.gradient(q);
        dp = -p;
        dp(0) = p(0);
    };
    return {V, shift, HamiltonianSystem(n, val, grad, true)};
}

bool in_lorentz_cone(const Vec& p) { return p(0) > p.tail(p.size() - 1).norm(); }

HamiltonianSystem lorentz_cutoff(const LorentzSystem& L, double a, double b, double c, double R) {
    if (!(a > 0.0) || !(b > a)) throw DomainError("lorentz_cutoff: requires 0 < a < b");
    if (!(c > 0.0)) throw DomainError("lorentz_cutoff: requires c > 0");
    if (!(R > 0.0)) throw DomainError("lorentz_cutoff: requires R > 0");
    const HamiltonianSystem H = L.H;
    HamiltonianSystem::Value G = [H, a, b, c, R](double t, const Vec& q, const Vec& p) {
        if (!in_lorentz_cone(p)) return 0.0;
        const double phi = Smoothstep::value((H.value(t, q, p) - a) / (b - a));
        if (phi == 0.0) return 0.0;
        const double psi = 1.0 - Smoothstep::value((p.norm() / R - 0.9) / 0.1);
        return c * phi * psi;
    };
    return HamiltonianSystem(H.dim(), G, {}, true);
}

std::pair<Vec, double> lorentz_free_orbit(const IntVec& alpha, double E) {
    const Vec a = to_real(alpha);
    const double q = a(0) * a(0) - a.tail(a.size() - 1).squaredNorm();
    if (!(a(0) > 0.0) || !(q > 0.0)) throw DomainError("lorentz: class outside the cone (needs alpha_1 > |alpha'|)");
    if (!(E > 0.0)) throw DomainError("lorentz: energy must be positive");
    const double T = std::sqrt(q / (2.0 * E));
    Vec p = a / T;
    p.tail(p.size() - 1) *= -1.0;
    return {p, T};
}

std::vector<LorentzLevel> lorentz_orbit_search(const LorentzSystem& L, const IntVec& alpha, double e_minus,
                                                double e_plus, const LorentzSearchOptions& opts) {
    const int n = L.H.dim();
    if (alpha.size() != n) throw DomainError("lorentz_orbit_search: class dimension mismatch");
    if (!in_lorentz_cone(to_real(alpha)))
        throw DomainError("lorentz_orbit_search: class outside the cone (needs alpha_1 > |alpha'|)");
    if (!(e_minus > 0.0) || !(e_plus > e_minus)) throw DomainError("lorentz_orbit_search: bad energy window");
    if (opts.levels < 1 || opts.steps < 100) throw DomainError("lorentz_orbit_search: bad grid");
    IntegratorOptions io;
    io.scheme = Scheme::Yoshida4;
    io.dt = 1.0 / opts.steps;
    const Vec a = to_real(alpha);

    auto level = [&](std::size_t j) {
        const double E = e_minus + (j + 0.5) * (e_plus - e_minus) / opts.levels;
        const Vec z_base = Vec::Zero(2 * n);
        // Unknowns (p_0, T); base point pinned at q = 0.
        auto residual = [&](const Vec& u) {
            const double T = u(n);
            if (!(T > 0.0)) throw NumericalFailure("lorentz: nonpositive period");
            Vec z0 = z_base;
            z0.tail(n) = u.head(n);
            const Vec end = flow_map(rescaled(L.H, T), z0, 0.0, 1.0, io);
            Vec r(2 * n + 1);
            r.head(n) = end.head(n) - a;
            r.segment(n, n) = end.tail(n) - u.head(n);
            r(2 * n) = L.H.value(0.0, z0) - E;
            return r;
        };
        const auto [p_free, T_free] = lorentz_free_orbit(alpha, E);
        std::vector<PeriodicOrbit> found;
        for (double s : {1.0, 0.8, 1.25, 0.6, 1.6}) {
            Vec u(n + 1);
            u.head(n) = p_free / s;
            u(n) = T_free * s;
            const LMResult lm = levenberg_marquardt(residual, u, 2 * n + 1, opts.tol, opts.max_iter, opts.fd_step);
            if (!lm.converged) continue;
            const double T = lm.u(n);
            Vec z0 = z_base;
            z0.tail(n) = lm.u.head(n);
            PeriodicOrbit o;
            try {
                Trajectory tr = integrate(rescaled(L.H, T), z0, 1.0, io);
                o.samples = std::move(tr.z);
                o.winding = measured_winding(o.samples);
            } catch (const NumericalFailure&) {
                continue;
            }
            o.period = T;
            Vec shift = Vec::Zero(2 * n);
            shift.head(n) = a;
            o.closure_residual = (o.samples.col(o.samples.cols() - 1) - z0 - shift).cwiseAbs().maxCoeff();
            if (!(o.closure_residual < opts.tol) || o.winding != alpha) continue;
            o.energy.resize(o.samples.cols());
            for (int k = 0; k < o.samples.cols(); ++k) o.energy(k) = L.H.value(0.0, o.samples.col(k));
            o.action = action(L.H, o);
            found.push_back(std::move(o));
        }
        return LorentzLevel{E, dedup_orbits(std::move(found), 1e-4)};
    };
    auto out = parallel_map(static_cast<std::size_t>(opts.levels), opts.exec, level);
    int hits = 0;
    for (const auto& l : out) hits += l.orbits.empty() ? 0 : 1;
    log_info("lorentz_orbit_search: orbits found on " + std::to_string(hits) + " of " + std::to_string(out.size()) +
             " levels");
    return out;
}

} // namespace finslercaps
