#include "finslercaps/geodesics.hpp"

#include "finslercaps/errors.hpp"
#include "finslercaps/log.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace finslercaps {

namespace {

void require_class(const IntVec& alpha, int n, bool allow_trivial) {
    if (alpha.size() != n) throw DomainError("geodesics: winding dimension does not match the metric");
    if (!allow_trivial && alpha.isZero()) throw DomainError("geodesics: trivial class alpha = 0");
}

// Solves (a I + b C) z = r for every row of r, where C is the cyclic
// second-difference stencil [1, 0, ..., 0, 1] (Thomas + Sherman-Morrison).
Mat cyclic_solve(double a, double b, const Mat& r) {
    const int N = static_cast<int>(r.cols());
    // Tridiagonal part with corner correction: diag a, off b; perturbation u v^T
    // with u = (gamma, 0.., b), v = (1, 0.., b / gamma).
    const double gamma = -a;
    std::vector<double> diag(N, a);
    diag[0] -= gamma;
    diag[N - 1] -= b * b / gamma;
    std::vector<double> c(N), d(N);
    auto thomas = [&](const Eigen::RowVectorXd& rhs) {
        Eigen::RowVectorXd x(N);
        c[0] = b / diag[0];
        d[0] = rhs(0) / diag[0];
        for (int i = 1; i < N; ++i) {
            const double m = diag[i] - b * c[i - 1];
            c[i] = b / m;
            d[i] = (rhs(i) - b * d[i - 1]) / m;
        }
        x(N - 1) = d[N - 1];
        for (int i = N - 2; i >= 0; --i) x(i) = d[i] - c[i] * x(i + 1);
        return x;
    };
    Eigen::RowVectorXd u = Eigen::RowVectorXd::Zero(N);
    u(0) = gamma;
    u(N - 1) = b;
    const Eigen::RowVectorXd q = thomas(u);
    const double vq = q(0) + b / gamma * q(N - 1);
    Mat z(r.rows(), N);
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
        const Eigen::RowVectorXd y = thomas(r.row(i));
        const double vy = y(0) + b / gamma * y(N - 1);
        z.row(i) = y - (vy / (1.0 + vq)) * q;
    }
    return z;
}

struct EnergyEval {
    double energy;
    Mat grad;
};

EnergyEval energy_and_gradient(const FinslerMetric& F, const DiscreteLoop& loop, bool want_grad) {
    const int N = loop.size();
    const int n = loop.dim();
    const ConvexBody& U = F.body();
    const FourierField& phi = F.phi();
    const bool flat = F.flat();
    EnergyEval out{0.0, Mat()};
    if (want_grad) out.grad = Mat::Zero(n, N);
    double e = 0.0;
    for (int k = 0; k < N; ++k) {
        const Vec d = loop.chord(k);
        const double dn = d.norm();
        if (dn == 0.0) {
            if (!loop.winding().isZero()) throw DomainError("loop: degenerate (zero) chord");
            continue;
        }
        const double f = U.support(d);
        double c = 1.0;
        Vec gphi;
        if (!flat) {
            const Vec xb = loop.midpoint(k);
            c = std::exp(2.0 * phi.value(xb));
            if (want_grad) gphi = phi.gradient(xb);
        }
        e += c * f * f;
        if (!want_grad) continue;
        const Vec s = U.support_point(d);
        // d/dx_{k+1} and d/dx_k of (N/2) c f^2.
        Vec common = Vec::Zero(n);
        if (!flat) common = c * f * f * gphi;
        const Vec radial = 2.0 * c * f * s;
        const int kp = (k + 1) % N;
        out.grad.col(kp) += 0.5 * N * (common + radial);
        out.grad.col(k) += 0.5 * N * (common - radial);
    }
    out.energy = 0.5 * N * e;
    return out;
}

// True when some chord is (numerically) on the non-smooth locus of a polytopal
// fiber: the maximising vertex of <q, d> is not unique.
bool on_kink(const std::vector<Vec>& vertices, const DiscreteLoop& loop) {
    for (int k = 0; k < loop.size(); ++k) {
        const Vec d = loop.chord(k);
        double best = -INFINITY, second = -INFINITY;
        for (const auto& q : vertices) {
            const double t = q.dot(d);
            if (t > best) {
                second = best;
                best = t;
            } else if (t > second) {
                second = t;
            }
        }
        if (best - second <= 1e-6 * std::max(std::abs(best), d.norm())) return true;
    }
    return false;
}

double speed_variance(const FinslerMetric& F, const DiscreteLoop& loop) {
    const Vec s = loop_speeds(F, loop);
    const double m = s.mean();
    return (s.array() - m).square().mean();
}

GeodesicResult finish(const FinslerMetric& F, DiscreteLoop loop, double gnorm, int it, bool converged) {
    GeodesicResult r{std::move(loop)};
    r.grad_norm = gnorm;
    r.iterations = it;
    r.converged = converged;
    if (r.loop.winding().isZero()) {
        r.length = 0.0;
        r.energy = 0.0;
        return r;
    }
    r.length = loop_length(F, r.loop);
    r.energy = loop_energy(F, r.loop);
    r.speed_variance = speed_variance(F, r.loop);
    return r;
}

} // namespace

Mat energy_gradient(const FinslerMetric& F, const DiscreteLoop& loop) {
    return energy_and_gradient(F, loop, true).grad;
}

double geodesic_residual(const FinslerMetric& F, const DiscreteLoop& loop) {
    return energy_gradient(F, loop).cwiseAbs().maxCoeff();
}

DiscreteLoop initial_loop(const IntVec& alpha, int N, std::uint64_t seed, std::uint64_t index, double jitter) {
    const int n = static_cast<int>(alpha.size());
    if (index == 0) return DiscreteLoop::straight(alpha, N, Vec::Zero(n));
    auto rng = item_rng(seed, index);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Vec base(n);
    for (int j = 0; j < n; ++j) base(j) = unif(rng);
    DiscreteLoop loop = DiscreteLoop::straight(alpha, N, base);
    // Modes 1..3 with random phases and weights, scaled to max amplitude `jitter`.
    for (int j = 0; j < n; ++j) {
        Eigen::RowVectorXd bump = Eigen::RowVectorXd::Zero(N);
        for (int m = 1; m <= 3; ++m) {
            const double w = unif(rng) / m, ph = 2.0 * M_PI * unif(rng);
            for (int k = 0; k < N; ++k) bump(k) += w * std::sin(2.0 * M_PI * m * k / N + ph);
        }
        const double peak = bump.cwiseAbs().maxCoeff();
        if (peak > 0.0) loop.samples().row(j) += (jitter * unif(rng) / peak) * bump;
    }
    return loop;
}

GeodesicResult minimize_energy(const FinslerMetric& F, const IntVec& alpha, const GeodesicOptions& opts,
                               const std::optional<DiscreteLoop>& init) {
    const int n = F.dim();
    require_class(alpha, n, opts.allow_trivial);
    if (opts.N < 16) throw DomainError("geodesics: N must be at least 16");
    if (!(opts.tol > 0.0)) throw DomainError("geodesics: tolerance must be positive");
    DiscreteLoop loop = init ? *init : DiscreteLoop::straight(alpha, opts.N, Vec::Zero(n));
    if (loop.winding() != alpha) throw DomainError("geodesics: initial loop has a different winding");
    const int N = loop.size();

    if (alpha.isZero()) {
        // Constant loop at the mean point: zero length and energy.
        const Vec c = loop.samples().rowwise().mean();
        Mat s = c.replicate(1, N);
        return finish(F, DiscreteLoop(std::move(s), alpha), 0.0, 0, true);
    }

    const double a = 2.0 * N * N + 1.0, b = -static_cast<double>(N) * N;
    auto precondition = [&](const Mat& g) { return cyclic_solve(a, b, g); };

    EnergyEval cur = energy_and_gradient(F, loop, true);
    double gmax = cur.grad.cwiseAbs().maxCoeff();
    Mat z = precondition(cur.grad);
    double step = 1.0;
    // Stagnation: no relative energy decrease above 1e-14 over a window of
    // iterations (subgradient cycling on polytopal fibers).
    constexpr int kWindow = 2000;
    double window_energy = cur.energy;
    const std::vector<Vec> vertices = F.body().polytopal() ? F.body().vertices() : std::vector<Vec>{};
    bool kink = false;
    int it = 0;
    for (; it < opts.max_iter && gmax >= opts.tol; ++it) {
        if (it > 0 && it % kWindow == 0) {
            if (window_energy - cur.energy <= 1e-14 * std::abs(window_energy)) break;
            window_energy = cur.energy;
        }
        if (!vertices.empty() && it >= 500 && it % 100 == 0 && on_kink(vertices, loop)) {
            kink = true;
            break;
        }
        const double slope = -(cur.grad.array() * z.array()).sum();
        if (!(slope < 0.0)) break;
        const double slack = 1e-13 * (1.0 + std::abs(cur.energy));
        DiscreteLoop trial = loop;
        EnergyEval next;
        bool accepted = false;
        double t = step;
        for (int bt = 0; bt < 60; ++bt, t *= 0.5) {
            trial.samples() = loop.samples() - t * z;
            try {
                next = energy_and_gradient(F, trial, true);
            } catch (const DomainError&) {
                continue;
            }
            if (next.energy <= cur.energy + 1e-4 * t * slope + slack) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        const Mat s = trial.samples() - loop.samples();
        const Mat y = next.grad - cur.grad;
        loop = std::move(trial);
        cur = std::move(next);
        gmax = cur.grad.cwiseAbs().maxCoeff();
        z = precondition(cur.grad);
        // BB2 step in the preconditioned metric: <s, y> / <y, P^{-1} y>.
        const double sy = (s.array() * y.array()).sum();
        const double yPy = (y.array() * precondition(y).array()).sum();
        step = (sy > 0.0 && yPy > 0.0) ? sy / yPy : std::min(1.0, 2.0 * t);
    }
    const bool converged = gmax < opts.tol;
    log_debug("minimize_energy: N=" + std::to_string(N) + " iterations=" + std::to_string(it) +
              " |grad|=" + std::to_string(gmax));
    GeodesicResult res = finish(F, std::move(loop), gmax, it, converged);
    res.hit_nonsmooth = kink;
    return res;
}

MinimalLength minimal_length(const FinslerMetric& F, const IntVec& alpha, const GeodesicOptions& opts) {
    require_class(alpha, F.dim(), false);
    const int runs = std::max(1, opts.multistart);
    auto results = parallel_map(static_cast<std::size_t>(runs), opts.exec, [&](std::size_t i) {
        return minimize_energy(F, alpha, opts, initial_loop(alpha, opts.N, opts.seed, i, opts.jitter));
    });
    int best = -1, converged = 0;
    for (int i = 0; i < runs; ++i) {
        if (!results[i].converged) continue;
        ++converged;
        if (best < 0 || results[i].length < results[best].length) best = i;
    }
    if (best < 0) {
        std::ostringstream d;
        d << runs << " runs, best gradient norm ";
        double g = INFINITY;
        for (const auto& r : results) g = std::min(g, r.grad_norm);
        d << g;
        throw NumericalFailure("minimal_length: no multistart run converged", d.str());
    }
    MinimalLength out{results[best].length, results[best], results[best].length, converged, false};
    if (F.flat()) {
        out.closed_form = true;
        out.value = F.body().support(to_real(alpha));
        if (std::abs(out.optimizer_value - out.value) > 1e-4 * std::max(1.0, out.value)) {
            std::ostringstream d;
            d << "closed form " << out.value << ", optimizer " << out.optimizer_value;
            throw NumericalFailure("minimal_length: optimizer disagrees with the closed form", d.str());
        }
    }
    return out;
}

SpectrumSample spectrum_sample(const FinslerMetric& F, const IntVec& alpha, int budget, const GeodesicOptions& opts,
                               double dl) {
    require_class(alpha, F.dim(), false);
    if (budget < 1) throw DomainError("spectrum_sample: budget must be positive");
    auto results = parallel_map(static_cast<std::size_t>(budget), opts.exec, [&](std::size_t i) {
        return minimize_energy(F, alpha, opts, initial_loop(alpha, opts.N, opts.seed, i, opts.jitter));
    });
    SpectrumSample out;
    out.budget = budget;
    std::vector<double> lens;
    for (const auto& r : results)
        if (r.converged) lens.push_back(r.length);
    out.converged = static_cast<int>(lens.size());
    if (lens.empty()) log_warn("spectrum_sample: no converged runs");
    std::sort(lens.begin(), lens.end());
    for (double l : lens) {
        if (!out.lengths.empty() && l - out.lengths.back() <= dl) {
            ++out.multiplicity.back();
            continue;
        }
        out.lengths.push_back(l);
        out.multiplicity.push_back(1);
    }
    return out;
}

} // namespace finslercaps
