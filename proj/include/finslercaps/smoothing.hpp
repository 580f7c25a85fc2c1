#pragma once

#include "finslercaps/finsler.hpp"
#include "finslercaps/parallel.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace finslercaps {

/// Value with first and second derivative.
struct Jet {
    double f = 0.0;
    double df = 0.0;
    double d2f = 0.0;
};

/// Constants of the quadratic modification
///   L_eta = (lambda(L0) + chi(|v|_x^2) - sigma - rho) / mu.
/// lambda vanishes on [0, eps], is mu s + sigma beyond the corner window
/// [eps, 2 s0 - eps] (s0 = -sigma / mu), and is C^2 convex. chi equals
/// kappa (s - delta) on [0, delta], rho on [eta / A, inf), and is C^2
/// concave in between.
struct ModificationParams {
    double eta = 0.0;
    double A = 1.0;
    double eps = 0.0;
    double delta = 0.0;
    double kappa = 0.0;
    double mu = 0.0;
    double sigma = 0.0;
    double rho = 0.0;
    /// Half width of the smoothed lambda corner.
    double corner_width = 0.0;
    /// Length of the chi transition interval [delta, eta / A].
    double transition = 0.0;
};

/// Deterministic schedule: delta = eta / (8A), eps = delta / 32,
/// kappa = 1 / eta, rho = kappa (eta / A - delta) / 2, mu from the
/// convexity margin of chi, sigma centring the lambda corner.
ModificationParams select_params(double eta, double A);

/// Names of the violated invariants (empty when all hold).
std::vector<std::string> check_invariants(const ModificationParams& p);
/// Throws ContractError listing the violations.
void require_invariants(const ModificationParams& p);

Jet lambda_profile(const ModificationParams& p, double s);
Jet chi_profile(const ModificationParams& p, double s);

/// Reference inner product |v|_x^2 = exp(2 phi(x)) a0 v^T G v with
/// |v|_x^2 <= L0(x, v) <= A |v|_x^2 and g_L0 >= exp(2 phi) a0 G.
struct ReferenceMetric {
    Mat G;
    double a0 = 1.0;
    double A = 1.0;
};

/// Builds G (Q^{-1} for ellipsoid fibers) and a0, A from the extreme
/// generalized eigenvalues of the fundamental tensor against G, sampled
/// over directions, with a relative safety margin.
ReferenceMetric reference_metric(const FinslerMetric& F, int directions = 2000, double margin = 1e-3);

class ModifiedLagrangian {
public:
    ModifiedLagrangian(FinslerMetric F, ModificationParams params, ReferenceMetric ref);
    /// Reference metric and schedule chosen automatically for eta.
    ModifiedLagrangian(FinslerMetric F, double eta);

    const FinslerMetric& metric() const { return F_; }
    const ModificationParams& params() const { return p_; }
    const ReferenceMetric& reference() const { return ref_; }

    double L0(const Vec& x, const Vec& v) const;
    double reference_sq(const Vec& x, const Vec& v) const;

    double value(const Vec& x, const Vec& v) const;
    Vec gradient(const Vec& x, const Vec& v) const;
    Mat hessian(const Vec& x, const Vec& v) const;

    /// L_eta(x, 0) = (-kappa delta - sigma - rho) / mu.
    double at_zero() const;

private:
    FinslerMetric F_;
    ModificationParams p_;
    ReferenceMetric ref_;
};

double modified_lagrangian(const ModifiedLagrangian& L, const Vec& x, const Vec& v);

/// Fiberwise convex Lagrangian given by oracles.
struct LagrangianOracle {
    std::function<double(const Vec&, const Vec&)> value;
    std::function<Vec(const Vec&, const Vec&)> gradient;
    std::function<Mat(const Vec&, const Vec&)> hessian;
};

/// 1/2 L_eta as an oracle.
LagrangianOracle half_of(const ModifiedLagrangian& L);

struct FenchelResult {
    double value = 0.0;
    Vec argmax;
    double residual = 0.0;
    int iterations = 0;
};

/// H(x, p) = max_v <p, v> - L(x, v) by damped Newton from `warm_start`.
/// Converges when |p - grad_v L(x, v)| < tol; NumericalFailure after max_iter.
FenchelResult fenchel_dual(const LagrangianOracle& L, const Vec& x, const Vec& p, const Vec& warm_start,
                           double tol = 1e-11, int max_iter = 100);

/// H_eta(x, p), the dual of 1/2 L_eta, warm-started at the Legendre inverse l*_x(p).
FenchelResult modified_hamiltonian(const ModifiedLagrangian& L, const Vec& x, const Vec& p);

struct ModificationReport {
    double eta = 0.0;
    std::int64_t samples = 0;
    std::int64_t sandwich_violations = 0;
    std::int64_t equality_violations = 0;
    std::int64_t dual_violations = 0;
    double max_sandwich_excess = 0.0;
    double max_equality_error = 0.0;
    double min_hessian_eig = 0.0;
    double max_hessian_norm = 0.0;
    double max_dual_rel_error = 0.0;
    std::int64_t dual_checked = 0;
    /// Histogram of min Hessian eigenvalues over log10 bins [edges[i], edges[i+1]).
    std::vector<double> hist_edges;
    std::vector<std::int64_t> hist_counts;

    bool ok() const { return sandwich_violations == 0 && equality_violations == 0 && dual_violations == 0 && min_hessian_eig > 0.0; }
};

struct ModificationCheck {
    std::int64_t samples = 100000;
    std::int64_t hessian_samples = 10000;
    std::int64_t dual_samples = 2000;
    double sandwich_tol = 1e-9;
    double equality_tol = 1e-12;
    double dual_rel_tol = 1e-6;
};

/// Samples (x, v) with L0 spread over [0, 4 eta] (denser near eps, delta and
/// eta / A) and checks the sandwich, the equality region, Hessian bounds and
/// the dual Hamiltonian outside F* >= sqrt(eta).
ModificationReport verify_modification(const ModifiedLagrangian& L, const ModificationCheck& check,
                                       std::uint64_t seed, Exec exec = Exec::Serial);

struct Linearization;

/// Radial profile f : [0, inf) -> R with C^2 access.
class RadialProfile {
public:
    struct Corner {
        double rho;
        double f;
    };

    /// Piecewise-linear graph through `corners` (first at rho = 0, strictly
    /// increasing), continued linearly beyond the last corner, with every
    /// interior corner smoothed over [rho_i - w, rho_i + w].
    static RadialProfile piecewise_linear(std::vector<Corner> corners, double smoothing);
    /// f(rho) = c rho^2 + offset.
    static RadialProfile quadratic(double c, double offset = 0.0);
    /// f(rho) = slope rho + intercept.
    static RadialProfile affine(double slope, double intercept);

    Jet eval(double rho) const;
    double value(double rho) const { return eval(rho).f; }
    double d1(double rho) const { return eval(rho).df; }
    double d2(double rho) const { return eval(rho).d2f; }

    /// Width of [0, eps_f) on which f is constant (0 when there is no plateau).
    double plateau() const;
    /// Slope for large rho.
    double terminal_slope() const;
    std::string describe() const;

    enum class Kind { PiecewiseLinear, Quadratic, Affine, Linearized };
    Kind kind() const;
    const std::vector<Corner>& corners() const;
    double smoothing() const;
    /// Coefficients (c, offset) or (slope, intercept).
    std::pair<double, double> coefficients() const;

private:
    struct Impl;
    explicit RadialProfile(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;

    friend Linearization linearize_profile(const RadialProfile& f, double lambda, double width);
};

struct Linearization {
    RadialProfile profile;
    double r;
};

/// First point r with f'(r) >= lambda (bisection), and the profile equal to
/// f on [0, r - w], the tangent line of slope lambda on [r + w, inf), with a
/// quintic blend in between (w defaults to min(0.05, r / 4) and w = 0 when r = 0).
Linearization linearize_profile(const RadialProfile& f, double lambda, double width = -1.0);

/// First rho >= 0 with f'(rho) >= lambda; DomainError when never attained.
double first_slope_point(const RadialProfile& f, double lambda);

/// c_{f, lambda} = r f'(r) - f(r) at the first slope-lambda point.
double action_bound(const RadialProfile& f, double lambda);

struct StepParams {
    /// True for the case a > c (nu_k, S_k); false for c >= a (mu_k, T_k).
    bool first_case = true;
    double nu = 0.0;
    double S = 0.0;
    double mu = 0.0;
    double mu_minus = 0.0;
    double mu_plus = 0.0;
    double mu_prime = 0.0;
    double T = 0.0;
};

/// Parameters of the k-th exhausting profile.
/// a > c: requires 0 < delta_k < 1/4 and c < m_k < (a + c) / 2; returns
///   nu_k = (a - c) / (2 delta_k), S_k = max((a - m_k) / (2 sqrt(delta_k)) - m_k, 0).
/// c >= a: requires 0 < delta_k < a / c and m_k > c (when given, m_k > 0);
///   mu_k = a / delta_k - c, which must avoid `spectrum`; mu_k^- / mu_k^+ are
///   the neighbouring spectrum values (0 / inf when absent), mu_k' = (mu_k^- + mu_k) / 2
///   and T_k = min(mu_k' - a, 0).
StepParams exhausting_step_params(double a, double c, double delta_k, double m_k,
                                  const std::vector<double>& spectrum = {});

} // namespace finslercaps
