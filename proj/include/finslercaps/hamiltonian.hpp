#pragma once

#include "finslercaps/convex_body.hpp"
#include "finslercaps/finsler.hpp"
#include "finslercaps/fourier.hpp"
#include "finslercaps/parallel.hpp"
#include "finslercaps/smoothing.hpp"
#include "finslercaps/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace finslercaps {

/// H(t, x, p) on T*T^n with base point lifted to R^n. Phase-space states are
/// stacked as z = (x, p) in R^{2n}.
class HamiltonianSystem {
public:
    using Value = std::function<double(double, const Vec&, const Vec&)>;
    /// Writes dH/dx and dH/dp.
    using Gradient = std::function<void(double, const Vec&, const Vec&, Vec&, Vec&)>;

    /// Without `grad`, gradients use central differences with step 1e-6.
    HamiltonianSystem(int dim, Value H, Gradient grad = {}, bool autonomous = true);

    int dim() const { return dim_; }
    bool autonomous() const { return autonomous_; }
    bool analytic_gradient() const { return static_cast<bool>(grad_); }
    const std::optional<ConvexBody>& support() const { return support_; }
    HamiltonianSystem with_support(ConvexBody body) const;

    double value(double t, const Vec& x, const Vec& p) const;
    double value(double t, const Vec& z) const;
    void gradient(double t, const Vec& x, const Vec& p, Vec& dx, Vec& dp) const;
    /// X_H(z) = (dH/dp, -dH/dx).
    Vec field(double t, const Vec& z) const;

    /// Largest relative mismatch between the gradient and central differences
    /// of H along random directions at `probes` random points (|p| <= p_scale).
    double gradient_check(int probes, std::uint64_t seed, double p_scale = 2.0) const;

private:
    int dim_;
    Value H_;
    Gradient grad_;
    bool autonomous_;
    std::optional<ConvexBody> support_;
};

/// H'(t, z) = -H(-t, z): its orbits are the time reversals of the orbits of H.
HamiltonianSystem reversed(const HamiltonianSystem& H);
/// H'(s, z) = tau H(tau s, z): its time-1 flow is the time-tau flow of H.
HamiltonianSystem rescaled(const HamiltonianSystem& H, double tau);

enum class Scheme { Midpoint, Yoshida4 };

struct IntegratorOptions {
    double dt = 1e-3;
    /// Midpoint: implicit midpoint rule. Yoshida4: symmetric triple-jump
    /// composition of midpoint steps (order 4).
    Scheme scheme = Scheme::Midpoint;
    double fixed_point_tol = 1e-13;
    int max_fixed_point = 200;
    int max_halvings = 10;
};

struct Trajectory {
    std::vector<double> t;
    /// Columns are states z_k = (x, p).
    Mat z;
    /// H along the trajectory.
    Vec energy;
    /// Monitored quantity (H when no monitor is given).
    Vec monitor;
    double max_drift = 0.0;
    /// max_drift / |T|.
    double drift_rate = 0.0;
    int halvings = 0;
};

using Monitor = std::function<double(const Vec& x, const Vec& p)>;

/// Integrates from z0 at t0 over a signed duration T with steps of size at most dt
/// (dt in (0, 1e-2]). Throws NumericalFailure when a step fails after the
/// allowed number of halvings.
Trajectory integrate(const HamiltonianSystem& H, const Vec& z0, double T, const IntegratorOptions& opts = {},
                     const Monitor& monitor = {}, double t0 = 0.0);

/// End state of the flow, without recording.
Vec flow_map(const HamiltonianSystem& H, const Vec& z0, double t0, double T, const IntegratorOptions& opts = {});

/// max |J^T Omega J - Omega| for a 2n x 2n Jacobian J.
double symplectic_residual(const Mat& J);

// Radial systems ------------------------------------------------------------

/// H(x, y) = f(F*(x, y)).
struct RadialSystem {
    FinslerMetric metric;
    RadialProfile f;
};

struct PhaseVelocity {
    Vec xdot;
    Vec ydot;
};

/// Hamilton's equations for H = f(F*). The field is zero for y = 0 and inside
/// the plateau of f. Requires a smooth fiber.
PhaseVelocity radial_rhs(const RadialSystem& sys, const Vec& x, const Vec& y);

/// The radial Hamiltonian with its analytic gradient.
HamiltonianSystem radial_hamiltonian(const RadialSystem& sys);

/// F*^2 as a trajectory monitor.
Monitor co_metric_squared(const FinslerMetric& F);

struct PeriodicOrbit {
    /// Columns (x_k, y_k), k = 0..K, spanning one period; x lifted to R^n.
    Mat samples;
    double period = 1.0;
    IntVec winding;
    double closure_residual = 0.0;
    Vec energy;
    double action = 0.0;

    int dim() const { return static_cast<int>(samples.rows() / 2); }
    int size() const { return static_cast<int>(samples.cols()) - 1; }
    Vec x(int k) const { return samples.col(k).head(dim()); }
    Vec y(int k) const { return samples.col(k).tail(dim()); }
};

/// Rounds the lifted displacement to an integer class. Throws NumericalFailure
/// when a component is more than 1e-3 away from an integer.
IntVec measured_winding(const Mat& samples);

/// sum <y_mid, dx> - sum H(t_mid, z_mid) dt over consecutive samples.
double action(const HamiltonianSystem& H, const PeriodicOrbit& orbit);

/// Samples in reverse order: class -alpha, opposite orientation.
PeriodicOrbit reverse_orbit(const PeriodicOrbit& orbit);

/// Analytic orbit of a flat radial system in class alpha, x(t) = x0 + t alpha,
/// y = r l(alpha) / F(alpha) with f'(r) = F(alpha). The action is
/// r f'(r) - f(r). Throws DomainError when the slope F(alpha) is never attained.
PeriodicOrbit radial_orbit(const RadialSystem& sys, const IntVec& alpha, const Vec& x0, int samples = 1000);

/// r with f'(r) = F(alpha) for the radial orbit in class alpha.
double radial_orbit_radius(const RadialSystem& sys, const IntVec& alpha);

// Periodic orbits by shooting -------------------------------------------------

struct ShootingOptions {
    int segments = 4;
    IntegratorOptions integrator{};
    double tol = 1e-10;
    int max_iter = 60;
    double fd_step = 1e-6;
    /// Samples per orbit in the reported PeriodicOrbit.
    int samples = 1000;
    double dedup = 1e-4;
    Exec exec = Exec::Serial;
};

/// Multiple-shooting Levenberg-Marquardt on the time-1 map: finds z with
/// phi_1(z) = z + (alpha, 0). Seeds are starting states (x, p). Returns the
/// accepted orbits (closure residual < tol, measured winding alpha) after
/// deduplication by Hausdorff distance on the torus. An empty list is not a
/// proof of nonexistence.
std::vector<PeriodicOrbit> find_periodic_orbit(const HamiltonianSystem& H, const IntVec& alpha,
                                               const std::vector<Vec>& seeds, const ShootingOptions& opts = {});

/// Phase-space Hausdorff distance with base points compared modulo Z^n.
double orbit_distance(const PeriodicOrbit& a, const PeriodicOrbit& b);

// Symplectic maps --------------------------------------------------------------

struct SymplecticCertificate {
    bool certified = false;
    double residual = 0.0;
    std::string note;
};

/// Phi(x, p) = (x, p - sigma(x)).
class ShiftMap {
public:
    explicit ShiftMap(OneForm sigma);

    const OneForm& sigma() const { return sigma_; }
    int dim() const { return sigma_.dim(); }
    bool closed() const { return sigma_.closed(); }
    PhasePoint apply(const Vec& x, const Vec& p) const;
    PhasePoint inverse(const Vec& x, const Vec& p) const;
    Mat jacobian(const Vec& x) const;
    /// H o Phi^{-1}.
    HamiltonianSystem conjugate(const HamiltonianSystem& H) const;
    /// For closed sigma, the Jacobian residual over random points. For
    /// non-closed sigma no certificate: Phi pulls the standard form back to
    /// the form twisted by d sigma.
    SymplecticCertificate certify(int probes, std::uint64_t seed) const;

private:
    OneForm sigma_;
};

ShiftMap shift_by_one_form(OneForm sigma);

/// (x, y) -> (A x mod Z^n, A^{-T} y) for a unimodular integer matrix A.
class CatMap {
public:
    explicit CatMap(Mat A);

    const Mat& matrix() const { return A_; }
    const Mat& fiber_matrix() const { return AinvT_; }
    int dim() const { return static_cast<int>(A_.rows()); }
    PhasePoint apply(const Vec& x, const Vec& y) const;
    Mat jacobian() const;
    /// Real eigenvalues in increasing order (throws DomainError when complex).
    Vec eigenvalues() const;
    SymplecticCertificate certify(int probes, std::uint64_t seed) const;

private:
    Mat A_;
    Mat AinvT_;
};

CatMap cat_map(Mat A);

// Lorentzian system --------------------------------------------------------------

/// max of a Fourier field (grid search plus Newton refinement).
double field_max(const FourierField& V);

/// H = (p_1^2 - |p'|^2) / 2 + V(q) with V shifted so that max V = 0.
struct LorentzSystem {
    FourierField V;
    double shift = 0.0;
    HamiltonianSystem H;
    double potential(const Vec& q) const { return V.value(q) - shift; }
};

LorentzSystem lorentz_system(const FourierField& V);

/// In the open cone C* = {p : p_1 > |p'|}.
bool in_lorentz_cone(const Vec& p);

/// G = c phi((H - a) / (b - a)) psi(|p| / R) on the cone C*, zero off it, with
/// phi a quintic step from 0 to 1 on [0, 1] and psi = 1 on [0, 0.9], 0 on [1, inf).
/// Requires 0 < a < b, c > 0, R > 0.
HamiltonianSystem lorentz_cutoff(const LorentzSystem& L, double a, double b, double c, double R);

struct LorentzLevel {
    double energy;
    std::vector<PeriodicOrbit> orbits;
};

struct LorentzSearchOptions {
    int levels = 10;
    int steps = 1000;
    double tol = 1e-10;
    int max_iter = 60;
    double fd_step = 1e-6;
    Exec exec = Exec::Serial;
};

/// Closed form for V = 0: p constant with p_1 T = alpha_1, -p' T = alpha',
/// H = E. Returns (p, T).
std::pair<Vec, double> lorentz_free_orbit(const IntVec& alpha, double E);

/// Searches periodic orbits of class alpha (alpha_1 > |alpha'|) on the energy
/// levels E_j = E- + (j + 1/2)(E+ - E-)/levels. The period is an unknown; the
/// base point is pinned at q = 0. Seeds come from the free closed form.
std::vector<LorentzLevel> lorentz_orbit_search(const LorentzSystem& L, const IntVec& alpha, double e_minus,
                                                double e_plus, const LorentzSearchOptions& opts = {});

} // namespace finslercaps
