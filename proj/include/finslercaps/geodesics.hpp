#pragma once

#include "finslercaps/finsler.hpp"
#include "finslercaps/parallel.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace finslercaps {

struct GeodesicOptions {
    int N = 256;
    /// Max-norm of the energy gradient at termination.
    double tol = 1e-8;
    int max_iter = 100000;
    int multistart = 16;
    /// Amplitude of the Fourier-mode jitter added to the straight initial loops.
    double jitter = 0.2;
    std::uint64_t seed = 0;
    Exec exec = Exec::Serial;
    /// Allow the trivial class alpha = 0 in minimize_energy (constant loop answer).
    bool allow_trivial = false;
};

struct GeodesicResult {
    DiscreteLoop loop;
    double length = 0.0;
    double energy = 0.0;
    double grad_norm = 0.0;
    double speed_variance = 0.0;
    int iterations = 0;
    bool converged = false;
    /// Stopped because chords sit on the non-smooth locus of a polytopal fiber.
    bool hit_nonsmooth = false;
};

/// Gradient of the discrete energy (N/2) sum_k exp(2 phi(xbar_k)) F0^2(dx_k)
/// with respect to the samples (columns). Uses a subgradient of F0^2 on
/// polytopal fibers.
Mat energy_gradient(const FinslerMetric& F, const DiscreteLoop& loop);

/// Max-norm of the discrete energy gradient; zero exactly at critical loops.
double geodesic_residual(const FinslerMetric& F, const DiscreteLoop& loop);

/// Straight loop x_k = base + (k / N) alpha plus the multistart jitter of run `index`
/// (run 0 is the unperturbed straight loop through 0).
DiscreteLoop initial_loop(const IntVec& alpha, int N, std::uint64_t seed, std::uint64_t index, double jitter);

/// Minimises the discrete energy from `init` (the straight loop when absent)
/// by Barzilai-Borwein gradient descent preconditioned with the cyclic
/// Sobolev operator N^2 (-D^2) + I, with Armijo backtracking. Energy decreases
/// monotonically up to rounding.
GeodesicResult minimize_energy(const FinslerMetric& F, const IntVec& alpha, const GeodesicOptions& opts,
                               const std::optional<DiscreteLoop>& init = std::nullopt);

struct MinimalLength {
    double value = 0.0;
    /// Best converged multistart run.
    GeodesicResult witness;
    /// Minimum over converged runs.
    double optimizer_value = 0.0;
    int converged_runs = 0;
    /// Translation-invariant metric: value = h_U(alpha) in closed form.
    bool closed_form = false;
};

/// l_alpha^F. Flat metrics return h_U(alpha) after checking the optimizer
/// agrees within 1e-4; NumericalFailure when no run converges or on disagreement.
MinimalLength minimal_length(const FinslerMetric& F, const IntVec& alpha, const GeodesicOptions& opts = {});

struct SpectrumSample {
    std::vector<double> lengths;
    std::vector<int> multiplicity;
    int budget = 0;
    int converged = 0;
};

/// Distinct converged critical lengths from `budget` randomized starts,
/// merged at resolution dl. A sample, never the full spectrum.
SpectrumSample spectrum_sample(const FinslerMetric& F, const IntVec& alpha, int budget, const GeodesicOptions& opts = {},
                               double dl = 1e-4);

} // namespace finslercaps
