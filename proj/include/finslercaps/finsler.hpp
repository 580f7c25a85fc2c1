#pragma once

#include "finslercaps/convex_body.hpp"
#include "finslercaps/fourier.hpp"
#include "finslercaps/types.hpp"

namespace finslercaps {

/// Finsler metric on T^n of the form F(x, v) = exp(phi(x)) h_U(v), where U is
/// the fiber convex body (the unit co-ball of the flat part) and phi a
/// periodic conformal factor. phi = 0 gives a translation-invariant
/// (Minkowski) metric.
class FinslerMetric {
public:
    enum class TensorMethod { Auto, Analytic, FiniteDifference };

    explicit FinslerMetric(ConvexBody body, FourierField phi = {}, double fd_scale = 1e-4);

    const ConvexBody& body() const { return body_; }
    const FourierField& phi() const { return phi_; }
    int dim() const { return body_.dim(); }
    /// Tensor calculus is available (C^2 strictly convex unit ball).
    bool smooth() const { return body_.smooth(); }
    /// No x-dependence.
    bool flat() const { return phi_.zero(); }
    double fd_scale() const { return fd_scale_; }

    double conformal(const Vec& x) const;

    /// F(x, v).
    double eval(const Vec& x, const Vec& v) const;
    /// F*(x, p) = max_{F(x, v) <= 1} <p, v>.
    double co_metric(const Vec& x, const Vec& p) const;

    /// g_ij(x, y) = 1/2 d^2 F^2 / dy_i dy_j, y != 0.
    Mat fundamental_tensor(const Vec& x, const Vec& y, TensorMethod method = TensorMethod::Auto) const;
    /// g^ij(x, p) = 1/2 d^2 F*^2 / dp_i dp_j, p != 0.
    Mat co_tensor(const Vec& x, const Vec& p) const;

    /// l_x(v) = 1/2 grad_v F^2; l(0) = 0.
    Vec legendre(const Vec& x, const Vec& v) const;
    /// l*_x(p) = 1/2 grad_p F*^2; l*(0) = 0.
    Vec legendre_inverse(const Vec& x, const Vec& p) const;

    /// A (sub)gradient of F^2 in v, available for every bounded body:
    /// 2 F(x, v) exp(phi) argmax_{p in U} <p, v>. Equals 2 l_x(v) when smooth.
    Vec grad_v_squared(const Vec& x, const Vec& v) const;

private:
    void require_smooth(const char* what) const;

    ConvexBody body_;
    FourierField phi_;
    double fd_scale_;
};

/// Closed curve sampled at N points x_0..x_{N-1} of a lift to R^n, with the
/// implicit closure x_N = x_0 + alpha.
class DiscreteLoop {
public:
    DiscreteLoop(Mat samples, IntVec winding);

    /// x_k = base + (k / N) alpha.
    static DiscreteLoop straight(const IntVec& winding, int N, const Vec& base);

    int size() const { return static_cast<int>(samples_.cols()); }
    int dim() const { return static_cast<int>(samples_.rows()); }
    const Mat& samples() const { return samples_; }
    Mat& samples() { return samples_; }
    const IntVec& winding() const { return winding_; }

    /// x_k for any integer k, using the lift x_{k + N} = x_k + alpha.
    Vec point(int k) const;
    /// x_{k+1} - x_k.
    Vec chord(int k) const;
    /// (x_k + x_{k+1}) / 2.
    Vec midpoint(int k) const;

private:
    Mat samples_;
    IntVec winding_;
};

/// Discrete speeds F(xbar_k, N dx_k), k = 0..N-1.
Vec loop_speeds(const FinslerMetric& F, const DiscreteLoop& loop);
/// Midpoint-rule length sum_k F(xbar_k, N dx_k) / N.
double loop_length(const FinslerMetric& F, const DiscreteLoop& loop);
/// Midpoint-rule energy 1/2 sum_k F^2(xbar_k, N dx_k) / N.
double loop_energy(const FinslerMetric& F, const DiscreteLoop& loop);

} // namespace finslercaps
