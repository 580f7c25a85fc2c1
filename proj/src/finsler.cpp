#include "finslercaps/finsler.hpp"

#include "finslercaps/errors.hpp"

#include <cmath>

namespace finslercaps {

FinslerMetric::FinslerMetric(ConvexBody body, FourierField phi, double fd_scale)
    : body_(std::move(body)), phi_(std::move(phi)), fd_scale_(fd_scale) {
    if (!phi_.zero() && phi_.dim() != body_.dim()) throw DomainError("metric: conformal factor dimension mismatch");
    if (!(fd_scale_ > 0.0)) throw DomainError("metric: finite-difference scale must be positive");
}

double FinslerMetric::conformal(const Vec& x) const { return phi_.zero() ? 1.0 : std::exp(phi_.value(x)); }

double FinslerMetric::eval(const Vec& x, const Vec& v) const {
    if (v.norm() == 0.0) return 0.0;
    return conformal(x) * body_.support(v);
}

double FinslerMetric::co_metric(const Vec& x, const Vec& p) const { return body_.gauge(p) / conformal(x); }

void FinslerMetric::require_smooth(const char* what) const {
    if (!smooth())
        throw UnsupportedRepresentation(std::string(what) + ": metric is non-smooth (" + body_.kind_name() +
                                        " fiber body)");
}

Mat FinslerMetric::fundamental_tensor(const Vec& x, const Vec& y, TensorMethod method) const {
    require_smooth("fundamental_tensor");
    if (y.norm() < 1e-6) throw DomainError("fundamental_tensor: y too close to the zero section");
    const double e2 = std::pow(conformal(x), 2);
    if (method != TensorMethod::FiniteDifference) {
        const Vec grad = body_.support_point(y);
        const double F0 = body_.support(y);
        Mat g = grad * grad.transpose() + F0 * body_.support_hessian(y);
        return e2 * 0.5 * (g + g.transpose());
    }
    // Central differences of F0^2 with step h = fd_scale * max(1, |y|).
    const int n = dim();
    const double h = fd_scale_ * std::max(1.0, y.norm());
    auto f2 = [&](const Vec& v) {
        const double s = body_.support(v);
        return s * s;
    };
    Mat g(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const Vec ei = h * Vec::Unit(n, i);
            const Vec ej = h * Vec::Unit(n, j);
            const double d = f2(y + ei + ej) - f2(y + ei - ej) - f2(y - ei + ej) + f2(y - ei - ej);
            g(i, j) = g(j, i) = 0.5 * d / (4.0 * h * h);
        }
    }
    return e2 * g;
}

Mat FinslerMetric::co_tensor(const Vec& x, const Vec& p) const {
    require_smooth("co_tensor");
    if (p.norm() < 1e-6) throw DomainError("co_tensor: p too close to the zero section");
    Mat g = fundamental_tensor(x, legendre_inverse(x, p)).inverse();
    return 0.5 * (g + g.transpose());
}

Vec FinslerMetric::legendre(const Vec& x, const Vec& v) const {
    require_smooth("legendre");
    if (v.norm() == 0.0) return Vec::Zero(dim());
    const double e2 = std::pow(conformal(x), 2);
    return e2 * body_.support(v) * body_.support_point(v);
}

Vec FinslerMetric::legendre_inverse(const Vec& x, const Vec& p) const {
    require_smooth("legendre_inverse");
    if (p.norm() == 0.0) return Vec::Zero(dim());
    const double e2 = std::pow(conformal(x), 2);
    return body_.gauge(p) * body_.gauge_gradient(p) / e2;
}

Vec FinslerMetric::grad_v_squared(const Vec& x, const Vec& v) const {
    if (v.norm() == 0.0) return Vec::Zero(dim());
    const double e2 = std::pow(conformal(x), 2);
    return 2.0 * e2 * body_.support(v) * body_.support_point(v);
}

DiscreteLoop::DiscreteLoop(Mat samples, IntVec winding) : samples_(std::move(samples)), winding_(std::move(winding)) {
    if (samples_.cols() < 16) throw DomainError("loop: need at least 16 samples");
    if (winding_.size() != samples_.rows()) throw DomainError("loop: winding dimension mismatch");
}

DiscreteLoop DiscreteLoop::straight(const IntVec& winding, int N, const Vec& base) {
    Mat s(winding.size(), N);
    const Vec a = to_real(winding);
    for (int k = 0; k < N; ++k) s.col(k) = base + (static_cast<double>(k) / N) * a;
    return DiscreteLoop(std::move(s), winding);
}

Vec DiscreteLoop::point(int k) const {
    const int N = size();
    const int q = (k >= 0 ? k / N : -((-k + N - 1) / N));
    const int r = k - q * N;
    return samples_.col(r) + static_cast<double>(q) * to_real(winding_);
}

Vec DiscreteLoop::chord(int k) const { return point(k + 1) - point(k); }

Vec DiscreteLoop::midpoint(int k) const { return 0.5 * (point(k) + point(k + 1)); }

Vec loop_speeds(const FinslerMetric& F, const DiscreteLoop& loop) {
    const int N = loop.size();
    const bool nontrivial = !loop.winding().isZero();
    Vec s(N);
    for (int k = 0; k < N; ++k) {
        const Vec d = loop.chord(k);
        if (nontrivial && d.norm() == 0.0) throw DomainError("loop: degenerate (zero) chord");
        s(k) = F.eval(loop.midpoint(k), static_cast<double>(N) * d);
    }
    return s;
}

double loop_length(const FinslerMetric& F, const DiscreteLoop& loop) { return loop_speeds(F, loop).mean(); }

double loop_energy(const FinslerMetric& F, const DiscreteLoop& loop) {
    return 0.5 * loop_speeds(F, loop).squaredNorm() / loop.size();
}

} // namespace finslercaps
