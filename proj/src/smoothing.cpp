#include "finslercaps/smoothing.hpp"

#include "finslercaps/errors.hpp"
#include "finslercaps/smoothstep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace finslercaps {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Ratio delta / (eta / A - delta) fixed by the schedule.
constexpr double kDeltaOverTransition = 1.0 / 7.0;

// max_u -(1 - S(u) - 2 (r + u) S'(u)) with r = delta / transition: the
// convexity deficit of chi along the radial direction, in units of kappa.
double chi_deficit(double r) {
    auto g = [r](double u) { return -(1.0 - Smoothstep::value(u) - 2.0 * (r + u) * Smoothstep::d1(u)); };
    double best = -kInf, arg = 0.0;
    const int m = 20000;
    for (int i = 0; i <= m; ++i) {
        const double u = static_cast<double>(i) / m;
        if (g(u) > best) {
            best = g(u);
            arg = u;
        }
    }
    // Golden-section refinement around the grid maximiser.
    double a = std::max(0.0, arg - 1.0 / m), b = std::min(1.0, arg + 1.0 / m);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 100; ++it) {
        const double c = b - phi * (b - a), d = a + phi * (b - a);
        if (g(c) > g(d)) b = d;
        else a = c;
    }
    return std::max(best, g(0.5 * (a + b)));
}

double min_chi_second(const ModificationParams& p) { return -p.kappa * Smoothstep::d1(0.5) / p.transition; }

} // namespace

ModificationParams select_params(double eta, double A) {
    if (!(eta > 0.0)) throw DomainError("select_params: eta must be positive");
    if (!(A >= 1.0)) throw DomainError("select_params: A must be >= 1");
    static const double deficit = chi_deficit(kDeltaOverTransition);
    ModificationParams p;
    p.eta = eta;
    p.A = A;
    p.delta = eta / (8.0 * A);
    p.eps = p.delta / 32.0;
    p.kappa = 1.0 / eta;
    p.transition = eta / A - p.delta;
    p.rho = 0.5 * p.kappa * p.transition;
    p.mu = p.kappa * std::max(1.0, 1.25 * deficit);
    const double s0 = 0.5 * (p.eps + (p.kappa / p.mu) * (p.delta - p.eps));
    p.sigma = -p.mu * s0;
    p.corner_width = s0 - p.eps;
    return p;
}

std::vector<std::string> check_invariants(const ModificationParams& p) {
    std::vector<std::string> bad;
    auto need = [&](bool ok, const char* name) {
        if (!ok) bad.emplace_back(name);
    };
    need(p.eta > 0.0, "eta > 0");
    need(p.A >= 1.0, "A >= 1");
    need(0.0 < p.eps && p.eps < p.delta && p.delta < p.eta / p.A, "0 < eps < delta < eta/A");
    need(p.delta * p.kappa + p.sigma + p.rho > 0.0, "delta kappa + sigma + rho > 0");
    need(p.kappa * (p.delta - p.eps) + p.sigma > 0.0, "kappa (delta - eps) + sigma > 0");
    need(p.mu >= p.kappa, "mu >= kappa");
    need((p.kappa * p.delta + p.rho) / p.mu <= p.eta * (1.0 + 1e-14), "(kappa delta + rho) / mu <= eta");
    need(p.transition > 0.0 && std::abs(p.transition - (p.eta / p.A - p.delta)) <= 1e-12 * p.eta,
         "transition = eta/A - delta");
    need(std::abs(p.rho - 0.5 * p.kappa * p.transition) <= 1e-12 * std::max(1.0, p.rho), "rho = kappa transition / 2");
    if (p.transition > 0.0) need(p.mu + (4.0 * p.delta / p.A) * min_chi_second(p) > 0.0, "mu + (4 delta / A) min chi'' > 0");
    const double s0 = -p.sigma / p.mu;
    need(p.corner_width > 0.0 && std::abs(s0 - p.eps - p.corner_width) <= 1e-12 * p.eta,
         "lambda corner centred at -sigma/mu with window [eps, 2 s0 - eps]");
    need(s0 + p.corner_width <= p.delta, "lambda corner ends before delta");
    if (p.transition > 0.0 && p.mu > 0.0) {
        // Radial convexity of lambda(s) + chi(s) on the chi transition, where lambda' = mu.
        double worst = kInf;
        for (int i = 0; i <= 4000; ++i) {
            const double s = p.delta + p.transition * i / 4000.0;
            const Jet c = chi_profile(p, s);
            worst = std::min(worst, p.mu + c.df + 2.0 * s * c.d2f);
        }
        need(worst > 0.0, "mu + chi' + 2 s chi'' > 0");
    }
    return bad;
}

void require_invariants(const ModificationParams& p) {
    const auto bad = check_invariants(p);
    if (bad.empty()) return;
    std::string msg = "modification parameters violate:";
    for (const auto& b : bad) msg += " [" + b + "]";
    throw ContractError(msg);
}

Jet lambda_profile(const ModificationParams& p, double s) {
    const double s0 = -p.sigma / p.mu;
    const SmoothRamp ramp{p.corner_width};
    const double t = s - s0;
    return {p.mu * ramp.value(t), p.mu * ramp.d1(t), p.mu * ramp.d2(t)};
}

Jet chi_profile(const ModificationParams& p, double s) {
    if (s <= p.delta) return {p.kappa * (s - p.delta), p.kappa, 0.0};
    const double u = (s - p.delta) / p.transition;
    if (u >= 1.0) return {p.rho, 0.0, 0.0};
    return {p.kappa * p.transition * (u - Smoothstep::integral(u)), p.kappa * (1.0 - Smoothstep::value(u)),
            -p.kappa * Smoothstep::d1(u) / p.transition};
}

ReferenceMetric reference_metric(const FinslerMetric& F, int directions, double margin) {
    if (!F.smooth())
        throw UnsupportedRepresentation("reference_metric: needs a smooth fiber body, got " + F.body().kind_name());
    const int n = F.dim();
    const FinslerMetric flat(F.body());
    ReferenceMetric ref;
    if (const auto* e = std::get_if<ConvexBody::EllipsoidRep>(&F.body().rep())) ref.G = e->Qinv;
    else ref.G = Mat::Identity(n, n);
    const Eigen::LLT<Mat> chol(ref.G);
    const Mat Linv = chol.matrixL().solve(Mat::Identity(n, n));
    double lo = kInf, hi = 0.0;
    const Vec x0 = Vec::Zero(n);
    for (int i = 0; i < directions; ++i) {
        Vec v(n);
        if (n == 2) {
            const double th = 2.0 * M_PI * (i + 0.5) / directions;
            v << std::cos(th), std::sin(th);
        } else {
            auto rng = item_rng(0x5eedULL, static_cast<std::uint64_t>(i));
            std::normal_distribution<double> g;
            for (int j = 0; j < n; ++j) v(j) = g(rng);
        }
        const Mat g0 = flat.fundamental_tensor(x0, v);
        const Mat S = Linv * g0 * Linv.transpose();
        const Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
        lo = std::min(lo, es.eigenvalues()(0));
        hi = std::max(hi, es.eigenvalues()(n - 1));
    }
    if (!(lo > 0.0)) throw NumericalFailure("reference_metric: fundamental tensor is not positive definite");
    ref.a0 = lo * (1.0 - margin);
    ref.A = hi * (1.0 + margin) / ref.a0;
    return ref;
}

ModifiedLagrangian::ModifiedLagrangian(FinslerMetric F, ModificationParams params, ReferenceMetric ref)
    : F_(std::move(F)), p_(params), ref_(std::move(ref)) {
    require_invariants(p_);
    if (!F_.smooth()) throw UnsupportedRepresentation("modified Lagrangian: metric is non-smooth");
    if (p_.A < ref_.A * (1.0 - 1e-12))
        throw ContractError("modified Lagrangian: parameter A is below the metric comparison constant");
}

ModifiedLagrangian::ModifiedLagrangian(FinslerMetric F, double eta)
    : F_(std::move(F)), ref_(reference_metric(F_)) {
    p_ = select_params(eta, ref_.A);
    require_invariants(p_);
}

double ModifiedLagrangian::L0(const Vec& x, const Vec& v) const {
    const double f = F_.eval(x, v);
    return f * f;
}

double ModifiedLagrangian::reference_sq(const Vec& x, const Vec& v) const {
    const double c = F_.conformal(x);
    return c * c * ref_.a0 * v.dot(ref_.G * v);
}

double ModifiedLagrangian::value(const Vec& x, const Vec& v) const {
    const Jet l = lambda_profile(p_, L0(x, v));
    const Jet c = chi_profile(p_, reference_sq(x, v));
    return (l.f + c.f - p_.sigma - p_.rho) / p_.mu;
}

Vec ModifiedLagrangian::gradient(const Vec& x, const Vec& v) const {
    const double c2 = std::pow(F_.conformal(x), 2);
    const Mat Gx = c2 * ref_.a0 * ref_.G;
    const Jet l = lambda_profile(p_, L0(x, v));
    const Jet c = chi_profile(p_, v.dot(Gx * v));
    Vec g = c.df * 2.0 * (Gx * v);
    if (l.df != 0.0) g += l.df * 2.0 * F_.legendre(x, v);
    return g / p_.mu;
}

Mat ModifiedLagrangian::hessian(const Vec& x, const Vec& v) const {
    const double c2 = std::pow(F_.conformal(x), 2);
    const Mat Gx = c2 * ref_.a0 * ref_.G;
    const Jet l = lambda_profile(p_, L0(x, v));
    const Vec ds = 2.0 * (Gx * v);
    const Jet c = chi_profile(p_, v.dot(Gx * v));
    Mat H = 2.0 * c.df * Gx + c.d2f * ds * ds.transpose();
    if (l.df != 0.0 || l.d2f != 0.0) {
        const Vec dL = 2.0 * F_.legendre(x, v);
        H += 2.0 * l.df * F_.fundamental_tensor(x, v) + l.d2f * dL * dL.transpose();
    }
    return 0.5 * (H + H.transpose()) / p_.mu;
}

double ModifiedLagrangian::at_zero() const { return (-p_.kappa * p_.delta - p_.sigma - p_.rho) / p_.mu; }

double modified_lagrangian(const ModifiedLagrangian& L, const Vec& x, const Vec& v) { return L.value(x, v); }

LagrangianOracle half_of(const ModifiedLagrangian& L) {
    return {[&L](const Vec& x, const Vec& v) { return 0.5 * L.value(x, v); },
            [&L](const Vec& x, const Vec& v) { return Vec(0.5 * L.gradient(x, v)); },
            [&L](const Vec& x, const Vec& v) { return Mat(0.5 * L.hessian(x, v)); }};
}

FenchelResult fenchel_dual(const LagrangianOracle& L, const Vec& x, const Vec& p, const Vec& warm_start, double tol,
                           int max_iter) {
    FenchelResult res;
    Vec v = warm_start;
    auto objective = [&](const Vec& w) { return p.dot(w) - L.value(x, w); };
    double phi = objective(v);
    for (int it = 0; it <= max_iter; ++it) {
        const Vec r = p - L.gradient(x, v);
        res.residual = r.norm();
        res.iterations = it;
        if (res.residual < tol) {
            res.value = phi;
            res.argmax = v;
            return res;
        }
        if (it == max_iter) break;
        const Mat H = L.hessian(x, v);
        const Eigen::LLT<Mat> llt(H);
        if (llt.info() != Eigen::Success) {
            std::ostringstream d;
            d << "iteration " << it << ", residual " << res.residual;
            throw NumericalFailure("fenchel_dual: Lagrangian Hessian is not positive definite", d.str());
        }
        const Vec d = llt.solve(r);
        if (res.residual < 1e-6 * std::max(1.0, p.norm())) {
            // Local phase: objective differences are below rounding, take pure Newton steps.
            v += d;
            phi = objective(v);
            continue;
        }
        double t = 1.0;
        bool moved = false;
        for (int k = 0; k < 60; ++k, t *= 0.5) {
            const Vec w = v + t * d;
            const double pw = objective(w);
            if (pw >= phi + 1e-4 * t * r.dot(d) || (k > 0 && pw > phi)) {
                v = w;
                phi = pw;
                moved = true;
                break;
            }
        }
        if (!moved) {
            // Objective flat to rounding: accept a pure Newton step if it reduces the residual.
            const Vec w = v + d;
            if ((p - L.gradient(x, w)).norm() < res.residual) {
                v = w;
                phi = objective(v);
            } else {
                break;
            }
        }
    }
    std::ostringstream d;
    d << "iterations " << res.iterations << ", first-order residual " << res.residual << ", tol " << tol;
    throw NumericalFailure("fenchel_dual: Newton iteration did not converge", d.str());
}

FenchelResult modified_hamiltonian(const ModifiedLagrangian& L, const Vec& x, const Vec& p) {
    const Vec start = p.norm() > 0.0 ? L.metric().legendre_inverse(x, p) : Vec(Vec::Zero(p.size()));
    return fenchel_dual(half_of(L), x, p, start);
}

namespace {

struct SampleOutcome {
    bool sandwich_bad = false;
    bool equality_bad = false;
    bool dual_bad = false;
    bool dual_checked = false;
    double sandwich_excess = 0.0;
    double equality_error = 0.0;
    double min_eig = kInf;
    double hess_norm = 0.0;
    double dual_rel = 0.0;
};

} // namespace

ModificationReport verify_modification(const ModifiedLagrangian& L, const ModificationCheck& check,
                                       std::uint64_t seed, Exec exec) {
    const auto& p = L.params();
    const int n = L.metric().dim();
    const double eta = p.eta;
    const double marks[] = {p.eps, p.delta, eta / p.A, eta};

    std::vector<SampleOutcome> out(static_cast<std::size_t>(check.samples));
    parallel_for(out.size(), exec, [&](std::size_t i) {
        auto rng = item_rng(seed, i);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::normal_distribution<double> gauss;
        Vec x(n), u(n);
        for (int j = 0; j < n; ++j) x(j) = unif(rng);
        for (int j = 0; j < n; ++j) u(j) = gauss(rng);
        u.normalize();
        double target;
        if (i == 0) {
            target = 0.0;
        } else if (unif(rng) < 0.5) {
            target = eta * std::pow(10.0, -4.0 + unif(rng) * (4.0 + std::log10(4.0)));
        } else {
            const double m = marks[static_cast<int>(unif(rng) * 4.0) % 4];
            target = m * (1.0 + 0.05 * gauss(rng));
        }
        target = std::max(target, 0.0);
        const Vec v = target > 0.0 ? Vec(u * std::sqrt(target) / L.metric().eval(x, u)) : Vec(Vec::Zero(n));

        SampleOutcome o;
        const double l0 = L.L0(x, v);
        const double le = L.value(x, v);
        const double scale = std::max(1.0, l0);
        const double excess = std::max(le - l0, (l0 - eta) - le);
        o.sandwich_excess = excess;
        o.sandwich_bad = excess > check.sandwich_tol * scale;
        if (l0 >= eta) {
            o.equality_error = std::abs(le - l0);
            o.equality_bad = o.equality_error > check.equality_tol * scale;
        }
        if (static_cast<std::int64_t>(i) < check.hessian_samples) {
            const Mat H = L.hessian(x, v);
            const Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
            o.min_eig = es.eigenvalues()(0);
            o.hess_norm = es.eigenvalues().cwiseAbs().maxCoeff();
        }
        if (static_cast<std::int64_t>(i) < check.dual_samples) {
            // Covector with F* in [0.1, 3] sqrt(eta); the equality applies from sqrt(eta) on.
            const double fstar = std::sqrt(eta) * (0.1 + 2.9 * unif(rng));
            Vec q(n);
            for (int j = 0; j < n; ++j) q(j) = gauss(rng);
            q *= fstar / L.metric().co_metric(x, q);
            const double half = 0.5 * fstar * fstar;
            const double H = modified_hamiltonian(L, x, q).value;
            o.dual_checked = true;
            if (fstar >= std::sqrt(eta)) {
                o.dual_rel = std::abs(H - half) / half;
                o.dual_bad = o.dual_rel > check.dual_rel_tol;
            } else {
                o.dual_bad = H < half * (1.0 - 1e-9);
            }
        }
        out[i] = o;
    });

    ModificationReport rep;
    rep.eta = eta;
    rep.samples = check.samples;
    rep.min_hessian_eig = kInf;
    for (int e = -8; e <= 4; ++e) rep.hist_edges.push_back(std::pow(10.0, e));
    rep.hist_counts.assign(rep.hist_edges.size() + 1, 0);
    for (const auto& o : out) {
        rep.sandwich_violations += o.sandwich_bad;
        rep.equality_violations += o.equality_bad;
        rep.dual_violations += o.dual_bad;
        rep.dual_checked += o.dual_checked;
        rep.max_sandwich_excess = std::max(rep.max_sandwich_excess, o.sandwich_excess);
        rep.max_equality_error = std::max(rep.max_equality_error, o.equality_error);
        rep.max_dual_rel_error = std::max(rep.max_dual_rel_error, o.dual_rel);
        if (std::isfinite(o.min_eig)) {
            rep.min_hessian_eig = std::min(rep.min_hessian_eig, o.min_eig);
            rep.max_hessian_norm = std::max(rep.max_hessian_norm, o.hess_norm);
            const auto it = std::upper_bound(rep.hist_edges.begin(), rep.hist_edges.end(), o.min_eig);
            rep.hist_counts[static_cast<std::size_t>(it - rep.hist_edges.begin())] += 1;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Radial profiles

struct RadialProfile::Impl {
    Kind kind = Kind::Affine;
    std::vector<Corner> corners;
    std::vector<double> slopes;
    double w = 0.0;
    double a = 0.0;
    double b = 0.0;
    // Linearized: base profile, slope, switch point, blend half width, base value at r.
    std::shared_ptr<const Impl> base;
    double lambda = 0.0;
    double r = 0.0;
    double fr = 0.0;

    Jet eval(double rho) const {
        switch (kind) {
        case Kind::Affine:
            return {a * rho + b, a, 0.0};
        case Kind::Quadratic:
            return {a * rho * rho + b, 2.0 * a * rho, 2.0 * a};
        case Kind::PiecewiseLinear: {
            Jet j{corners[0].f + slopes[0] * rho, slopes[0], 0.0};
            const SmoothRamp ramp{w};
            for (std::size_t i = 1; i < slopes.size(); ++i) {
                const double jump = slopes[i] - slopes[i - 1];
                const double t = rho - corners[i].rho;
                if (w > 0.0) {
                    j.f += jump * ramp.value(t);
                    j.df += jump * ramp.d1(t);
                    j.d2f += jump * ramp.d2(t);
                } else if (t > 0.0) {
                    j.f += jump * t;
                    j.df += jump;
                }
            }
            return j;
        }
        case Kind::Linearized: {
            const double lo = r - w, hi = r + w;
            if (rho >= hi) return {fr + lambda * (rho - r), lambda, 0.0};
            const Jet f = base->eval(rho);
            if (rho <= lo) return f;
            const double u = (rho - lo) / (2.0 * w);
            const double S = Smoothstep::value(u), S1 = Smoothstep::d1(u) / (2.0 * w),
                         S2 = Smoothstep::d2(u) / (4.0 * w * w);
            const double Lv = fr + lambda * (rho - r);
            return {(1.0 - S) * f.f + S * Lv, (1.0 - S) * f.df + S * lambda + S1 * (Lv - f.f),
                    (1.0 - S) * f.d2f + 2.0 * S1 * (lambda - f.df) + S2 * (Lv - f.f)};
        }
        }
        return {};
    }
};

RadialProfile RadialProfile::piecewise_linear(std::vector<Corner> corners, double smoothing) {
    if (corners.size() < 2) throw DomainError("profile: need at least two corners");
    if (corners[0].rho != 0.0) throw DomainError("profile: first corner must be at rho = 0");
    if (!(smoothing >= 0.0)) throw DomainError("profile: smoothing radius must be >= 0");
    auto impl = std::make_shared<Impl>();
    impl->kind = Kind::PiecewiseLinear;
    for (std::size_t i = 0; i + 1 < corners.size(); ++i) {
        const double gap = corners[i + 1].rho - corners[i].rho;
        if (!(gap > 0.0)) throw DomainError("profile: corners must be strictly increasing in rho");
        if (i > 0 && !(2.0 * smoothing < gap)) throw DomainError("profile: smoothing windows overlap");
        if (i == 0 && corners.size() > 2 && !(smoothing < gap)) throw DomainError("profile: smoothing window crosses 0");
        impl->slopes.push_back((corners[i + 1].f - corners[i].f) / gap);
    }
    if (corners.size() > 2 && !(2.0 * smoothing < corners.back().rho - corners[corners.size() - 2].rho))
        throw DomainError("profile: smoothing windows overlap");
    impl->corners = std::move(corners);
    impl->w = smoothing;
    return RadialProfile(std::move(impl));
}

RadialProfile RadialProfile::quadratic(double c, double offset) {
    auto impl = std::make_shared<Impl>();
    impl->kind = Kind::Quadratic;
    impl->a = c;
    impl->b = offset;
    return RadialProfile(std::move(impl));
}

RadialProfile RadialProfile::affine(double slope, double intercept) {
    auto impl = std::make_shared<Impl>();
    impl->kind = Kind::Affine;
    impl->a = slope;
    impl->b = intercept;
    return RadialProfile(std::move(impl));
}

Jet RadialProfile::eval(double rho) const {
    if (rho < 0.0) throw DomainError("profile: rho must be >= 0");
    return impl_->eval(rho);
}

double RadialProfile::plateau() const {
    switch (impl_->kind) {
    case Kind::Affine:
        return impl_->a == 0.0 ? kInf : 0.0;
    case Kind::Quadratic:
        return impl_->a == 0.0 ? kInf : 0.0;
    case Kind::PiecewiseLinear:
        if (impl_->slopes[0] != 0.0) return 0.0;
        if (impl_->slopes.size() == 1) return kInf;
        return impl_->corners[1].rho - impl_->w;
    case Kind::Linearized:
        return std::min(RadialProfile(impl_->base).plateau(), impl_->r - impl_->w);
    }
    return 0.0;
}

double RadialProfile::terminal_slope() const {
    switch (impl_->kind) {
    case Kind::Affine:
        return impl_->a;
    case Kind::Quadratic:
        return impl_->a > 0.0 ? kInf : (impl_->a < 0.0 ? -kInf : 0.0);
    case Kind::PiecewiseLinear:
        return impl_->slopes.back();
    case Kind::Linearized:
        return impl_->lambda;
    }
    return 0.0;
}

RadialProfile::Kind RadialProfile::kind() const { return impl_->kind; }
const std::vector<RadialProfile::Corner>& RadialProfile::corners() const { return impl_->corners; }
double RadialProfile::smoothing() const { return impl_->w; }
std::pair<double, double> RadialProfile::coefficients() const { return {impl_->a, impl_->b}; }

std::string RadialProfile::describe() const {
    std::ostringstream s;
    s.precision(17);
    switch (impl_->kind) {
    case Kind::Affine:
        s << "affine(slope=" << impl_->a << ", intercept=" << impl_->b << ")";
        break;
    case Kind::Quadratic:
        s << "quadratic(c=" << impl_->a << ", offset=" << impl_->b << ")";
        break;
    case Kind::PiecewiseLinear:
        s << "piecewise_linear(" << impl_->corners.size() << " corners, smoothing=" << impl_->w << ")";
        break;
    case Kind::Linearized:
        s << "linearized(" << RadialProfile(impl_->base).describe() << ", slope=" << impl_->lambda
          << ", r=" << impl_->r << ", w=" << impl_->w << ")";
        break;
    }
    return s.str();
}

double first_slope_point(const RadialProfile& f, double lambda) {
    if (f.d1(0.0) >= lambda) return 0.0;
    // Scan [start, end] on a grid (f' need not be monotone), doubling the range,
    // then bisect inside the first bracketing cell.
    double start = 0.0, end = 1.0;
    constexpr int cells = 8192;
    for (;;) {
        double prev = start;
        for (int i = 1; i <= cells; ++i) {
            const double rho = start + (end - start) * i / cells;
            if (f.d1(rho) >= lambda) {
                double lo = prev, hi = rho;
                for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if (f.d1(mid) >= lambda) hi = mid;
                    else lo = mid;
                }
                return hi;
            }
            prev = rho;
        }
        if (end > 1e12 || (f.terminal_slope() < lambda && end > 1e3))
            throw DomainError("profile: slope is never attained");
        start = end;
        end *= 2.0;
    }
}

Linearization linearize_profile(const RadialProfile& f, double lambda, double width) {
    if (!(lambda > 0.0)) throw DomainError("linearize_profile: slope must be positive");
    const double r = first_slope_point(f, lambda);
    if (f.kind() == RadialProfile::Kind::Affine && f.coefficients().first == lambda) return {f, r};
    double w = width < 0.0 ? std::min(0.05, r / 4.0) : width;
    if (w > r) throw DomainError("linearize_profile: blend window crosses rho = 0");
    auto impl = std::make_shared<RadialProfile::Impl>();
    impl->kind = RadialProfile::Kind::Linearized;
    impl->base = f.impl_;
    impl->lambda = lambda;
    impl->r = r;
    impl->w = w;
    impl->fr = f.value(r);
    return {RadialProfile(std::move(impl)), r};
}

double action_bound(const RadialProfile& f, double lambda) {
    const double r = first_slope_point(f, lambda);
    const Jet j = f.eval(r);
    return r * j.df - j.f;
}

StepParams exhausting_step_params(double a, double c, double delta_k, double m_k, const std::vector<double>& spectrum) {
    if (!(a > 0.0 && c > 0.0)) throw DomainError("step params: a and c must be positive");
    StepParams s;
    if (a > c) {
        if (!(delta_k > 0.0 && delta_k < 0.25)) throw DomainError("step params: need 0 < delta_k < 1/4");
        if (!(m_k > c && m_k < 0.5 * (a + c))) throw DomainError("step params: need c < m_k < (a + c) / 2");
        s.first_case = true;
        s.nu = (a - c) / (2.0 * delta_k);
        s.S = std::max((a - m_k) / (2.0 * std::sqrt(delta_k)) - m_k, 0.0);
        return s;
    }
    if (!(delta_k > 0.0 && delta_k < a / c)) throw DomainError("step params: need 0 < delta_k < a / c");
    if (!std::isnan(m_k) && !(m_k > c)) throw DomainError("step params: need m_k > c");
    s.first_case = false;
    s.mu = a / delta_k - c;
    s.mu_minus = 0.0;
    s.mu_plus = kInf;
    for (double l : spectrum) {
        if (std::abs(l - s.mu) <= 1e-12 * std::max(1.0, s.mu)) throw DomainError("step params: mu_k lies in the spectrum");
        if (l > 0.0 && l < s.mu) s.mu_minus = std::max(s.mu_minus, l);
        if (l > s.mu) s.mu_plus = std::min(s.mu_plus, l);
    }
    s.mu_prime = 0.5 * (s.mu_minus + s.mu);
    s.T = std::min(s.mu_prime - a, 0.0);
    return s;
}

} // namespace finslercaps
