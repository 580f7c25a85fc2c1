#include "finslercaps/capacities.hpp"

#include "finslercaps/errors.hpp"
#include "finslercaps/hamiltonian.hpp"
#include "finslercaps/log.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace finslercaps {

namespace {

void require_class(const IntVec& alpha, int n) {
    if (alpha.size() != n) throw DomainError("capacity: class dimension mismatch");
    if (alpha.isZero()) throw DomainError("capacity: class must be nonzero");
}

std::string format_vec(const Vec& v) {
    std::ostringstream s;
    s << "(";
    for (int i = 0; i < v.size(); ++i) s << (i ? ", " : "") << v(i);
    s << ")";
    return s.str();
}

// Best rational approximation p/q of x with q <= qmax (continued fractions).
std::pair<long long, long long> rational_approx(double x, long long qmax) {
    long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double y = x;
    for (int it = 0; it < 64; ++it) {
        const double a = std::floor(y);
        const long long ai = static_cast<long long>(a);
        const long long p2 = ai * p1 + p0, q2 = ai * q1 + q0;
        if (q2 > qmax) break;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        const double frac = y - a;
        if (frac < 1e-15) break;
        y = 1.0 / frac;
    }
    return {p1, q1};
}

} // namespace

std::string method_name(CapacityMethod m) {
    switch (m) {
    case CapacityMethod::ClosedForm: return "closed-form";
    case CapacityMethod::Variational: return "variational";
    case CapacityMethod::CylinderCase: return "cylinder-case";
    case CapacityMethod::ThresholdProbe: return "threshold-probe";
    }
    return "unknown";
}

CapacityResult bps_capacity(const ConvexBody& U, const IntVec& alpha, const CapacityOptions& opts) {
    require_class(alpha, U.dim());
    if (!U.origin_interior() && !U.contains(Vec::Zero(U.dim())))
        throw DomainError("bps_capacity: the zero section must lie in the domain (0 in U)");
    const Vec a = to_real(alpha);
    CapacityResult out;
    const double h = U.support(a);
    if (!std::isfinite(h) || h >= kUnboundedThreshold) {
        out.method = CapacityMethod::ThresholdProbe;
        out.evidence = unbounded_along(U, a, default_ladder());
        if (out.evidence->exceeds) return out;
    }
    out.value = h;
    out.method = CapacityMethod::ClosedForm;
    if (opts.cross_check && U.bounded()) {
        const MinimalLength ml = minimal_length(FinslerMetric(U), alpha, opts.geodesic);
        out.variational = ml.optimizer_value;
        out.witness = ml.witness;
    }
    return out;
}

CapacityResult bps_capacity(const FinslerMetric& F, const IntVec& alpha, const CapacityOptions& opts) {
    if (F.flat()) return bps_capacity(F.body(), alpha, opts);
    require_class(alpha, F.dim());
    if (!F.body().origin_interior())
        throw DomainError("bps_capacity: the zero section must lie in the interior of the domain");
    const MinimalLength ml = minimal_length(F, alpha, opts.geodesic);
    CapacityResult out;
    out.value = ml.value;
    out.method = CapacityMethod::Variational;
    out.variational = ml.optimizer_value;
    out.witness = ml.witness;
    return out;
}

double bps_capacity_floored(const FinslerMetric& F, const IntVec& alpha, double a, const CapacityOptions& opts) {
    const CapacityResult c = bps_capacity(F, alpha, opts);
    if (!c.value) return std::numeric_limits<double>::infinity();
    return std::max(*c.value, a);
}

std::optional<IntVec> rational_direction(const Vec& v) {
    const int n = static_cast<int>(v.size());
    if (n == 0 || v.norm() == 0.0) throw DomainError("rational_direction: zero vector");
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    const Vec w = v / v(imax);
    // w_i = p_i / q_i; beta = lcm(q) * w.
    std::vector<long long> num(n), den(n);
    long long L = 1;
    for (int i = 0; i < n; ++i) {
        const double x = std::abs(w(i));
        auto [p, q] = rational_approx(x, 10000);
        if (std::abs(x - static_cast<double>(p) / q) > 1e-12) return std::nullopt;
        num[i] = w(i) < 0 ? -p : p;
        den[i] = q;
        L = std::lcm(L, q);
        if (L > 100000000LL) return std::nullopt;
    }
    IntVec beta(n);
    long long g = 0;
    for (int i = 0; i < n; ++i) {
        const long long b = num[i] * (L / den[i]);
        beta(i) = static_cast<int>(b);
        g = std::gcd(g, std::llabs(b));
    }
    if (g > 1) beta /= static_cast<int>(g);
    if (v(imax) < 0) beta = -beta;
    const Vec bv = to_real(beta);
    if ((bv / bv.norm() - v / v.norm()).cwiseAbs().maxCoeff() > 1e-12) return std::nullopt;
    return beta;
}

CapacityResult cylinder_capacity(double r, const Vec& v, const IntVec& alpha) {
    if (!(r > 0.0)) throw DomainError("cylinder_capacity: radius must be positive");
    if (std::abs(v.norm() - 1.0) > 1e-12) throw DomainError("cylinder_capacity: direction must be a unit vector");
    require_class(alpha, static_cast<int>(v.size()));
    CapacityResult out;
    if (const auto beta = rational_direction(v)) {
        // alpha in Z beta iff alpha = k beta for an integer k.
        const IntVec& b = *beta;
        Eigen::Index i = 0;
        b.cwiseAbs().maxCoeff(&i);
        if (alpha(i) % b(i) == 0 && alpha == (alpha(i) / b(i)) * b) {
            out.value = r * to_real(alpha).norm();
            out.method = CapacityMethod::CylinderCase;
            return out;
        }
    }
    out.method = CapacityMethod::ThresholdProbe;
    out.evidence = unbounded_along(ConvexBody::slab(v, r), to_real(alpha), default_ladder());
    if (!out.evidence->exceeds) {
        // Only reachable through a near-parallel irrational direction below the bar.
        out.value = out.evidence->truncated_support.back();
        log_warn("cylinder_capacity: probe stayed below the certification threshold");
    }
    return out;
}

ConeCertificate cone_certificate(const Vec& pstar, const IntVec& alpha, double c, const Cone& C) {
    if (C.generators.empty()) throw DomainError("cone_certificate: empty cone");
    if (pstar.size() != C.dim() || alpha.size() != C.dim()) throw DomainError("cone_certificate: dimension mismatch");
    ConeCertificate out;
    const Vec a = to_real(alpha);
    out.pairing = pstar.dot(a);
    if (!dual_cone_interior(C, pstar)) {
        out.reason = "p* is not in the interior of the dual cone";
        return out;
    }
    if (alpha.isZero() || !cone_contains(C, a)) {
        out.reason = "class outside cone";
        return out;
    }
    if (out.pairing > c) {
        std::ostringstream s;
        s << "<p*, alpha> = " << out.pairing << " exceeds c = " << c;
        out.reason = s.str();
        return out;
    }
    out.holds = true;
    out.reason = "hypotheses hold";
    std::ostringstream s;
    s << "any admissible H with min H(t, x, p*) >= " << c << " at p* = " << format_vec(pstar)
      << " has a 1-periodic orbit in class " << format_vec(a);
    out.conclusion = s.str();
    return out;
}

NestedBound nested_capacity_bound(const std::vector<ConvexBody>& bodies, const IntVec& alpha,
                                  const std::vector<Vec>& probes) {
    if (bodies.empty()) throw DomainError("nested_capacity_bound: no bodies");
    const int n = bodies.front().dim();
    require_class(alpha, n);
    for (const auto& b : bodies)
        if (b.dim() != n) throw DomainError("nested_capacity_bound: dimension mismatch");
    // Nesting on a fixed direction set: alpha, +-e_i and 256 (2-d) or 1024 random unit directions.
    std::vector<Vec> dirs{to_real(alpha)};
    for (int i = 0; i < n; ++i) {
        dirs.push_back(Vec::Unit(n, i));
        dirs.push_back(-Vec::Unit(n, i));
    }
    if (n == 2) {
        for (int k = 0; k < 256; ++k) {
            const double t = 2.0 * M_PI * k / 256.0;
            dirs.push_back((Vec(2) << std::cos(t), std::sin(t)).finished());
        }
    } else {
        auto rng = item_rng(0x6e657374ULL, 0);
        std::normal_distribution<double> g;
        for (int k = 0; k < 1024; ++k) {
            Vec d(n);
            for (int i = 0; i < n; ++i) d(i) = g(rng);
            dirs.push_back(d / d.norm());
        }
    }
    for (std::size_t i = 1; i < bodies.size(); ++i)
        for (const auto& d : dirs) {
            const double hi = bodies[i - 1].support(d), ho = bodies[i].support(d);
            if (hi > ho + 1e-12 * std::max(1.0, std::abs(ho)))
                throw DomainError("nested_capacity_bound: body " + std::to_string(i - 1) +
                                  " is not contained in body " + std::to_string(i));
        }
    NestedBound out;
    const Vec a = to_real(alpha);
    for (const auto& b : bodies) {
        out.lengths.push_back(b.support(a));
        out.sup = std::max(out.sup, out.lengths.back());
    }
    for (const auto& p : probes) {
        if (p.size() != n) throw DomainError("nested_capacity_bound: probe dimension mismatch");
        out.bound = std::max(out.bound, bodies.front().gauge(p));
    }
    out.bounded = std::isfinite(out.sup) && out.sup <= out.bound;
    return out;
}

NonsqueezingVerdict nonsqueezing_verdict(double s, double r, SqueezePair pair, int n) {
    if (!(s > 0.0) || !(r > 0.0)) throw DomainError("nonsqueezing_verdict: s and r must be positive");
    if (n < 2) throw DomainError("nonsqueezing_verdict: dimension must be at least 2");
    const IntVec e1 = IntVec::Unit(n, 0);
    CapacityOptions o;
    o.cross_check = false;
    const ConvexBody source = pair == SqueezePair::SimplexIntoSlab ? ConvexBody::simplex(n, s) : ConvexBody::ball(n, s);
    const ConvexBody target = ConvexBody::slab(Vec::Unit(n, 0), r);
    NonsqueezingVerdict v;
    v.source_capacity = *bps_capacity(source, e1, o).value;
    v.target_capacity = *bps_capacity(target, e1, o).value;
    v.embeddable = v.source_capacity <= v.target_capacity;
    return v;
}

ExistenceCertificate existence_threshold(const ConvexBody& U, double m, const IntVec& alpha,
                                         const std::optional<Vec>& pstar) {
    if (!U.bounded()) throw DomainError("existence_threshold: the domain must be bounded");
    const ConvexBody body = pstar ? U.translate(*pstar) : U;
    if (!body.origin_interior()) throw DomainError("existence_threshold: 0 must be interior to the domain");
    CapacityOptions o;
    o.cross_check = false;
    ExistenceCertificate out;
    out.threshold = *bps_capacity(body, alpha, o).value;
    out.guaranteed = m >= out.threshold;
    std::ostringstream s;
    if (out.guaranteed)
        s << "H(t, x, 0) >= " << m << " >= " << out.threshold << ": an orbit in class "
          << format_vec(-to_real(alpha)) << " exists";
    else
        s << "H(t, x, 0) >= " << m << " is below the threshold " << out.threshold << ": no conclusion";
    out.conclusion = s.str();
    return out;
}

SqueezeResult squeeze_min_iterations(const Mat& A, const ConvexBody& U, double r, int max_iterations) {
    if (!(r > 0.0)) throw DomainError("squeeze_min_iterations: r must be positive");
    const CatMap cm(A);
    const int n = cm.dim();
    if (U.dim() != n) throw DomainError("squeeze_min_iterations: dimension mismatch");
    if (!U.bounded()) throw DomainError("squeeze_min_iterations: the fiber body must be bounded");
    if (n == 2 && !(std::abs(A.trace()) > 2.0))
        throw DomainError("squeeze_min_iterations: matrix is not hyperbolic (|trace| <= 2)");
    Eigen::EigenSolver<Mat> es(A);
    Eigen::Index k = 0;
    es.eigenvalues().cwiseAbs().maxCoeff(&k);
    const auto lam = es.eigenvalues()(k);
    if (std::abs(lam.imag()) > 1e-12 || !(std::abs(lam.real()) > 1.0 + 1e-12))
        throw DomainError("squeeze_min_iterations: no real expanding eigenvalue");
    SqueezeResult out;
    out.lambda = std::abs(lam.real());
    out.direction = es.eigenvectors().col(k).real();
    out.direction /= out.direction.norm();
    const Vec& u = out.direction;

    const bool poly = U.polytopal();
    std::vector<Vec> pts = poly ? U.vertices() : std::vector<Vec>{};
    Vec w = u; // (A^{-1})^k u: <(A^{-T})^k p, u> = <p, (A^{-1})^k u>
    const Mat Ainv = cm.fiber_matrix().transpose();
    auto width = [&]() {
        if (poly) {
            double m = 0.0;
            for (const auto& p : pts) m = std::max(m, std::abs(p.dot(u)));
            return m;
        }
        return std::max(U.support(w), U.support(-w));
    };
    const ConvexBody slab = ConvexBody::slab(u, r);
    for (int it = 0;; ++it) {
        const double wd = width();
        out.widths.push_back(wd);
        if (wd <= r) {
            out.iterations = it;
            break;
        }
        if (it >= max_iterations) throw NumericalFailure("squeeze_min_iterations: iteration cap reached");
        if (poly)
            for (auto& p : pts) p = cm.fiber_matrix() * p;
        else
            w = Ainv * w;
    }
    const double ratio = out.widths.front() / r;
    out.predicted = ratio <= 1.0 ? 0 : static_cast<int>(std::ceil(std::log(ratio) / std::log(out.lambda)));
    if (poly) {
        out.verified = true;
        for (const auto& p : pts) out.verified = out.verified && slab.contains(p, 1e-15 * r);
    } else {
        out.verified = std::max(U.support(w), U.support(-w)) <= r;
    }
    return out;
}

} // namespace finslercaps
