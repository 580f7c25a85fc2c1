#include "finslercaps/fourier.hpp"

#include "finslercaps/errors.hpp"

#include <cmath>
#include <numbers>

namespace finslercaps {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

FourierField::FourierField(int dim, std::vector<Term> terms) : dim_(dim), terms_(std::move(terms)) {
    for (const auto& t : terms_)
        if (t.k.size() != dim_) throw DomainError("fourier: wave vector dimension mismatch");
}

double FourierField::value(const Vec& x) const {
    double f = 0.0;
    for (const auto& t : terms_) {
        const double th = kTwoPi * t.k.cast<double>().dot(x);
        f += t.cos_coeff * std::cos(th) + t.sin_coeff * std::sin(th);
    }
    return f;
}

Vec FourierField::gradient(const Vec& x) const {
    Vec g = Vec::Zero(x.size());
    for (const auto& t : terms_) {
        const Vec k = t.k.cast<double>();
        const double th = kTwoPi * k.dot(x);
        g += kTwoPi * (-t.cos_coeff * std::sin(th) + t.sin_coeff * std::cos(th)) * k;
    }
    return g;
}

Mat FourierField::hessian(const Vec& x) const {
    Mat h = Mat::Zero(x.size(), x.size());
    for (const auto& t : terms_) {
        const Vec k = t.k.cast<double>();
        const double th = kTwoPi * k.dot(x);
        h -= kTwoPi * kTwoPi * (t.cos_coeff * std::cos(th) + t.sin_coeff * std::sin(th)) * (k * k.transpose());
    }
    return h;
}

double FourierField::mean() const {
    double m = 0.0;
    for (const auto& t : terms_)
        if (t.k.isZero()) m += t.cos_coeff;
    return m;
}

double FourierField::amplitude_bound() const {
    double a = 0.0;
    for (const auto& t : terms_) a += std::hypot(t.cos_coeff, t.sin_coeff);
    return a;
}

OneForm::OneForm(std::vector<FourierField> components) : components_(std::move(components)) {
    for (const auto& c : components_)
        if (c.dim() != dim() && !c.zero()) throw DomainError("one-form: component dimension mismatch");
}

Vec OneForm::value(const Vec& x) const {
    Vec s(dim());
    for (int i = 0; i < dim(); ++i) s(i) = components_[i].value(x);
    return s;
}

Mat OneForm::jacobian(const Vec& x) const {
    Mat J(dim(), dim());
    for (int i = 0; i < dim(); ++i) J.row(i) = components_[i].gradient(x).transpose();
    return J;
}

bool OneForm::closed(double tol) const {
    // d sigma = 0 iff, for each wave vector k != 0, the coefficient vectors
    // (a_k)_i and (b_k)_i are parallel to k (sigma_k = k * scalar).
    const int n = dim();
    struct Acc {
        IntVec k;
        Vec a, b;
    };
    std::vector<Acc> acc;
    for (int i = 0; i < n; ++i) {
        for (const auto& t : components_[i].terms()) {
            if (t.k.isZero()) continue;
            // Normalise k and -k to a single representative.
            IntVec k = t.k;
            double sgn = 1.0;
            for (int j = 0; j < n; ++j) {
                if (k(j) != 0) {
                    if (k(j) < 0) {
                        k = -k;
                        sgn = -1.0;
                    }
                    break;
                }
            }
            Acc* slot = nullptr;
            for (auto& s : acc)
                if (s.k == k) slot = &s;
            if (!slot) {
                acc.push_back({k, Vec::Zero(n), Vec::Zero(n)});
                slot = &acc.back();
            }
            slot->a(i) += t.cos_coeff;
            slot->b(i) += sgn * t.sin_coeff;
        }
    }
    for (const auto& s : acc) {
        const Vec k = s.k.cast<double>().normalized();
        if ((s.a - k.dot(s.a) * k).norm() > tol || (s.b - k.dot(s.b) * k).norm() > tol) return false;
    }
    return true;
}

bool OneForm::exact(double tol) const {
    if (!closed(tol)) return false;
    for (const auto& c : components_)
        if (std::abs(c.mean()) > tol) return false;
    return true;
}

OneForm OneForm::constant(const Vec& p) {
    const int n = static_cast<int>(p.size());
    std::vector<FourierField> comps;
    for (int i = 0; i < n; ++i) comps.emplace_back(n, std::vector<FourierField::Term>{{IntVec::Zero(n), p(i), 0.0}});
    return OneForm(std::move(comps));
}

OneForm OneForm::differential(const FourierField& S) {
    const int n = S.dim();
    std::vector<std::vector<FourierField::Term>> terms(n);
    for (const auto& t : S.terms()) {
        if (t.k.isZero()) continue;
        for (int i = 0; i < n; ++i) {
            if (t.k(i) == 0) continue;
            const double w = kTwoPi * t.k(i);
            // d/dx_i [a cos + b sin] = w (-a sin + b cos)
            terms[i].push_back({t.k, w * t.sin_coeff, -w * t.cos_coeff});
        }
    }
    std::vector<FourierField> comps;
    for (int i = 0; i < n; ++i) comps.emplace_back(n, std::move(terms[i]));
    return OneForm(std::move(comps));
}

} // namespace finslercaps
