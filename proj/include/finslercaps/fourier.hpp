#pragma once

#include "finslercaps/types.hpp"

#include <vector>

namespace finslercaps {

/// Z^n-periodic scalar field given as a truncated Fourier series
///   f(x) = sum_k a_k cos(2 pi <k, x>) + b_k sin(2 pi <k, x>).
/// A term with k = 0 contributes the constant a_0.
class FourierField {
public:
    struct Term {
        IntVec k;
        double cos_coeff = 0.0;
        double sin_coeff = 0.0;
    };

    FourierField() = default;
    FourierField(int dim, std::vector<Term> terms);

    int dim() const { return dim_; }
    bool zero() const { return terms_.empty(); }
    const std::vector<Term>& terms() const { return terms_; }

    double value(const Vec& x) const;
    Vec gradient(const Vec& x) const;
    Mat hessian(const Vec& x) const;
    /// Constant (k = 0) part.
    double mean() const;
    /// max |f| bound from the coefficients.
    double amplitude_bound() const;

private:
    int dim_ = 0;
    std::vector<Term> terms_;
};

/// Periodic one-form on T^n with Fourier components sigma_i.
class OneForm {
public:
    OneForm() = default;
    explicit OneForm(std::vector<FourierField> components);

    int dim() const { return static_cast<int>(components_.size()); }
    const std::vector<FourierField>& components() const { return components_; }

    Vec value(const Vec& x) const;
    /// J_ij = d sigma_i / d x_j.
    Mat jacobian(const Vec& x) const;
    /// d sigma = 0, checked on the coefficients.
    bool closed(double tol = 1e-12) const;
    /// Closed with vanishing cohomology class (zero constant part).
    bool exact(double tol = 1e-12) const;

    /// sigma = p* (constant covector).
    static OneForm constant(const Vec& p);
    /// sigma = dS for a Fourier primitive S.
    static OneForm differential(const FourierField& S);

private:
    std::vector<FourierField> components_;
};

} // namespace finslercaps
