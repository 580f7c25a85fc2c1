#pragma once

#include "finslercaps/convex_body.hpp"
#include "finslercaps/finsler.hpp"
#include "finslercaps/geodesics.hpp"
#include "finslercaps/types.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace finslercaps {

enum class CapacityMethod { ClosedForm, Variational, CylinderCase, ThresholdProbe };

std::string method_name(CapacityMethod m);

struct CapacityResult {
    /// Empty when the capacity exceeds the certification threshold.
    std::optional<double> value;
    CapacityMethod method = CapacityMethod::ClosedForm;
    /// Length-minimising loop when a variational run was made.
    std::optional<GeodesicResult> witness;
    /// Optimizer value of the variational cross-check (NaN when not run).
    double variational = std::numeric_limits<double>::quiet_NaN();
    /// Probe ladder for exceeds-threshold results.
    std::optional<UnboundedEvidence> evidence;

    bool exceeds_threshold() const { return !value.has_value(); }
};

struct CapacityOptions {
    GeodesicOptions geodesic{};
    /// Run the geodesic solver alongside closed forms.
    bool cross_check = true;
};

/// C_BPS(U; alpha) = l_alpha of the Minkowski metric of U: the closed form
/// h_U(alpha), cross-checked by the geodesic solver when requested and the body
/// is bounded. Bodies with the origin on the boundary (simplices) are accepted
/// as limits of interior translates. Infinite support values are reported as
/// exceeds-threshold with probe evidence.
CapacityResult bps_capacity(const ConvexBody& U, const IntVec& alpha, const CapacityOptions& opts = {});
/// l_alpha^F for a general (possibly curved) metric via the geodesic solver.
CapacityResult bps_capacity(const FinslerMetric& F, const IntVec& alpha, const CapacityOptions& opts = {});

/// max(l_alpha^F, a).
double bps_capacity_floored(const FinslerMetric& F, const IntVec& alpha, double a, const CapacityOptions& opts = {});

/// Primitive integer vector beta with v parallel to beta (continued fractions,
/// denominators up to 1e4, tolerance 1e-12), or nothing for irrational directions.
std::optional<IntVec> rational_direction(const Vec& v);

/// Capacity of the cylinder Y(r, v) = T^n x {|<p, v>| < r} in class alpha:
/// r |alpha| when v is parallel to a primitive beta and alpha in Z beta,
/// exceeds-threshold otherwise. Requires |v| = 1 and r > 0.
CapacityResult cylinder_capacity(double r, const Vec& v, const IntVec& alpha);

struct ConeCertificate {
    bool holds = false;
    double pairing = 0.0;
    std::string reason;
    std::string conclusion;
};

/// Checks p* in the interior of the dual cone C*, alpha in C and <p*, alpha> <= c.
ConeCertificate cone_certificate(const Vec& pstar, const IntVec& alpha, double c, const Cone& C);

struct NestedBound {
    std::vector<double> lengths;
    double sup = 0.0;
    /// sup over the probe set of the innermost body's gauge.
    double bound = 0.0;
    bool bounded = false;
};

/// l_alpha for nested bodies K_0 in K_1 in ... (nesting checked by support
/// comparison on probe directions; DomainError on violation) and the bound
/// sup_A F_0^* from the probe covectors A.
NestedBound nested_capacity_bound(const std::vector<ConvexBody>& bodies, const IntVec& alpha,
                                  const std::vector<Vec>& probes);

enum class SqueezePair { SimplexIntoSlab, BallIntoCylinder };

struct NonsqueezingVerdict {
    bool embeddable = false;
    double source_capacity = 0.0;
    double target_capacity = 0.0;
};

/// Class-e_1 capacities of the source (simplex of size s or ball of radius s)
/// and the target (slab or cylinder of half-width r, axis e_1) in dimension n;
/// embeddable iff source <= target.
NonsqueezingVerdict nonsqueezing_verdict(double s, double r, SqueezePair pair, int n = 2);

struct ExistenceCertificate {
    bool guaranteed = false;
    double threshold = 0.0;
    std::string conclusion;
};

/// True iff m >= C_BPS(U, alpha), with U optionally shifted by a constant
/// covector p* (the body U - p*). Requires U bounded with 0 interior.
ExistenceCertificate existence_threshold(const ConvexBody& U, double m, const IntVec& alpha,
                                         const std::optional<Vec>& pstar = std::nullopt);

struct SqueezeResult {
    int iterations = 0;
    /// Unit eigenvector of A for the eigenvalue of largest modulus; the fiber
    /// map A^{-T} contracts <p, u> by 1 / lambda.
    Vec direction;
    double lambda = 0.0;
    /// max over the fiber body of |<(A^{-T})^k p, u>| for k = 0..iterations.
    std::vector<double> widths;
    /// ceil(log(widths[0] / r) / log lambda), or 0.
    int predicted = 0;
    bool verified = false;
};

/// Smallest n with (A^{-T})^n U inside {|<p, u>| <= r}, by explicit iteration of
/// vertex images (support values for non-polytopal bodies), then checked with
/// `contains` on the slab. Requires A hyperbolic with a real dominant eigenvalue.
SqueezeResult squeeze_min_iterations(const Mat& A, const ConvexBody& U, double r, int max_iterations = 10000);

} // namespace finslercaps
