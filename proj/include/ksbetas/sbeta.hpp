#pragma once

// The scaled Beta (sBeta) density on [0, 1]:
//
//   f(x; α, β, δ) = (x + δ)^(α−1) (1 + δ − x)^(β−1) / (B(α, β) (1 + 2δ)^(α+β−2))
//
// i.e. a Beta density on y = (x + δ) / (1 + 2δ) rescaled back to x. δ = 0
// gives the plain Beta density. Concentration λ = α + β − 2 is positive
// exactly when the density is strictly unimodal.

#include <cstddef>
#include <span>
#include <vector>

namespace ksb {

// Shape parameters of one coordinate.
struct BetaShape {
    double alpha = 1.0;
    double beta = 1.0;

    friend bool operator==(const BetaShape&, const BetaShape&) = default;
};

// Per-coordinate shapes of a D-variate product of sBeta marginals, with the
// shared scale δ.
struct SBetaParams {
    std::vector<double> alpha;
    std::vector<double> beta;
    double delta = 0.0;

    SBetaParams() = default;
    SBetaParams(std::vector<double> a, std::vector<double> b, double d);

    std::size_t dim() const noexcept { return alpha.size(); }
    BetaShape coordinate(std::size_t n) const { return {alpha[n], beta[n]}; }
    void set_coordinate(std::size_t n, BetaShape s) {
        alpha[n] = s.alpha;
        beta[n] = s.beta;
    }

    // Throws DomainError/ShapeError when an invariant is broken.
    void validate() const;

    friend bool operator==(const SBetaParams&, const SBetaParams&) = default;
};

// Bounds on λ: τ⁻ keeps densities unimodal, τ⁺ keeps them away from Diracs.
struct ConstraintConfig {
    double tau_minus = 1.0;
    double tau_plus = 165.0;

    void validate() const;
};

// Magnitude returned instead of ±∞ by the log-density when δ = 0 and x sits on
// a boundary where the density vanishes or diverges.
inline constexpr double kLogDensitySaturation = 1e30;

// Variance floor used by the method of moments.
inline constexpr double kMomVarianceFloor = 1e-10;

// Shape floor applied when moments imply non-positive parameters.
inline constexpr double kMomShapeFloor = 1e-3;

namespace sbeta {

// Univariate log-density. Requires 0 ≤ x ≤ 1.
double log_pdf(double x, BetaShape s, double delta);

// Log-density of the sBeta law normalized over its full support
// [−δ, 1 + δ]: log_pdf(x) − ln(1 + 2δ). mean() and variance() are the moments
// of this law. Requires −δ ≤ x ≤ 1 + δ.
double log_pdf_on_support(double x, BetaShape s, double delta);

// Σ_n log_pdf(x[n], p.coordinate(n), p.delta). Requires x on the simplex
// within 1e-6 and x.size() == p.dim().
double log_pdf(std::span<const double> x, const SBetaParams& p);

// Same as above without the simplex/range checks, for inner loops over data
// that has already been validated.
double log_pdf_unchecked(std::span<const double> x, const SBetaParams& p);

double mean(BetaShape s, double delta);
double variance(BetaShape s, double delta);

// (α − 1 + δ(α − β)) / (α + β − 2). Throws DomainError when α + β = 2.
double mode(BetaShape s, double delta);

// λ = α + β − 2.
double concentration(BetaShape s);

// Inverse of (mode, concentration): requires 0 ≤ m ≤ 1 and λ > 0.
BetaShape shape_from_mode_concentration(double mode, double lambda, double delta);

struct MomEstimate {
    BetaShape shape;
    bool variance_clamped = false;
};

// Closed-form moment matching against the sBeta mean and variance. Variances
// below kMomVarianceFloor are raised to it (flagged). Throws EstimationError
// when the moments imply non-positive shapes, DomainError when the mean lies
// outside (−δ, 1 + δ).
MomEstimate mom_estimate(double sample_mean, double sample_var, double delta);

// Total variant used inside clustering: the scaled mean is pulled into
// [1e-9, 1 − 1e-9] and non-positive shapes are floored at kMomShapeFloor.
BetaShape mom_estimate_floored(double sample_mean, double sample_var, double delta);

// Sufficient statistics of the sBeta likelihood: weighted means of
// ln((x + δ)/(1 + 2δ)) and ln((1 + δ − x)/(1 + 2δ)).
struct LogMoments {
    double log_lo = 0.0;
    double log_hi = 0.0;
};

LogMoments log_moments(std::span<const double> x, std::span<const double> weights, double delta);

struct MleOptions {
    int max_iters = 500;
    double tol = 1e-6;
};

struct MleResult {
    BetaShape shape;
    int iterations = 0;
    bool converged = false;
};

// Fixed-point iteration
//   α ← ψ⁻¹(ψ(α + β) + log_lo),  β ← ψ⁻¹(ψ(α + β) + log_hi)
// from `init` until max(|Δα|, |Δβ|) ≤ tol or the iteration cap. Throws
// ConvergenceError when an iterate becomes non-finite.
MleResult mle_from_moments(LogMoments stats, BetaShape init, const MleOptions& opts = {});

// Weighted sample version. Empty `weights` means unit weights. Throws
// DomainError on an empty sample or zero total weight.
MleResult mle_estimate(std::span<const double> x, std::span<const double> weights, double delta,
                       BetaShape init, const MleOptions& opts = {});

// Mean negative log-likelihood of the sample with shape s (weights as above).
double mean_neg_log_likelihood(std::span<const double> x, std::span<const double> weights,
                               BetaShape s, double delta);

// Projects λ into [τ⁻, τ⁺] while keeping the mode. Coordinates already in
// range are returned unchanged, bit for bit; the projection is idempotent.
BetaShape constrain(BetaShape s, double delta, const ConstraintConfig& c);
SBetaParams constrain(const SBetaParams& p, const ConstraintConfig& c);

}  // namespace sbeta
}  // namespace ksb
