#include "ksbetas/sbeta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ksbetas/error.hpp"
#include "ksbetas/special_fn.hpp"

namespace ksb {
namespace {

constexpr double kSimplexTol = 1e-6;
constexpr double kScaledMeanMargin = 1e-9;

void require_shape(BetaShape s) {
    if (!(s.alpha > 0.0) || !(s.beta > 0.0) || !std::isfinite(s.alpha) ||
        !std::isfinite(s.beta)) {
        throw DomainError("sBeta shape parameters must be positive and finite (alpha=" +
                          std::to_string(s.alpha) + ", beta=" + std::to_string(s.beta) + ")");
    }
}

void require_delta(double delta) {
    if (!(delta >= 0.0) || !std::isfinite(delta)) {
        throw DomainError("sBeta scale delta must be nonnegative and finite, got " +
                          std::to_string(delta));
    }
}

// coef · ln(base) with the limits 0·ln 0 = 0 and ±∞ otherwise.
double scaled_log(double coef, double base) {
    if (coef == 0.0) return 0.0;
    if (base > 0.0) return coef * std::log(base);
    return coef > 0.0 ? -std::numeric_limits<double>::infinity()
                      : std::numeric_limits<double>::infinity();
}

double saturate(double v) {
    if (std::isnan(v)) return -kLogDensitySaturation;
    return std::clamp(v, -kLogDensitySaturation, kLogDensitySaturation);
}

double log_pdf_kernel(double x, BetaShape s, double delta) {
    const double v = scaled_log(s.alpha - 1.0, x + delta) +
                     scaled_log(s.beta - 1.0, 1.0 + delta - x) - log_beta(s.alpha, s.beta) -
                     (s.alpha + s.beta - 2.0) * std::log1p(2.0 * delta);
    return saturate(v);
}

// Nudges the larger shape down (or up) by single ulps until λ lands in range.
// Called after reconstructing from (mode, λ), where rounding can leave λ a few
// ulps outside the bound it was set to.
BetaShape nudge_into_range(BetaShape s, const ConstraintConfig& c) {
    double& big = (s.alpha >= s.beta) ? s.alpha : s.beta;
    while (s.alpha + s.beta - 2.0 > c.tau_plus) big = std::nextafter(big, 0.0);
    while (s.alpha + s.beta - 2.0 < c.tau_minus)
        big = std::nextafter(big, std::numeric_limits<double>::infinity());
    return s;
}

}  // namespace

SBetaParams::SBetaParams(std::vector<double> a, std::vector<double> b, double d)
    : alpha(std::move(a)), beta(std::move(b)), delta(d) {
    validate();
}

void SBetaParams::validate() const {
    if (alpha.size() != beta.size()) {
        throw ShapeError("SBetaParams: alpha has " + std::to_string(alpha.size()) +
                         " entries but beta has " + std::to_string(beta.size()));
    }
    require_delta(delta);
    for (std::size_t n = 0; n < alpha.size(); ++n) require_shape(coordinate(n));
}

void ConstraintConfig::validate() const {
    if (!(tau_minus > 0.0) || !(tau_minus <= tau_plus) || !std::isfinite(tau_plus)) {
        throw ConfigError("constraints require 0 < tau_minus <= tau_plus < inf (got " +
                          std::to_string(tau_minus) + ", " + std::to_string(tau_plus) + ")");
    }
}

namespace sbeta {

double log_pdf(double x, BetaShape s, double delta) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw DomainError("sBeta log_pdf: x must lie in [0, 1], got " + std::to_string(x));
    }
    require_shape(s);
    require_delta(delta);
    return log_pdf_kernel(x, s, delta);
}

double log_pdf_on_support(double x, BetaShape s, double delta) {
    require_shape(s);
    require_delta(delta);
    if (!(x >= -delta && x <= 1.0 + delta)) {
        throw DomainError("sBeta log_pdf_on_support: x outside [-delta, 1 + delta]");
    }
    return saturate(log_pdf_kernel(x, s, delta) - std::log1p(2.0 * delta));
}

double log_pdf(std::span<const double> x, const SBetaParams& p) {
    if (x.size() != p.dim()) {
        throw ShapeError("sBeta log_pdf: point has " + std::to_string(x.size()) +
                         " coordinates, parameters have " + std::to_string(p.dim()));
    }
    p.validate();
    double sum = 0.0;
    for (double v : x) {
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("sBeta log_pdf: coordinate outside [0, 1]");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kSimplexTol) {
        throw DomainError("sBeta log_pdf: point is not on the simplex (sum = " +
                          std::to_string(sum) + ")");
    }
    return log_pdf_unchecked(x, p);
}

double log_pdf_unchecked(std::span<const double> x, const SBetaParams& p) {
    double total = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        total += log_pdf_kernel(x[n], p.coordinate(n), p.delta);
    }
    return saturate(total);
}

double mean(BetaShape s, double delta) {
    require_shape(s);
    require_delta(delta);
    return s.alpha / (s.alpha + s.beta) * (1.0 + 2.0 * delta) - delta;
}

double variance(BetaShape s, double delta) {
    require_shape(s);
    require_delta(delta);
    const double sum = s.alpha + s.beta;
    const double scale = 1.0 + 2.0 * delta;
    return s.alpha * s.beta / (sum * sum * (sum + 1.0)) * scale * scale;
}

double mode(BetaShape s, double delta) {
    require_shape(s);
    require_delta(delta);
    const double lambda = s.alpha + s.beta - 2.0;
    if (lambda == 0.0) {
        throw DomainError("sBeta mode is undefined when alpha + beta = 2");
    }
    return (s.alpha - 1.0 + delta * (s.alpha - s.beta)) / lambda;
}

double concentration(BetaShape s) { return s.alpha + s.beta - 2.0; }

BetaShape shape_from_mode_concentration(double mode, double lambda, double delta) {
    if (!(mode >= 0.0 && mode <= 1.0)) {
        throw DomainError("shape_from_mode_concentration: mode must lie in [0, 1], got " +
                          std::to_string(mode));
    }
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw DomainError("shape_from_mode_concentration: lambda must be positive, got " +
                          std::to_string(lambda));
    }
    require_delta(delta);
    const double scale = 1.0 + 2.0 * delta;
    return {1.0 + lambda * (mode + delta) / scale, 1.0 + lambda * (1.0 + delta - mode) / scale};
}

MomEstimate mom_estimate(double sample_mean, double sample_var, double delta) {
    require_delta(delta);
    if (!std::isfinite(sample_mean) || !std::isfinite(sample_var) || sample_var < 0.0) {
        throw DomainError("mom_estimate: mean and variance must be finite, variance >= 0");
    }
    const double scale = 1.0 + 2.0 * delta;
    const double mu = (sample_mean + delta) / scale;
    if (!(mu > 0.0 && mu < 1.0)) {
        throw DomainError("mom_estimate: mean " + std::to_string(sample_mean) +
                          " outside (-delta, 1 + delta)");
    }
    MomEstimate out;
    out.variance_clamped = sample_var < kMomVarianceFloor;
    const double v = std::max(sample_var, kMomVarianceFloor);
    const double factor = mu * (1.0 - mu) * scale * scale / v - 1.0;
    out.shape = {factor * mu, factor * (1.0 - mu)};
    if (!(out.shape.alpha > 0.0) || !(out.shape.beta > 0.0)) {
        throw EstimationError("mom_estimate: variance " + std::to_string(sample_var) +
                              " too large for mean " + std::to_string(sample_mean) +
                              "; implied shapes are non-positive");
    }
    return out;
}

BetaShape mom_estimate_floored(double sample_mean, double sample_var, double delta) {
    const double scale = 1.0 + 2.0 * delta;
    const double mu =
        std::clamp((sample_mean + delta) / scale, kScaledMeanMargin, 1.0 - kScaledMeanMargin);
    const double v = std::max(sample_var, kMomVarianceFloor);
    const double factor = mu * (1.0 - mu) * scale * scale / v - 1.0;
    return {std::max(factor * mu, kMomShapeFloor), std::max(factor * (1.0 - mu), kMomShapeFloor)};
}

LogMoments log_moments(std::span<const double> x, std::span<const double> weights,
                       double delta) {
    require_delta(delta);
    if (x.empty()) throw DomainError("log_moments: empty sample");
    if (!weights.empty() && weights.size() != x.size()) {
        throw ShapeError("log_moments: weights and sample differ in length");
    }
    const double log_scale = std::log1p(2.0 * delta);
    double lo = 0.0;
    double hi = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        if (w == 0.0) continue;
        lo += w * std::log(x[i] + delta);
        hi += w * std::log(1.0 + delta - x[i]);
        total += w;
    }
    if (!(total > 0.0)) throw DomainError("log_moments: total weight is zero");
    return {lo / total - log_scale, hi / total - log_scale};
}

MleResult mle_from_moments(LogMoments stats, BetaShape init, const MleOptions& opts) {
    require_shape(init);
    if (!std::isfinite(stats.log_lo) || !std::isfinite(stats.log_hi)) {
        throw ConvergenceError("sBeta MLE: sufficient statistics are not finite (sample touches "
                               "the support boundary)",
                               std::numeric_limits<double>::quiet_NaN());
    }
    MleResult out{init, 0, false};
    double a = init.alpha;
    double b = init.beta;
    for (int it = 1; it <= opts.max_iters; ++it) {
        double next_a = 0.0;
        double next_b = 0.0;
        try {
            const double psi_sum = digamma(a + b);
            next_a = inv_digamma(psi_sum + stats.log_lo);
            next_b = inv_digamma(psi_sum + stats.log_hi);
        } catch (const Error& e) {
            throw ConvergenceError(std::string("sBeta MLE diverged: ") + e.what(),
                                   std::numeric_limits<double>::infinity());
        }
        if (!std::isfinite(next_a) || !std::isfinite(next_b)) {
            throw ConvergenceError("sBeta MLE produced a non-finite iterate",
                                   std::numeric_limits<double>::infinity());
        }
        const double change = std::max(std::abs(next_a - a), std::abs(next_b - b));
        a = next_a;
        b = next_b;
        out.iterations = it;
        if (change <= opts.tol) {
            out.converged = true;
            break;
        }
    }
    out.shape = {a, b};
    return out;
}

MleResult mle_estimate(std::span<const double> x, std::span<const double> weights, double delta,
                       BetaShape init, const MleOptions& opts) {
    return mle_from_moments(log_moments(x, weights, delta), init, opts);
}

double mean_neg_log_likelihood(std::span<const double> x, std::span<const double> weights,
                               BetaShape s, double delta) {
    require_shape(s);
    const LogMoments m = log_moments(x, weights, delta);
    return -((s.alpha - 1.0) * m.log_lo + (s.beta - 1.0) * m.log_hi - log_beta(s.alpha, s.beta));
}

BetaShape constrain(BetaShape s, double delta, const ConstraintConfig& c) {
    require_shape(s);
    require_delta(delta);
    const double lambda = s.alpha + s.beta - 2.0;
    if (lambda >= c.tau_minus && lambda <= c.tau_plus) return s;

    // α + β = 2 gives mode numerator (α − 1)(1 + 2δ): the density is monotone
    // and its supremum sits at the end the sign points to.
    double m = 0.5;
    if (lambda != 0.0) {
        m = (s.alpha - 1.0 + delta * (s.alpha - s.beta)) / lambda;
    } else if (s.alpha != 1.0) {
        m = s.alpha > 1.0 ? 1.0 : 0.0;
    }
    m = std::clamp(m, 0.0, 1.0);
    const double target = lambda < c.tau_minus ? c.tau_minus : c.tau_plus;
    return nudge_into_range(shape_from_mode_concentration(m, target, delta), c);
}

SBetaParams constrain(const SBetaParams& p, const ConstraintConfig& c) {
    c.validate();
    SBetaParams out = p;
    for (std::size_t n = 0; n < p.dim(); ++n) {
        out.set_coordinate(n, constrain(p.coordinate(n), p.delta, c));
    }
    return out;
}

}  // namespace sbeta
}  // namespace ksb
