#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "ksbetas/error.hpp"
#include "ksbetas/sbeta.hpp"
#include "ksbetas/special_fn.hpp"
#include "oracles.hpp"

using namespace ksb;
using namespace ksb::sbeta;

namespace {

double beta_log_pdf_ref(double x, double a, double b) {
    return (a - 1) * std::log(x) + (b - 1) * std::log1p(-x) -
           (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

double support_integral(BetaShape s, double delta, int power, double center = 0.0) {
    return oracle::integrate(
        [&](double x) {
            return std::pow(x - center, power) * std::exp(log_pdf_on_support(x, s, delta));
        },
        -delta, 1.0 + delta);
}

std::vector<double> sample_sbeta(BetaShape s, double delta, std::size_t n, std::uint64_t seed) {
    oracle::InverseCdfSampler sampler(
        [&](double x) { return log_pdf_on_support(x, s, delta); }, -delta, 1.0 + delta);
    std::mt19937_64 rng(seed);
    std::vector<double> out(n);
    for (auto& v : out) v = sampler(rng);
    return out;
}

std::pair<double, double> mean_var(const std::vector<double>& x) {
    double m = 0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    double q = 0;
    for (double v : x) q += (v - m) * (v - m);
    return {m, q / static_cast<double>(x.size())};
}

const ConstraintConfig kDefault{};

}  // namespace

TEST_CASE("log_pdf point values") {
    CHECK(log_pdf(0.5, {1, 1}, 0.15) == doctest::Approx(0.0));
    CHECK(std::abs(log_pdf(0.3, {2, 5}, 0.0) - std::log(30 * 0.3 * std::pow(0.7, 4))) < 1e-13);
    CHECK_THROWS_AS(log_pdf(-0.1, {2, 2}, 0.1), DomainError);
    CHECK_THROWS_AS(log_pdf(0.5, {0, 2}, 0.1), DomainError);
    CHECK_THROWS_AS(log_pdf(0.5, {2, 2}, -0.1), DomainError);
}

TEST_CASE("log_pdf saturates instead of returning infinities") {
    CHECK(log_pdf(0.0, {0.5, 2}, 0.0) == kLogDensitySaturation);
    CHECK(log_pdf(1.0, {2, 0.5}, 0.0) == kLogDensitySaturation);
    CHECK(log_pdf(0.0, {3, 2}, 0.0) == -kLogDensitySaturation);
    CHECK(std::isfinite(log_pdf(0.0, {0.5, 0.5}, 0.15)));
}

TEST_CASE("the printed density integrates to the incomplete-Beta mass over [0, 1]") {
    // With y = (x + δ)/(1 + 2δ), ∫₀¹ = (1 + 2δ)(I_{y(1)} − I_{y(0)}) for Beta(3, 9).
    const double got = oracle::integrate(
        [](double x) { return std::exp(log_pdf(x, {3, 9}, 0.15)); }, 0.0, 1.0);
    CHECK(std::abs(got - 1.1374657078) < 1e-8);
    const double on_support = support_integral({3, 9}, 0.15, 0);
    CHECK(std::abs(on_support - 1.0) < 1e-10);
}

TEST_CASE("normalization, moments and mode against quadrature") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> shape(0.5, 50.0);
    for (double delta : {0.0, 0.15, 0.5}) {
        for (int i = 0; i < 8; ++i) {
            const BetaShape s{shape(rng), shape(rng)};
            CAPTURE(s.alpha);
            CAPTURE(s.beta);
            CAPTURE(delta);
            CHECK(std::abs(support_integral(s, delta, 0) - 1.0) <= 1e-6);
            const double mu = support_integral(s, delta, 1);
            CHECK(std::abs(mean(s, delta) - mu) <= 1e-7);
            CHECK(std::abs(variance(s, delta) - support_integral(s, delta, 2, mu)) <= 1e-7);
        }
    }
}

TEST_CASE("delta = 0 reduces to the Beta density") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> shape(0.5, 50.0);
    std::uniform_real_distribution<double> u(1e-6, 1 - 1e-6);
    for (int i = 0; i < 500; ++i) {
        const double a = shape(rng), b = shape(rng), x = u(rng);
        const double ref = beta_log_pdf_ref(x, a, b);
        CHECK(std::abs(log_pdf(x, {a, b}, 0.0) - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
    }
}

TEST_CASE("multivariate log_pdf") {
    const SBetaParams uniform({1, 1}, {1, 1}, 0.15);
    const std::vector<double> x{0.3, 0.7};
    CHECK(log_pdf(x, uniform) == doctest::Approx(0.0));

    const SBetaParams p({3, 1.5, 2}, {9, 4, 1.2}, 0.15);
    const std::vector<double> vertex{1, 0, 0};
    CHECK(std::isfinite(log_pdf(vertex, p)));
    const std::vector<double> y{0.2, 0.5, 0.3};
    double sum = 0;
    for (std::size_t n = 0; n < 3; ++n) sum += log_pdf(y[n], p.coordinate(n), p.delta);
    CHECK(log_pdf(y, p) == doctest::Approx(sum).epsilon(1e-14));

    CHECK_THROWS_AS(log_pdf(x, p), ShapeError);
    const std::vector<double> off{0.2, 0.5, 0.5};
    CHECK_THROWS_AS(log_pdf(off, p), DomainError);
}

TEST_CASE("mean, variance, mode and concentration closed forms") {
    CHECK(mean({4, 4}, 0.3) == doctest::Approx(0.5));
    CHECK(std::abs(mean({3, 9}, 0.15) - 0.175) < 1e-15);
    CHECK(std::abs(mean({2, 5}, 0.0) - 2.0 / 7.0) < 1e-15);

    CHECK(std::abs(variance({2, 5}, 0.0) - 10.0 / 392.0) < 1e-15);
    CHECK(std::abs(variance({3, 9}, 0.15) - 27.0 / 1872.0 * 1.69) < 1e-15);
    CHECK(std::abs(variance({3, 9}, 0.15) - 0.024375) < 1e-15);
    CHECK(variance({3, 9}, 0.4) == doctest::Approx(variance({3, 9}, 0.0) * 1.8 * 1.8));

    CHECK(mode({4, 4}, 0.2) == doctest::Approx(0.5));
    CHECK(std::abs(mode({3, 9}, 0.15) - 0.11) < 1e-15);
    CHECK(std::abs(mode({2, 5}, 0.0) - 0.2) < 1e-15);
    CHECK_THROWS_AS(mode({1, 1}, 0.1), DomainError);
    CHECK_THROWS_AS(mode({0.5, 1.5}, 0.1), DomainError);

    CHECK(concentration({3, 9}) == 10);
    CHECK(concentration({0.5, 0.5}) == -1);
    CHECK(concentration({1, 1}) == 0);
}

TEST_CASE("mode matches a fine-grid argmax") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> shape(1.05, 50.0);
    for (int i = 0; i < 5; ++i) {
        const BetaShape s{shape(rng), shape(rng)};
        const double delta = 0.15;
        constexpr int kGrid = 1000000;
        double best = -1e300;
        double arg = 0;
        for (int g = 0; g <= kGrid; ++g) {
            const double x = static_cast<double>(g) / kGrid;
            const double v = log_pdf(x, s, delta);
            if (v > best) {
                best = v;
                arg = x;
            }
        }
        CHECK(std::abs(std::clamp(mode(s, delta), 0.0, 1.0) - arg) <= 2e-6);
    }
}

TEST_CASE("mode/concentration parametrization") {
    const auto s = shape_from_mode_concentration(0.11, 10, 0.15);
    CHECK(std::abs(s.alpha - 3) < 1e-13);
    CHECK(std::abs(s.beta - 9) < 1e-13);
    const auto t = shape_from_mode_concentration(0.5, 2, 0.0);
    CHECK(t.alpha == doctest::Approx(2));
    CHECK(t.beta == doctest::Approx(2));
    const auto v = shape_from_mode_concentration(1.0, 5, 0.15);
    CHECK(std::abs(v.alpha - (1 + 5 * 1.15 / 1.3)) < 1e-14);
    CHECK(std::abs(v.beta - (1 + 5 * 0.15 / 1.3)) < 1e-14);
    CHECK(std::abs(mode(v, 0.15) - 1.0) < 1e-14);
    CHECK_THROWS_AS(shape_from_mode_concentration(1.2, 5, 0.1), DomainError);
    CHECK_THROWS_AS(shape_from_mode_concentration(0.5, 0, 0.1), DomainError);

    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> shape(0.5, 50.0);
    for (int i = 0; i < 500; ++i) {
        const BetaShape p{shape(rng), shape(rng)};
        const double delta = (i % 3) * 0.2;
        if (concentration(p) <= 0) continue;
        const double m = mode(p, delta);
        if (m < 0 || m > 1) continue;
        const auto back = shape_from_mode_concentration(m, concentration(p), delta);
        CHECK(std::abs(back.alpha - p.alpha) <= 1e-10 * std::max(1.0, p.alpha));
        CHECK(std::abs(back.beta - p.beta) <= 1e-10 * std::max(1.0, p.beta));
    }
}

TEST_CASE("method of moments") {
    auto e = mom_estimate(0.175, 0.024375, 0.15);
    CHECK(std::abs(e.shape.alpha - 3) < 1e-9);
    CHECK(std::abs(e.shape.beta - 9) < 1e-9);
    CHECK_FALSE(e.variance_clamped);
    e = mom_estimate(0.5, 0.05, 0.0);
    CHECK(std::abs(e.shape.alpha - 2) < 1e-12);
    CHECK(std::abs(e.shape.beta - 2) < 1e-12);

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> shape(0.5, 50.0);
    for (int i = 0; i < 300; ++i) {
        const BetaShape p{shape(rng), shape(rng)};
        const double delta = (i % 3) * 0.15;
        const auto back = mom_estimate(mean(p, delta), variance(p, delta), delta).shape;
        CHECK(std::abs(back.alpha - p.alpha) <= 1e-9 * std::max(1.0, p.alpha));
        CHECK(std::abs(back.beta - p.beta) <= 1e-9 * std::max(1.0, p.beta));
    }

    const auto clamped = mom_estimate(0.4, 0.0, 0.15);
    CHECK(clamped.variance_clamped);
    CHECK(concentration(clamped.shape) > 1e6);
    // A variance above the two-point bound implies negative shapes.
    CHECK_THROWS_AS(mom_estimate(0.5, 0.5, 0.0), EstimationError);
    CHECK_THROWS_AS(mom_estimate(1.5, 0.01, 0.15), DomainError);
    const auto floored = mom_estimate_floored(0.5, 0.5, 0.0);
    CHECK(floored.alpha == kMomShapeFloor);
    CHECK(floored.beta == kMomShapeFloor);
}

TEST_CASE("method of moments on a large sampled set") {
    const auto x = sample_sbeta({3, 9}, 0.15, 1000000, 99);
    const auto [m, v] = mean_var(x);
    const auto e = mom_estimate(m, v, 0.15).shape;
    CHECK(std::abs(e.alpha - 3) / 3 < 0.02);
    CHECK(std::abs(e.beta - 9) / 9 < 0.02);
}

TEST_CASE("MLE fixed point at exact sufficient statistics") {
    // For Y = (X + δ)/(1 + 2δ) ~ Beta(α, β): E ln Y = ψ(α) − ψ(α + β).
    const LogMoments stats{digamma(3) - digamma(12), digamma(9) - digamma(12)};
    const auto r = mle_from_moments(stats, {1, 1});
    CHECK(r.converged);
    CHECK(std::abs(r.shape.alpha - 3) < 1e-6 * 30);
    CHECK(std::abs(r.shape.beta - 9) < 1e-6 * 30);
    const auto exact = mle_from_moments(stats, {3, 9});
    CHECK(std::abs(exact.shape.alpha - 3) < 1e-6);
    CHECK(std::abs(exact.shape.beta - 9) < 1e-6);
}

TEST_CASE("MLE on sampled data") {
    const auto x = sample_sbeta({3, 9}, 0.15, 100000, 5);
    const BetaShape init{1.5, 2.5};
    const auto r = mle_estimate(x, {}, 0.15, init);
    CHECK(r.converged);
    CHECK(std::abs(r.shape.alpha - 3) / 3 < 0.03);
    CHECK(std::abs(r.shape.beta - 9) / 9 < 0.03);
    CHECK(mean_neg_log_likelihood(x, {}, r.shape, 0.15) <=
          mean_neg_log_likelihood(x, {}, init, 0.15) + 1e-6);

    // Weights act as repetition counts.
    const std::vector<double> pts{0.1, 0.2, 0.4};
    const std::vector<double> w{2, 1, 1};
    const std::vector<double> rep{0.1, 0.1, 0.2, 0.4};
    const auto a = mle_estimate(pts, w, 0.1, {2, 2});
    const auto b = mle_estimate(rep, {}, 0.1, {2, 2});
    CHECK(a.shape.alpha == doctest::Approx(b.shape.alpha).epsilon(1e-12));
    CHECK(a.shape.beta == doctest::Approx(b.shape.beta).epsilon(1e-12));

    CHECK_THROWS_AS(mle_estimate(std::vector<double>{}, {}, 0.1, {2, 2}), DomainError);
}

TEST_CASE("MLE on a Dirac sample is capped by the constraint") {
    const std::vector<double> x(50, 0.3);
    BetaShape s{};
    try {
        s = mle_estimate(x, {}, 0.15, {2, 2}).shape;
    } catch (const ConvergenceError&) {
        s = mom_estimate_floored(0.3, 0.0, 0.15);
    }
    const auto c = constrain(s, 0.15, kDefault);
    CHECK(concentration(c) == doctest::Approx(165).epsilon(1e-12));
    CHECK(std::abs(mode(c, 0.15) - 0.3) < 1e-2);
}

TEST_CASE("constrain examples") {
    CHECK(constrain(BetaShape{3, 9}, 0.15, kDefault) == BetaShape{3, 9});
    const auto big = constrain(BetaShape{100, 100}, 0.15, kDefault);
    CHECK(big.alpha == doctest::Approx(83.5).epsilon(1e-12));
    CHECK(big.beta == doctest::Approx(83.5).epsilon(1e-12));
    const auto bimodal = constrain(BetaShape{0.5, 0.5}, 0.15, kDefault);
    CHECK(concentration(bimodal) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mode(bimodal, 0.15) == doctest::Approx(0.5).epsilon(1e-12));
    const auto flat = constrain(BetaShape{1.5, 0.5}, 0.15, kDefault);
    CHECK(concentration(flat) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mode(flat, 0.15) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("constrain invariants over random shapes") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> lg(std::log(1e-2), std::log(500.0));
    std::uniform_real_distribution<double> dl(0.0, 0.5);
    const ConstraintConfig cfgs[] = {{1, 165}, {0.5, 20}, {2, 2}};
    for (int i = 0; i < 3000; ++i) {
        const BetaShape s{std::exp(lg(rng)), std::exp(lg(rng))};
        const double delta = dl(rng);
        const auto& c = cfgs[i % 3];
        const auto once = constrain(s, delta, c);
        const auto twice = constrain(once, delta, c);
        CHECK(once == twice);
        const double lam = concentration(once);
        CHECK(lam >= c.tau_minus);
        CHECK(lam <= c.tau_plus);
        const double lam_in = concentration(s);
        if (lam_in > 0) {
            const double m = mode(s, delta);
            if (m >= 0 && m <= 1) CHECK(std::abs(mode(once, delta) - m) <= 1e-10);
        }
        if (lam_in >= c.tau_minus && lam_in <= c.tau_plus) CHECK(once == s);
    }
}

TEST_CASE("constraint projection avoids bimodal and Dirac fits") {
    // Two tight groups near the ends of [0, 1].
    std::vector<double> bimodal;
    for (int i = 0; i < 50; ++i) {
        bimodal.push_back(0.01 + 0.001 * i);
        bimodal.push_back(0.99 - 0.001 * i);
    }
    const auto [m, v] = mean_var(bimodal);
    const auto raw = mom_estimate(m, v, 0.0).shape;
    CHECK(concentration(raw) < 0);
    CHECK(concentration(constrain(raw, 0.0, kDefault)) == doctest::Approx(1.0).epsilon(1e-12));

    const auto dirac = mom_estimate_floored(0.42, 0.0, 0.15);
    CHECK(concentration(constrain(dirac, 0.15, kDefault)) ==
          doctest::Approx(165.0).epsilon(1e-12));
}

TEST_CASE("SBetaParams and ConstraintConfig validation") {
    CHECK_THROWS_AS(SBetaParams({1, 2}, {1}, 0.1), ShapeError);
    CHECK_THROWS_AS(SBetaParams({1, -2}, {1, 1}, 0.1), DomainError);
    CHECK_THROWS_AS(SBetaParams({1, 2}, {1, 1}, -0.1), DomainError);
    CHECK_THROWS_AS((ConstraintConfig{2, 1}.validate()), ConfigError);
    CHECK_THROWS_AS((ConstraintConfig{0, 1}.validate()), ConfigError);
    const SBetaParams p({0.5, 400}, {0.5, 3}, 0.15);
    const auto c = constrain(p, kDefault);
    for (std::size_t n = 0; n < c.dim(); ++n) {
        CHECK(concentration(c.coordinate(n)) >= 1.0);
        CHECK(concentration(c.coordinate(n)) <= 165.0);
    }
}
