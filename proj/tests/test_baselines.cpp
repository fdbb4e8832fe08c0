#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "ksbetas/baselines.hpp"
#include "ksbetas/bench_data.hpp"
#include "ksbetas/error.hpp"
#include "ksbetas/special_fn.hpp"

using namespace ksb;

namespace {

std::vector<double> random_interior(std::mt19937_64& rng, std::size_t d) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> v(d);
    double s = 0;
    for (auto& x : v) s += (x = e(rng) + 1e-3);
    for (auto& x : v) x /= s;
    return v;
}

// Hilbert distance through the equivalent max-ratio form.
double hilbert_ratio(const std::vector<double>& x, const std::vector<double>& y) {
    double a = 0, b = 0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        a = std::max(a, x[n] / y[n]);
        b = std::max(b, y[n] / x[n]);
    }
    return std::log(a * b);
}

}  // namespace

TEST_CASE("KL divergence") {
    const std::vector<double> x{0.2, 0.3, 0.5};
    CHECK(kl_divergence(x, x) == 0.0);
    CHECK(std::abs(kl_divergence(std::vector<double>{1, 0}, std::vector<double>{0.5, 0.5}) -
                   std::log(2.0)) < 1e-15);
    const std::vector<double> p{0.9, 0.1}, q{0.5, 0.5};
    CHECK(kl_divergence(p, q) != doctest::Approx(kl_divergence(q, p)));
    const double sat = kl_divergence(std::vector<double>{0.5, 0.5}, std::vector<double>{1, 0});
    CHECK(std::isfinite(sat));
    CHECK(sat > 5.0);
    CHECK_THROWS_AS(kl_divergence(x, p), ShapeError);
}

TEST_CASE("Hilbert distance") {
    const std::vector<double> x{0.4, 0.6}, t{0.6, 0.4};
    CHECK(std::abs(hilbert_distance(x, t) - std::log(2.25)) < 1e-14);
    CHECK(hilbert_distance(x, x) == 0.0);
    const double edge = hilbert_distance(std::vector<double>{1, 0, 0}, std::vector<double>{0.2, 0.3, 0.5});
    CHECK(std::isfinite(edge));

    std::mt19937_64 rng(42);
    for (int i = 0; i < 200; ++i) {
        const auto a = random_interior(rng, 4);
        const auto b = random_interior(rng, 4);
        const auto c = random_interior(rng, 4);
        const double ab = hilbert_distance(a, b);
        CHECK(std::abs(ab - hilbert_distance(b, a)) <= 1e-10);
        CHECK(std::abs(ab - hilbert_ratio(a, b)) <= 1e-10 * std::max(1.0, ab));
        CHECK(hilbert_distance(a, c) <= ab + hilbert_distance(b, c) + 1e-9);
    }
}

TEST_CASE("Euclidean and Manhattan distortions") {
    const std::vector<double> x{0.2, 0.8}, y{0.5, 0.5};
    CHECK(squared_euclidean(x, y) == doctest::Approx(0.18));
    CHECK(manhattan(x, y) == doctest::Approx(0.6));
    CHECK(distortion(DistortionKind::kManhattan, x, y) == manhattan(x, y));
    CHECK(to_string(DistortionKind::kHilbert) == "hilbert");
}

TEST_CASE("cluster prototypes") {
    const auto data = SimplexDataset::from_rows(
        {0.1, 0.2, 0.7, 0.3, 0.3, 0.4, 0.2, 0.6, 0.2, 0.6, 0.1, 0.3}, 3);
    const std::vector<std::size_t> all{0, 1, 2, 3};
    const auto mean = cluster_prototype(data, all, PrototypeRule::kMean);
    CHECK(mean[0] == doctest::Approx(0.3));
    CHECK(mean[2] == doctest::Approx(0.4));

    // Medians (0.25, 0.25, 0.35) renormalized by 0.85.
    const auto med = cluster_prototype(data, all, PrototypeRule::kMedian);
    CHECK(med[0] == doctest::Approx(0.25 / 0.85));
    CHECK(med[1] == doctest::Approx(0.25 / 0.85));
    CHECK(med[2] == doctest::Approx(0.35 / 0.85));

    // The Hilbert-farthest pair is (row 2, row 0) or another; check against brute force.
    double best = -1;
    std::size_t ba = 0, bb = 0;
    for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = a + 1; b < 4; ++b) {
            const double d = hilbert_distance(data.row(a), data.row(b));
            if (d > best) {
                best = d;
                ba = a;
                bb = b;
            }
        }
    }
    const auto meb = cluster_prototype(data, all, PrototypeRule::kMebMidpoint);
    for (std::size_t n = 0; n < 3; ++n) {
        CHECK(meb[n] == doctest::Approx(0.5 * (data.row(ba)[n] + data.row(bb)[n])).epsilon(1e-8));
    }
    CHECK_THROWS_AS(cluster_prototype(data, std::vector<std::size_t>{}, PrototypeRule::kMean),
                    DomainError);
}

TEST_CASE("subsampled MEB prototype is deterministic in its seed") {
    const auto ds = sample_dirichlet_mixture(simu_spec(300, 5));
    std::vector<std::size_t> all(300);
    std::iota(all.begin(), all.end(), 0);
    const auto a = cluster_prototype(ds.data, all, PrototypeRule::kMebMidpoint, 50, 9);
    const auto b = cluster_prototype(ds.data, all, PrototypeRule::kMebMidpoint, 50, 9);
    CHECK(a == b);
    const auto exact = cluster_prototype(ds.data, all, PrototypeRule::kMebMidpoint, 300, 0);
    CHECK(std::abs(std::accumulate(exact.begin(), exact.end(), 0.0) - 1.0) < 1e-12);
}

TEST_CASE("the arithmetic mean minimizes the summed KL divergence") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> values;
        for (int i = 0; i < 6; ++i) {
            const auto p = random_interior(rng, 3);
            values.insert(values.end(), p.begin(), p.end());
        }
        const auto data = SimplexDataset::from_rows(values, 3);
        std::vector<std::size_t> all(6);
        std::iota(all.begin(), all.end(), 0);
        const auto mean = cluster_prototype(data, all, PrototypeRule::kMean);
        auto cost = [&](const std::vector<double>& theta) {
            double s = 0;
            for (std::size_t i = 0; i < 6; ++i) s += kl_divergence(data.row(i), theta);
            return s;
        };
        const double at_mean = cost(mean);
        double grid_min = 1e300;
        constexpr int kSteps = 200;
        for (int a = 1; a < kSteps; ++a) {
            for (int b = 1; a + b < kSteps; ++b) {
                const double t0 = static_cast<double>(a) / kSteps;
                const double t1 = static_cast<double>(b) / kSteps;
                grid_min = std::min(grid_min, cost({t0, t1, 1 - t0 - t1}));
            }
        }
        CHECK(at_mean <= grid_min + 1e-12);
        CHECK(grid_min - at_mean < 1e-2);
    }
}

TEST_CASE("distortion k-means separates point masses") {
    const auto data = SimplexDataset::from_rows({1, 0, 0, 0, 1, 0, 1, 0, 0, 0, 1, 0}, 3);
    for (const auto dist : {Distortion::euclidean(), Distortion::kl(), Distortion::manhattan(),
                            Distortion::hilbert()}) {
        DistortionRunConfig cfg;
        cfg.k = 2;
        cfg.distortion = dist;
        cfg.init = {{0.6, 0.2, 0.2}, {0.2, 0.6, 0.2}};
        const auto fit = distortion_kmeans(data, cfg);
        CHECK(fit.converged);
        CHECK(fit.assignment.labels == std::vector<int>{0, 1, 0, 1});
        CHECK(fit.prototypes[0][0] > 0.99);
        CHECK(fit.prototypes[1][1] > 0.99);
    }
}

TEST_CASE("distortion k-means re-seeds empty clusters") {
    const auto data = SimplexDataset::from_rows({0.9, 0.1, 0.85, 0.15, 0.1, 0.9, 0.2, 0.8}, 2);
    DistortionRunConfig cfg;
    cfg.k = 2;
    cfg.init = {{0.5, 0.5}, {0.5, 0.5}};  // ties: everything lands in cluster 0
    const auto fit = distortion_kmeans(data, cfg);
    CHECK(fit.assignment.labels[0] == fit.assignment.labels[1]);
    CHECK(fit.assignment.labels[2] == fit.assignment.labels[3]);
    CHECK(fit.assignment.labels[0] != fit.assignment.labels[2]);
}

TEST_CASE("Euclidean k-means objective is non-increasing") {
    const auto ds = sample_dirichlet_mixture(simu_spec(5000, 8));
    DistortionRunConfig cfg;
    cfg.k = 3;
    const auto fit = distortion_kmeans(ds.data, cfg);
    for (std::size_t t = 1; t < fit.objective_trace.size(); ++t) {
        CHECK(fit.objective_trace[t] <= fit.objective_trace[t - 1] * (1 + 1e-12));
    }
    CHECK(fit.iterations <= cfg.max_iters);
}

TEST_CASE("distortion k-means validation") {
    const auto data = SimplexDataset::from_rows({0.5, 0.5, 0.2, 0.8}, 2);
    DistortionRunConfig cfg;
    cfg.k = 3;
    CHECK_THROWS_AS(distortion_kmeans(data, cfg), ConfigError);
    cfg.k = 2;
    cfg.init = {{0.5, 0.5}};
    CHECK_THROWS_AS(distortion_kmeans(data, cfg), ConfigError);
    cfg.init = {{0.5, 0.5}, {0.2, 0.3, 0.5}};
    CHECK_THROWS_AS(distortion_kmeans(data, cfg), ShapeError);
}

TEST_CASE("argmax baseline") {
    const auto data = SimplexDataset::from_rows(
        {0.1, 0.7, 0.2, 1.0 / 3, 1.0 / 3, 1.0 / 3, 0.2, 0.2, 0.6}, 3);
    const auto a = argmax_baseline(data);
    CHECK(a.labels == std::vector<int>{1, 0, 2});
    CHECK(a.num_clusters == 3);

    // Squaring and renormalizing keeps the coordinate order, hence the labels.
    const auto ds = sample_dirichlet_mixture(simu_spec(1000, 2));
    std::vector<double> sq(ds.data.values().begin(), ds.data.values().end());
    for (std::size_t i = 0; i < ds.data.size(); ++i) {
        double s = 0;
        for (std::size_t n = 0; n < 3; ++n) s += (sq[i * 3 + n] *= sq[i * 3 + n]);
        for (std::size_t n = 0; n < 3; ++n) sq[i * 3 + n] /= s;
    }
    CHECK(argmax_baseline(SimplexDataset::from_rows(sq, 3)).labels ==
          argmax_baseline(ds.data).labels);
}

TEST_CASE("Dirichlet log density reduces to Beta in two dimensions") {
    const DirichletParams p{{2.5, 4.0}};
    for (double x : {0.1, 0.4, 0.9}) {
        const double ref = 1.5 * std::log(x) + 3.0 * std::log(1 - x) - log_beta(2.5, 4.0);
        CHECK(dirichlet_log_pdf(std::vector<double>{x, 1 - x}, p) == doctest::Approx(ref).epsilon(1e-13));
    }
    CHECK_THROWS_AS(dirichlet_log_pdf(std::vector<double>{0.5, 0.5}, DirichletParams{{1.0, -1.0}}),
                    DomainError);
}

TEST_CASE("Dirichlet MLE") {
    const std::vector<double> truth{2, 3, 4};
    std::vector<double> stats(3);
    for (std::size_t n = 0; n < 3; ++n) stats[n] = digamma(truth[n]) - digamma(9.0);
    const DirichletMleOptions opts;
    const auto fit = dirichlet_mle_from_stats(stats, {{1, 1, 1}}, opts);
    const double s = std::accumulate(fit.alpha.begin(), fit.alpha.end(), 0.0);
    for (std::size_t n = 0; n < 3; ++n) {
        CHECK(std::abs(fit.alpha[n] - truth[n]) < 1e-4);
        CHECK(std::abs(digamma(fit.alpha[n]) - digamma(s) - stats[n]) <= 10 * opts.tol);
    }

    const std::vector<double> sym(4, std::log(0.2));
    const auto sfit = dirichlet_mle_from_stats(sym, {{1, 2, 3, 4}});
    for (std::size_t n = 1; n < 4; ++n) CHECK(sfit.alpha[n] == doctest::Approx(sfit.alpha[0]).epsilon(1e-6));

    const auto zero = SimplexDataset::from_rows({0.5, 0.5, 0.0, 0.2, 0.8, 0.0}, 3);
    CHECK_THROWS_AS(dirichlet_mle(zero, {}, {{1, 1, 1}}), ConvergenceError);

    DirichletMleOptions tight;
    tight.max_iters = 1;
    CHECK_THROWS_AS(dirichlet_mle_from_stats(stats, {{1, 1, 1}}, tight), ConvergenceError);
}

TEST_CASE("Dirichlet MLE on sampled data") {
    DirichletSpec spec{{{{2, 3, 4}, 1.0}}, 50000, 12};
    const auto ds = sample_dirichlet_mixture(spec);
    const auto fit = dirichlet_mle(ds.data, {}, {{1, 1, 1}});
    CHECK(std::abs(fit.alpha[0] - 2) / 2 < 0.03);
    CHECK(std::abs(fit.alpha[1] - 3) / 3 < 0.03);
    CHECK(std::abs(fit.alpha[2] - 4) / 4 < 0.03);
    std::vector<double> w(ds.data.size(), 2.0);
    const auto wfit = dirichlet_mle(ds.data, w, {{1, 1, 1}});
    for (std::size_t n = 0; n < 3; ++n) CHECK(wfit.alpha[n] == doctest::Approx(fit.alpha[n]).epsilon(1e-9));
}

TEST_CASE("k-Dirs") {
    SUBCASE("K = 1 is a single Dirichlet fit") {
        DirichletSpec spec{{{{2, 3, 4}, 1.0}}, 5000, 3};
        const auto ds = sample_dirichlet_mixture(spec);
        KDirsConfig cfg;
        cfg.k = 1;
        cfg.unimodal = false;
        const auto fit = k_dirs(ds.data, cfg);
        const auto direct = dirichlet_mle(ds.data, {}, {{1, 1, 1}});
        CHECK(fit.converged);
        for (std::size_t n = 0; n < 3; ++n) {
            CHECK(fit.models[0].alpha[n] == doctest::Approx(direct.alpha[n]).epsilon(1e-4));
        }
    }
    SUBCASE("unimodal clamp changes fits on skewed data") {
        DirichletSpec spec{{{{0.4, 0.6, 3}, 0.5}, {{5, 1.5, 1}, 0.5}}, 3000, 4};
        const auto ds = sample_dirichlet_mixture(spec);
        KDirsConfig on;
        on.k = 2;
        auto off = on;
        off.unimodal = false;
        const auto a = k_dirs(ds.data, on);
        const auto b = k_dirs(ds.data, off);
        for (const auto& m : a.models) {
            for (double v : m.alpha) CHECK(v >= 1.0 + on.unimodal_eps);
        }
        bool below_one = false;
        for (const auto& m : b.models) {
            for (double v : m.alpha) below_one = below_one || v < 1.0;
        }
        CHECK(below_one);
    }
    SUBCASE("degenerate support fails loudly") {
        const auto zero = SimplexDataset::from_rows({0.5, 0.5, 0.0, 0.2, 0.8, 0.0, 0.4, 0.6, 0.0}, 3);
        KDirsConfig cfg;
        cfg.k = 1;
        CHECK_THROWS_AS(k_dirs(zero, cfg), ConvergenceError);
    }
    SUBCASE("deterministic") {
        const auto ds = sample_dirichlet_mixture(simu_spec(3000, 6));
        KDirsConfig cfg;
        cfg.k = 3;
        CHECK(k_dirs(ds.data, cfg).assignment == k_dirs(ds.data, cfg).assignment);
    }
}
