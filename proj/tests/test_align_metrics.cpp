#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "ksbetas/align_metrics.hpp"
#include "ksbetas/error.hpp"
#include "oracles.hpp"

using namespace ksb;

TEST_CASE("Hungarian alignment on simple inputs") {
    const std::vector<std::vector<double>> at_vertices{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    const auto id = hungarian_align(at_vertices);
    CHECK(id.cluster_to_class == std::vector<int>{0, 1, 2});
    CHECK(id.method == AlignMethod::kHungarian);
    CHECK(id.is_bijective(3));

    const std::vector<double> cost{0, 1, 1, 0};
    CHECK(solve_assignment(cost, 2) == std::vector<int>{0, 1});
    const std::vector<double> flipped{1, 0, 0, 1};
    CHECK(solve_assignment(flipped, 2) == std::vector<int>{1, 0});

    const std::vector<std::vector<double>> rotated{{0.1, 0.8, 0.1}, {0.2, 0.1, 0.7}, {0.6, 0.3, 0.1}};
    CHECK(hungarian_align(rotated).cluster_to_class == std::vector<int>{1, 2, 0});

    const std::vector<std::vector<double>> wrong{{0.5, 0.5}, {0.2, 0.8}, {0.9, 0.1}};
    CHECK_THROWS_AS(hungarian_align(wrong), ConfigError);
}

TEST_CASE("Hungarian equals brute force for every K up to 7") {
    std::mt19937_64 rng(2718);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (std::size_t k = 1; k <= 7; ++k) {
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> cost(k * k);
            for (auto& c : cost) c = u(rng);
            // Integer costs on some trials make ties likely.
            if (trial % 4 == 0) {
                for (auto& c : cost) c = std::floor(c / 3);
            }
            const auto sol = solve_assignment(cost, k);
            double total = 0;
            std::vector<bool> used(k, false);
            for (std::size_t r = 0; r < k; ++r) {
                REQUIRE(sol[r] >= 0);
                CHECK_FALSE(used[static_cast<std::size_t>(sol[r])]);
                used[static_cast<std::size_t>(sol[r])] = true;
                total += cost[r * k + static_cast<std::size_t>(sol[r])];
            }
            CHECK(std::abs(total - oracle::brute_force_assignment(cost, k)) <= 1e-9);
        }
    }
}

TEST_CASE("argmax alignment") {
    const std::vector<std::vector<double>> distinct{{0.7, 0.2, 0.1}, {0.1, 0.1, 0.8}, {0.2, 0.5, 0.3}};
    CHECK(argmax_align(distinct).cluster_to_class == hungarian_align(distinct).cluster_to_class);
    const std::vector<std::vector<double>> collide{{0.7, 0.2, 0.1}, {0.6, 0.3, 0.1}, {0.1, 0.1, 0.8}};
    const auto m = argmax_align(collide);
    CHECK(m.cluster_to_class == std::vector<int>{0, 0, 2});
    CHECK_FALSE(m.is_bijective(3));
    CHECK(m.method == AlignMethod::kArgmax);
}

TEST_CASE("Hungarian cost never exceeds a bijective argmax") {
    std::mt19937_64 rng(14);
    std::exponential_distribution<double> e(1.0);
    int compared = 0;
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<std::vector<double>> modes(4, std::vector<double>(4));
        for (auto& m : modes) {
            double s = 0;
            for (auto& v : m) s += (v = e(rng));
            for (auto& v : m) v /= s;
        }
        const auto am = argmax_align(modes);
        if (!am.is_bijective(4)) continue;
        ++compared;
        CHECK(alignment_cost(modes, hungarian_align(modes)) <= alignment_cost(modes, am) + 1e-12);
    }
    CHECK(compared > 10);
}

TEST_CASE("NMI") {
    const std::vector<int> a{0, 0, 1, 1};
    CHECK(nmi(a, std::vector<int>{1, 1, 0, 0}) == doctest::Approx(1.0));
    CHECK(std::abs(nmi(a, std::vector<int>{0, 1, 0, 1})) < 1e-15);

    const std::vector<int> b{0, 0, 0, 1};
    const double ha = std::log(2.0);
    const double hb = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25));
    const double mi = 0.5 * std::log(4.0 / 3.0) + 0.25 * std::log(2.0 / 3.0) + 0.25 * std::log(2.0);
    CHECK(std::abs(nmi(a, b) - mi / (0.5 * (ha + hb))) < 1e-14);

    const std::vector<int> one(4, 0);
    CHECK(nmi(one, one) == 1.0);
    CHECK(nmi(one, a) == 0.0);
    CHECK_THROWS_AS(nmi(a, std::vector<int>{0, 1}), ShapeError);

    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> lab(0, 4);
    for (int t = 0; t < 50; ++t) {
        std::vector<int> x(200), y(200), relabeled(200);
        for (std::size_t i = 0; i < 200; ++i) {
            x[i] = lab(rng);
            y[i] = lab(rng) % 3;
            relabeled[i] = 10 - x[i];
        }
        CHECK(std::abs(nmi(x, y) - nmi(y, x)) <= 1e-12);
        CHECK(std::abs(nmi(x, y) - nmi(relabeled, y)) <= 1e-12);
        CHECK(nmi(x, y) >= 0.0);
        CHECK(nmi(x, y) <= 1.0);
    }
}

TEST_CASE("accuracy and IoU") {
    const std::vector<int> same{0, 1, 2, 1};
    CHECK(accuracy(same, same) == 1.0);
    CHECK(mean_iou(same, same, 3) == 1.0);

    const std::vector<int> p{0, 0, 1, 1}, q{1, 1, 0, 0};
    CHECK(accuracy(p, q) == 0.0);
    CHECK(mean_iou(p, q, 2) == 0.0);

    const std::vector<int> pred{0, 0, 1}, truth{0, 1, 1};
    CHECK(accuracy(pred, truth) == doctest::Approx(2.0 / 3.0));
    CHECK(iou(pred, truth, 0) == 0.5);
    CHECK(iou(pred, truth, 1) == 0.5);
    CHECK(mean_iou(pred, truth, 2) == 0.5);
    // Class 2 is absent from both: IoU 1, left out of the mean.
    CHECK(iou(pred, truth, 2) == 1.0);
    CHECK(mean_iou(pred, truth, 3) == 0.5);
}

TEST_CASE("metrics from the confusion matrix equal the direct ones") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> cl(0, 3);
    std::uniform_int_distribution<int> tr(0, 2);
    for (int t = 0; t < 40; ++t) {
        std::vector<int> clusters(300), truth(300);
        for (std::size_t i = 0; i < 300; ++i) {
            clusters[i] = cl(rng);
            truth[i] = (t % 2 == 0) ? tr(rng) : std::min(clusters[i], 2);
        }
        const AlignmentMap map{{2, 0, 1, 1}, AlignMethod::kArgmax};
        const auto direct = evaluate(clusters, truth, map, 4, 3);
        const auto from = metrics_from_confusion(direct.confusion, map);
        CHECK(direct.nmi == from.nmi);
        CHECK(direct.accuracy == from.accuracy);
        CHECK(direct.mean_iou == from.mean_iou);
        CHECK(direct.per_class_iou == from.per_class_iou);
        std::size_t total = 0;
        for (const auto& row : direct.confusion) {
            for (auto v : row) total += v;
        }
        CHECK(total == 300);
    }
    const std::vector<int> c{0, 5}, d{0, 1};
    CHECK_THROWS_AS(evaluate(c, d, {{0, 1}, AlignMethod::kHungarian}, 2, 2), DomainError);
}
