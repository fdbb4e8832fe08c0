#pragma once

// Comparison methods: distortion k-means (Euclidean, Manhattan/k-medians, KL,
// Hilbert), the argmax labeling, and k-Dirs (Dirichlet mixture clustering).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ksbetas/simplex.hpp"

namespace ksb {

enum class DistortionKind { kEuclidean, kManhattan, kKL, kHilbert };
enum class PrototypeRule { kMean, kMedian, kMebMidpoint };

struct Distortion {
    DistortionKind kind = DistortionKind::kEuclidean;
    PrototypeRule rule = PrototypeRule::kMean;

    // The pairing used by each named method.
    static Distortion euclidean() { return {DistortionKind::kEuclidean, PrototypeRule::kMean}; }
    static Distortion manhattan() { return {DistortionKind::kManhattan, PrototypeRule::kMedian}; }
    static Distortion kl() { return {DistortionKind::kKL, PrototypeRule::kMean}; }
    static Distortion hilbert() { return {DistortionKind::kHilbert, PrototypeRule::kMebMidpoint}; }
};

std::string_view to_string(DistortionKind kind);

// Σ_n x_n ln(x_n / θ_n) with 0 ln 0 = 0. A θ with zeros is interior-projected
// first, so the result is finite.
double kl_divergence(std::span<const double> x, std::span<const double> theta);

// Hilbert projective distance on the simplex: with t₀ ≤ 0 and t₁ ≥ 1 the
// parameters where the line x + t(θ − x) leaves the simplex,
// log(1 − 1/t₀) − log(1 − 1/t₁). Boundary inputs are interior-projected.
double hilbert_distance(std::span<const double> x, std::span<const double> theta);

double squared_euclidean(std::span<const double> x, std::span<const double> theta);
double manhattan(std::span<const double> x, std::span<const double> theta);

double distortion(DistortionKind kind, std::span<const double> x,
                  std::span<const double> theta);

struct DistortionRunConfig {
    std::size_t k = 0;
    Distortion distortion;
    int max_iters = 25;
    // Initial prototypes; empty means the first k simplex vertices.
    std::vector<std::vector<double>> init;
    // Farthest-pair search for the MEB midpoint is exact up to this many
    // members and runs on a uniform subsample of this size beyond it.
    std::size_t meb_exact_limit = 2000;
    std::uint64_t seed = 0;
};

struct DistortionFit {
    std::vector<std::vector<double>> prototypes;
    Assignment assignment;
    // Σ_i distortion(x_i, θ_label_i) after each assignment step.
    std::vector<double> objective_trace;
    int iterations = 0;
    bool converged = false;
};

DistortionFit distortion_kmeans(const SimplexDataset& data, const DistortionRunConfig& cfg);

// Prototype of one cluster under `rule`; exposed for testing.
std::vector<double> cluster_prototype(const SimplexDataset& data,
                                      std::span<const std::size_t> members, PrototypeRule rule,
                                      std::size_t meb_exact_limit = 2000, std::uint64_t seed = 0);

// label_i = argmax_n x_{i,n}, ties to the lowest index.
Assignment argmax_baseline(const SimplexDataset& data);

struct DirichletParams {
    std::vector<double> alpha;

    void validate() const;
};

double dirichlet_log_pdf(std::span<const double> x, const DirichletParams& p);

struct DirichletMleOptions {
    int max_iters = 1000;
    double tol = 1e-6;
};

// Minka's fixed point ψ(α_n) ← ψ(Σα) + mean_log[n], solved with inv_digamma,
// until max|Δα| ≤ tol and every residual |ψ(α_n) − ψ(Σα) − mean_log[n]| is
// within 10·tol. Throws ConvergenceError on a non-finite iterate or when the
// cap is reached.
DirichletParams dirichlet_mle_from_stats(std::span<const double> mean_log,
                                         const DirichletParams& init,
                                         const DirichletMleOptions& opts = {});

// Weighted sample version (empty weights = unit weights). Points are
// interior-projected; a coordinate that is zero on every point has no support
// and raises ConvergenceError.
DirichletParams dirichlet_mle(const SimplexDataset& sample, std::span<const double> weights,
                              const DirichletParams& init, const DirichletMleOptions& opts = {});

// Moment-matching starting point for the fixed point.
DirichletParams dirichlet_moment_init(std::span<const double> mean, std::span<const double> mean_sq);

struct KDirsConfig {
    std::size_t k = 0;
    int max_iters = 25;
    DirichletMleOptions mle;
    // Clamp α_n ≥ 1 + unimodal_eps after every estimate.
    bool unimodal = true;
    double unimodal_eps = 1e-3;
    // Initial α for cluster j: 1 + initial_concentration on coordinate j, 1 elsewhere.
    double initial_concentration = 82.5;
};

struct KDirsFit {
    std::vector<DirichletParams> models;
    std::vector<double> proportions;
    Assignment assignment;
    int iterations = 0;
    bool converged = false;
};

// Hard-assignment Dirichlet mixture clustering with adaptive proportions.
// Estimator failures propagate as ConvergenceError.
KDirsFit k_dirs(const SimplexDataset& data, const KDirsConfig& cfg);

}  // namespace ksb
