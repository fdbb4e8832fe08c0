#pragma once

// k-sBetas: hard-assignment clustering of simplex points with a product of
// sBeta marginals per cluster, fitted by block-coordinate descent over
// assignments, mixing proportions and shape parameters.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ksbetas/sbeta.hpp"
#include "ksbetas/simplex.hpp"

namespace ksb {

enum class Estimator { kMoM, kMLE };
enum class PiMode { kAdaptive, kUniform };
enum class InitMode { kVertex, kPrototypes };

struct ClusterRunConfig {
    std::size_t k = 0;
    double delta = 0.15;
    ConstraintConfig constraints;
    int max_iters = 25;
    Estimator estimator = Estimator::kMoM;
    sbeta::MleOptions mle;
    PiMode pi_mode = PiMode::kAdaptive;
    InitMode init = InitMode::kVertex;
    // Initial per-cluster modes for InitMode::kPrototypes (k rows of length D).
    std::vector<std::vector<double>> prototypes;
    // Concentration of the initial densities; unset means τ⁺ / 2.
    std::optional<double> initial_concentration;

    double lambda0() const { return initial_concentration.value_or(constraints.tau_plus / 2.0); }
    void validate() const;
};

struct ClusterModel {
    std::vector<SBetaParams> clusters;
    // Proportions count / N. Zero for empty clusters.
    std::vector<double> proportions;
    // Lower bound applied to proportions inside log π. fit() sets it to
    // 1 / (10 N) so emptied clusters can recover; 0 keeps ln 0 = −∞.
    double proportion_floor = 0.0;
    double delta = 0.15;
    ConstraintConfig constraints;
    PiMode pi_mode = PiMode::kAdaptive;

    std::size_t k() const noexcept { return clusters.size(); }
    std::size_t dim() const noexcept { return clusters.empty() ? 0 : clusters.front().dim(); }

    // The log-prior term used by assignment and the objective.
    double log_prior(std::size_t cluster) const;

    // Per-cluster mode vectors (each coordinate's sBeta mode clamped to
    // [0, 1]); the centroid representative used for alignment.
    std::vector<std::vector<double>> modes() const;
};

struct IterationRecord {
    int iteration = 0;
    // Objective after the parameter step with the previous labels (NaN at t = 0).
    double objective_after_params = 0.0;
    double objective_after_assign = 0.0;
    // Objective after the proportion step; equals objective_after_assign in
    // uniform-π mode.
    double objective = 0.0;
    std::size_t changed = 0;
    std::size_t reseeded = 0;
};

struct FitTrace {
    std::vector<IterationRecord> iterations;
    bool converged = false;
};

struct FitResult {
    ClusterModel model;
    Assignment assignment;
    FitTrace trace;
};

// Cluster j starts peaked at vertex j: per coordinate mode 1 on n = j and 0
// elsewhere, concentration λ₀, uniform proportions. Requires k ≤ d.
ClusterModel vertex_init(std::size_t k, std::size_t d, double delta,
                         const ConstraintConfig& constraints,
                         std::optional<double> initial_concentration = std::nullopt);

// Same construction with arbitrary per-cluster mode vectors.
ClusterModel prototype_init(const std::vector<std::vector<double>>& prototypes, double delta,
                            const ConstraintConfig& constraints,
                            std::optional<double> initial_concentration = std::nullopt);

// label_i = argmax_k [log_prior(k) + log g(x_i; Θ_k)], ties to the lowest k.
Assignment assign(const SimplexDataset& data, const ClusterModel& model);

// π_k = |{i : label_i = k}| / N.
std::vector<double> update_proportions(const Assignment& a, std::size_t k);

struct ParamUpdateStats {
    std::size_t reseeded = 0;
    std::size_t mle_failures = 0;
};

// Re-estimates every cluster's shapes from its members with the configured
// estimator and projects them onto the λ constraints. Empty clusters and
// clusters whose estimator fails are re-seeded at the vertex where the current
// mixture puts the least density.
ClusterModel update_params(const SimplexDataset& data, const Assignment& a,
                           const ClusterModel& current, const ClusterRunConfig& cfg,
                           ParamUpdateStats* stats = nullptr);

// −Σ_i [log_prior(label_i) + log g(x_i; Θ_label_i)].
double objective(const SimplexDataset& data, const ClusterModel& model, const Assignment& a);

// Runs the full alternating scheme (see ClusterRunConfig for knobs).
FitResult fit(const SimplexDataset& data, const ClusterRunConfig& cfg);

}  // namespace ksb
