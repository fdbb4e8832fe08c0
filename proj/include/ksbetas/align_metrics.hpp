#pragma once

// Mapping clusters onto ground-truth classes, and the evaluation metrics
// computed on the mapped labels.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace ksb {

enum class AlignMethod { kHungarian, kArgmax };

std::string_view to_string(AlignMethod m);

struct AlignmentMap {
    std::vector<int> cluster_to_class;
    AlignMethod method = AlignMethod::kHungarian;

    // Applies the map to a vector of cluster labels.
    std::vector<int> apply(std::span<const int> cluster_labels) const;
    bool is_bijective(std::size_t num_classes) const;
};

// Minimum-cost perfect matching on a square cost matrix (row-major, n×n).
// Returns col_of_row; ties resolve deterministically.
std::vector<int> solve_assignment(std::span<const double> cost, std::size_t n);

// Cluster j is matched to one class so that the total Euclidean distance
// between the mode vectors and their one-hot targets is minimal. Requires
// K == D; throws ConfigError otherwise.
AlignmentMap hungarian_align(const std::vector<std::vector<double>>& centroid_modes);

// Each cluster goes to the largest coordinate of its mode vector (ties to
// the lowest index). Several clusters can land on the same class.
AlignmentMap argmax_align(const std::vector<std::vector<double>>& centroid_modes);

// Σ_j ‖mode_j − e_{map(j)}‖₂.
double alignment_cost(const std::vector<std::vector<double>>& centroid_modes,
                      const AlignmentMap& map);

// Normalized mutual information with the (H(A) + H(B)) / 2 normalizer and
// natural logs. Labels are arbitrary non-negative ints. Two single-block
// partitions score 1.
double nmi(std::span<const int> a, std::span<const int> b);

double accuracy(std::span<const int> pred, std::span<const int> truth);

// |pred = c ∧ truth = c| / |pred = c ∨ truth = c|; 1 when c appears in neither.
double iou(std::span<const int> pred, std::span<const int> truth, int c);

// Mean IoU over classes [0, num_classes) that appear in pred or truth.
double mean_iou(std::span<const int> pred, std::span<const int> truth, std::size_t num_classes);

struct MetricReport {
    double nmi = 0.0;
    double accuracy = 0.0;
    std::vector<double> per_class_iou;
    double mean_iou = 0.0;
    // confusion[k][d]: points in cluster k whose true class is d.
    std::vector<std::vector<std::size_t>> confusion;
};

// Computes every metric for one run. `clusters` are raw cluster ids in
// [0, K); accuracy and IoU use map.apply(clusters) against `truth` in [0, D).
MetricReport evaluate(std::span<const int> clusters, std::span<const int> truth,
                      const AlignmentMap& map, std::size_t num_clusters, std::size_t num_classes);

// The same metrics derived only from a confusion matrix and alignment map.
MetricReport metrics_from_confusion(const std::vector<std::vector<std::size_t>>& confusion,
                                    const AlignmentMap& map);

}  // namespace ksb
