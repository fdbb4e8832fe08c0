#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ksb {

// Rows further than this from summing to one are rejected on ingestion;
// rows within it are renormalized.
inline constexpr double kSimplexRowTol = 1e-5;

// Interior projection used by KL, Hilbert and Dirichlet code paths:
// x ← (x + ε) / (1 + D ε).
inline constexpr double kInteriorEps = 1e-9;

// N points on the (D−1)-simplex, stored row-major.
class SimplexDataset {
public:
    SimplexDataset() = default;

    // Validates every row: entries in [0, 1] (tiny negatives within the row
    // tolerance are clipped to 0) and |Σ − 1| ≤ tol, then renormalizes.
    // Throws DataError carrying the offending row index.
    static SimplexDataset from_rows(std::vector<double> values, std::size_t dim,
                                    double tol = kSimplexRowTol);

    std::size_t size() const noexcept { return n_; }
    std::size_t dim() const noexcept { return d_; }
    bool empty() const noexcept { return n_ == 0; }

    std::span<const double> row(std::size_t i) const {
        return {values_.data() + i * d_, d_};
    }
    std::span<const double> values() const noexcept { return values_; }

    // Rows picked by index, in the given order.
    SimplexDataset select(std::span<const std::size_t> rows) const;

private:
    SimplexDataset(std::vector<double> values, std::size_t n, std::size_t d)
        : values_(std::move(values)), n_(n), d_(d) {}

    std::vector<double> values_;
    std::size_t n_ = 0;
    std::size_t d_ = 0;
};

// Hard point-to-cluster labels.
struct Assignment {
    std::vector<int> labels;
    std::size_t num_clusters = 0;

    std::size_t size() const noexcept { return labels.size(); }
    friend bool operator==(const Assignment&, const Assignment&) = default;
};

// Points per cluster.
std::vector<std::size_t> cluster_sizes(const Assignment& a);

// Writes the interior projection of x into out (same length).
void interior_project(std::span<const double> x, std::span<double> out,
                      double eps = kInteriorEps);

}  // namespace ksb
