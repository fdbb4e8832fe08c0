#include "ksbetas/simplex.hpp"

#include <cmath>
#include <string>

#include "ksbetas/error.hpp"

namespace ksb {

SimplexDataset SimplexDataset::from_rows(std::vector<double> values, std::size_t dim,
                                         double tol) {
    if (dim == 0) {
        if (!values.empty()) throw ShapeError("SimplexDataset: dimension 0 with nonempty values");
        return {};
    }
    if (values.size() % dim != 0) {
        throw ShapeError("SimplexDataset: " + std::to_string(values.size()) +
                         " values do not form rows of dimension " + std::to_string(dim));
    }
    const std::size_t n = values.size() / dim;
    for (std::size_t i = 0; i < n; ++i) {
        double* r = values.data() + i * dim;
        double sum = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            if (!std::isfinite(r[j]) || r[j] < -tol || r[j] > 1.0 + tol) {
                throw DataError("row " + std::to_string(i) + ": entry " + std::to_string(j) +
                                    " = " + std::to_string(r[j]) + " is outside [0, 1]",
                                i);
            }
            if (r[j] < 0.0) r[j] = 0.0;
            sum += r[j];
        }
        if (std::abs(sum - 1.0) > tol) {
            throw DataError("row " + std::to_string(i) + " sums to " + std::to_string(sum) +
                                ", not a probability vector",
                            i);
        }
        for (std::size_t j = 0; j < dim; ++j) r[j] /= sum;
    }
    return SimplexDataset(std::move(values), n, dim);
}

SimplexDataset SimplexDataset::select(std::span<const std::size_t> rows) const {
    std::vector<double> out;
    out.reserve(rows.size() * d_);
    for (std::size_t i : rows) {
        if (i >= n_) throw ShapeError("SimplexDataset::select: row index out of range");
        auto r = row(i);
        out.insert(out.end(), r.begin(), r.end());
    }
    return SimplexDataset(std::move(out), rows.size(), d_);
}

std::vector<std::size_t> cluster_sizes(const Assignment& a) {
    std::vector<std::size_t> counts(a.num_clusters, 0);
    for (int l : a.labels) {
        if (l < 0 || static_cast<std::size_t>(l) >= a.num_clusters) {
            throw ShapeError("cluster label " + std::to_string(l) + " out of range");
        }
        ++counts[static_cast<std::size_t>(l)];
    }
    return counts;
}

void interior_project(std::span<const double> x, std::span<double> out, double eps) {
    const double denom = 1.0 + static_cast<double>(x.size()) * eps;
    for (std::size_t n = 0; n < x.size(); ++n) out[n] = (x[n] + eps) / denom;
}

}  // namespace ksb
