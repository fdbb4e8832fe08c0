#include "ksbetas/align_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ksbetas/error.hpp"

namespace ksb {
namespace {

void check_lengths(std::span<const int> a, std::span<const int> b, const char* fn) {
    if (a.size() != b.size()) {
        throw ShapeError(std::string(fn) + ": label vectors differ in length (" +
                         std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    }
}

// Maps labels to dense ids ordered by label value.
std::vector<std::size_t> compress(std::span<const int> labels, std::size_t& blocks) {
    std::vector<int> values(labels.begin(), labels.end());
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    blocks = values.size();
    std::vector<std::size_t> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out[i] = static_cast<std::size_t>(
            std::lower_bound(values.begin(), values.end(), labels[i]) - values.begin());
    }
    return out;
}

double entropy(const std::vector<std::size_t>& counts, double total) {
    double h = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / total;
        h -= p * std::log(p);
    }
    return h;
}

// Shared by the label-based and confusion-based paths so the two agree
// bit for bit: zero cells and empty blocks contribute nothing.
double nmi_from_table(const std::vector<std::vector<std::size_t>>& table) {
    const std::size_t rows = table.size();
    const std::size_t cols = rows == 0 ? 0 : table.front().size();
    std::vector<std::size_t> row_sum(rows, 0);
    std::vector<std::size_t> col_sum(cols, 0);
    std::size_t n = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            row_sum[r] += table[r][c];
            col_sum[c] += table[r][c];
            n += table[r][c];
        }
    }
    if (n == 0) return 1.0;
    const double total = static_cast<double>(n);
    const double ha = entropy(row_sum, total);
    const double hb = entropy(col_sum, total);
    if (ha + hb == 0.0) return 1.0;
    double mi = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t v = table[r][c];
            if (v == 0) continue;
            const double p = static_cast<double>(v) / total;
            mi += p * std::log(static_cast<double>(v) * total /
                               (static_cast<double>(row_sum[r]) * static_cast<double>(col_sum[c])));
        }
    }
    return std::clamp(mi / (0.5 * (ha + hb)), 0.0, 1.0);
}

struct ClassCounts {
    std::size_t both = 0;
    std::size_t pred = 0;
    std::size_t truth = 0;

    double iou() const {
        const std::size_t uni = pred + truth - both;
        return uni == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(uni);
    }
    bool present() const { return pred + truth > 0; }
};

double mean_of_present(const std::vector<ClassCounts>& counts) {
    double sum = 0.0;
    std::size_t present = 0;
    for (const auto& c : counts) {
        if (!c.present()) continue;
        sum += c.iou();
        ++present;
    }
    return present == 0 ? 1.0 : sum / static_cast<double>(present);
}

double one_hot_distance(const std::vector<double>& mode, std::size_t cls) {
    double s = 0.0;
    for (std::size_t n = 0; n < mode.size(); ++n) {
        const double d = mode[n] - (n == cls ? 1.0 : 0.0);
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace

std::string_view to_string(AlignMethod m) {
    return m == AlignMethod::kHungarian ? "hungarian" : "argmax";
}

std::vector<int> AlignmentMap::apply(std::span<const int> cluster_labels) const {
    std::vector<int> out(cluster_labels.size());
    for (std::size_t i = 0; i < cluster_labels.size(); ++i) {
        const int k = cluster_labels[i];
        if (k < 0 || static_cast<std::size_t>(k) >= cluster_to_class.size()) {
            throw DomainError("alignment: cluster label " + std::to_string(k) + " out of range");
        }
        out[i] = cluster_to_class[static_cast<std::size_t>(k)];
    }
    return out;
}

bool AlignmentMap::is_bijective(std::size_t num_classes) const {
    if (cluster_to_class.size() != num_classes) return false;
    std::vector<bool> seen(num_classes, false);
    for (int c : cluster_to_class) {
        if (c < 0 || static_cast<std::size_t>(c) >= num_classes || seen[static_cast<std::size_t>(c)]) {
            return false;
        }
        seen[static_cast<std::size_t>(c)] = true;
    }
    return true;
}

std::vector<int> solve_assignment(std::span<const double> cost, std::size_t n) {
    if (cost.size() != n * n) throw ShapeError("solve_assignment: cost matrix is not n×n");
    if (n == 0) return {};
    for (double c : cost) {
        if (!std::isfinite(c)) throw DomainError("solve_assignment: non-finite cost");
    }
    // Shortest augmenting path with row/column potentials, 1-based internally.
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    std::vector<bool> used(n + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), kInf);
        std::fill(used.begin(), used.end(), false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> col_of_row(n, -1);
    for (std::size_t j = 1; j <= n; ++j) col_of_row[p[j] - 1] = static_cast<int>(j - 1);
    return col_of_row;
}

AlignmentMap hungarian_align(const std::vector<std::vector<double>>& centroid_modes) {
    const std::size_t k = centroid_modes.size();
    for (const auto& m : centroid_modes) {
        if (m.size() != k) {
            throw ConfigError("hungarian alignment needs as many clusters as classes (K = " +
                              std::to_string(k) + ", D = " + std::to_string(m.size()) + ")");
        }
    }
    std::vector<double> cost(k * k);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t c = 0; c < k; ++c) cost[j * k + c] = one_hot_distance(centroid_modes[j], c);
    }
    return {solve_assignment(cost, k), AlignMethod::kHungarian};
}

AlignmentMap argmax_align(const std::vector<std::vector<double>>& centroid_modes) {
    AlignmentMap out;
    out.method = AlignMethod::kArgmax;
    out.cluster_to_class.reserve(centroid_modes.size());
    for (const auto& m : centroid_modes) {
        if (m.empty()) throw ShapeError("argmax alignment: empty mode vector");
        out.cluster_to_class.push_back(
            static_cast<int>(std::max_element(m.begin(), m.end()) - m.begin()));
    }
    return out;
}

double alignment_cost(const std::vector<std::vector<double>>& centroid_modes,
                      const AlignmentMap& map) {
    if (map.cluster_to_class.size() != centroid_modes.size()) {
        throw ShapeError("alignment_cost: map and centroids differ in length");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < centroid_modes.size(); ++j) {
        total += one_hot_distance(centroid_modes[j],
                                  static_cast<std::size_t>(map.cluster_to_class[j]));
    }
    return total;
}

double nmi(std::span<const int> a, std::span<const int> b) {
    check_lengths(a, b, "nmi");
    std::size_t ra = 0;
    std::size_t rb = 0;
    const auto ia = compress(a, ra);
    const auto ib = compress(b, rb);
    std::vector<std::vector<std::size_t>> table(ra, std::vector<std::size_t>(rb, 0));
    for (std::size_t i = 0; i < a.size(); ++i) ++table[ia[i]][ib[i]];
    return nmi_from_table(table);
}

double accuracy(std::span<const int> pred, std::span<const int> truth) {
    check_lengths(pred, truth, "accuracy");
    if (pred.empty()) return 1.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == truth[i] ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(pred.size());
}

double iou(std::span<const int> pred, std::span<const int> truth, int c) {
    check_lengths(pred, truth, "iou");
    ClassCounts counts;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] == c;
        const bool t = truth[i] == c;
        counts.both += (p && t) ? 1 : 0;
        counts.pred += p ? 1 : 0;
        counts.truth += t ? 1 : 0;
    }
    return counts.iou();
}

double mean_iou(std::span<const int> pred, std::span<const int> truth, std::size_t num_classes) {
    check_lengths(pred, truth, "mean_iou");
    std::vector<ClassCounts> counts(num_classes);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const auto in_range = [&](int v) { return v >= 0 && static_cast<std::size_t>(v) < num_classes; };
        if (in_range(pred[i])) ++counts[static_cast<std::size_t>(pred[i])].pred;
        if (in_range(truth[i])) ++counts[static_cast<std::size_t>(truth[i])].truth;
        if (pred[i] == truth[i] && in_range(pred[i])) ++counts[static_cast<std::size_t>(pred[i])].both;
    }
    return mean_of_present(counts);
}

MetricReport evaluate(std::span<const int> clusters, std::span<const int> truth,
                      const AlignmentMap& map, std::size_t num_clusters, std::size_t num_classes) {
    check_lengths(clusters, truth, "evaluate");
    MetricReport r;
    r.confusion.assign(num_clusters, std::vector<std::size_t>(num_classes, 0));
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        const int k = clusters[i];
        const int d = truth[i];
        if (k < 0 || static_cast<std::size_t>(k) >= num_clusters) {
            throw DomainError("evaluate: cluster label " + std::to_string(k) + " out of range");
        }
        if (d < 0 || static_cast<std::size_t>(d) >= num_classes) {
            throw DomainError("evaluate: class label " + std::to_string(d) + " out of range");
        }
        ++r.confusion[static_cast<std::size_t>(k)][static_cast<std::size_t>(d)];
    }
    const auto pred = map.apply(clusters);
    r.nmi = nmi(clusters, truth);
    r.accuracy = accuracy(pred, truth);
    r.per_class_iou.resize(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) {
        r.per_class_iou[c] = iou(pred, truth, static_cast<int>(c));
    }
    r.mean_iou = mean_iou(pred, truth, num_classes);
    return r;
}

MetricReport metrics_from_confusion(const std::vector<std::vector<std::size_t>>& confusion,
                                    const AlignmentMap& map) {
    const std::size_t k = confusion.size();
    const std::size_t d = k == 0 ? 0 : confusion.front().size();
    if (map.cluster_to_class.size() != k) {
        throw ShapeError("metrics_from_confusion: map length differs from cluster count");
    }
    MetricReport r;
    r.confusion = confusion;
    // Drop empty clusters and classes so the table matches the label-based one.
    std::vector<std::vector<std::size_t>> table;
    std::vector<bool> col_used(d, false);
    for (const auto& row : confusion) {
        for (std::size_t c = 0; c < d; ++c) col_used[c] = col_used[c] || row[c] > 0;
    }
    for (const auto& row : confusion) {
        std::vector<std::size_t> kept;
        std::size_t sum = 0;
        for (std::size_t c = 0; c < d; ++c) {
            if (col_used[c]) kept.push_back(row[c]);
            sum += row[c];
        }
        if (sum > 0) table.push_back(std::move(kept));
    }
    r.nmi = nmi_from_table(table);

    std::vector<ClassCounts> counts(d);
    std::size_t n = 0;
    std::size_t correct = 0;
    for (std::size_t j = 0; j < k; ++j) {
        const int mapped = map.cluster_to_class[j];
        for (std::size_t c = 0; c < d; ++c) {
            const std::size_t v = confusion[j][c];
            n += v;
            counts[c].truth += v;
            if (mapped >= 0 && static_cast<std::size_t>(mapped) < d) {
                counts[static_cast<std::size_t>(mapped)].pred += v;
                if (static_cast<std::size_t>(mapped) == c) {
                    counts[c].both += v;
                    correct += v;
                }
            }
        }
    }
    r.accuracy = n == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(n);
    r.per_class_iou.resize(d);
    for (std::size_t c = 0; c < d; ++c) r.per_class_iou[c] = counts[c].iou();
    r.mean_iou = mean_of_present(counts);
    return r;
}

}  // namespace ksb
