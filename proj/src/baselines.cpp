#include "ksbetas/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "ksbetas/cluster.hpp"
#include "ksbetas/detail/compensated_sum.hpp"
#include "ksbetas/error.hpp"
#include "ksbetas/special_fn.hpp"

namespace ksb {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool has_nonpositive(std::span<const double> v) {
    return std::any_of(v.begin(), v.end(), [](double x) { return !(x > 0.0); });
}

std::vector<double> projected(std::span<const double> v) {
    std::vector<double> out(v.size());
    interior_project(v, out);
    return out;
}

void check_same_length(std::span<const double> x, std::span<const double> y, const char* fn) {
    if (x.size() != y.size()) {
        throw ShapeError(std::string(fn) + ": arguments differ in length (" +
                         std::to_string(x.size()) + " vs " + std::to_string(y.size()) + ")");
    }
}

std::vector<std::vector<double>> vertex_prototypes(std::size_t k, std::size_t d) {
    if (k > d) {
        throw ConfigError("vertex init needs k <= d (k = " + std::to_string(k) + ", d = " +
                          std::to_string(d) + ")");
    }
    std::vector<std::vector<double>> out(k, std::vector<double>(d, 0.0));
    for (std::size_t j = 0; j < k; ++j) out[j][j] = 1.0;
    return out;
}

std::vector<std::vector<std::size_t>> members_of(const Assignment& a) {
    std::vector<std::vector<std::size_t>> members(a.num_clusters);
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        members[static_cast<std::size_t>(a.labels[i])].push_back(i);
    }
    return members;
}

// Distortion evaluation against a fixed prototype, with the per-prototype
// preprocessing (projection, logs) done once.
class PrototypeDistance {
public:
    PrototypeDistance(DistortionKind kind, std::span<const double> theta)
        : kind_(kind), theta_(theta.begin(), theta.end()) {
        if (kind_ == DistortionKind::kKL) {
            const auto p = projected(theta);
            log_theta_.resize(p.size());
            for (std::size_t n = 0; n < p.size(); ++n) log_theta_[n] = std::log(p[n]);
        } else if (kind_ == DistortionKind::kHilbert && has_nonpositive(theta_)) {
            theta_ = projected(theta);
        }
    }

    double operator()(std::span<const double> x) const {
        switch (kind_) {
            case DistortionKind::kEuclidean:
                return squared_euclidean(x, theta_);
            case DistortionKind::kManhattan:
                return manhattan(x, theta_);
            case DistortionKind::kKL: {
                double v = 0.0;
                for (std::size_t n = 0; n < x.size(); ++n) {
                    if (x[n] > 0.0) v += x[n] * (std::log(x[n]) - log_theta_[n]);
                }
                return v;
            }
            case DistortionKind::kHilbert:
                return hilbert_distance(x, theta_);
        }
        return kInf;
    }

private:
    DistortionKind kind_;
    std::vector<double> theta_;
    std::vector<double> log_theta_;
};

double median_of(std::vector<double>& v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

double log_multivariate_beta(std::span<const double> alpha) {
    double s = 0.0;
    double sum = 0.0;
    for (double a : alpha) {
        s += log_gamma(a);
        sum += a;
    }
    return s - log_gamma(sum);
}

}  // namespace

std::string_view to_string(DistortionKind kind) {
    switch (kind) {
        case DistortionKind::kEuclidean: return "euclidean";
        case DistortionKind::kManhattan: return "manhattan";
        case DistortionKind::kKL: return "kl";
        case DistortionKind::kHilbert: return "hilbert";
    }
    return "unknown";
}

double kl_divergence(std::span<const double> x, std::span<const double> theta) {
    check_same_length(x, theta, "kl_divergence");
    std::vector<double> proj;
    if (has_nonpositive(theta)) {
        proj = projected(theta);
        theta = proj;
    }
    double v = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        if (x[n] > 0.0) v += x[n] * std::log(x[n] / theta[n]);
    }
    // Rounding can push KL(x‖x)-like values a hair below zero.
    return std::max(v, 0.0);
}

double hilbert_distance(std::span<const double> x, std::span<const double> theta) {
    check_same_length(x, theta, "hilbert_distance");
    std::vector<double> px;
    std::vector<double> pt;
    if (has_nonpositive(x)) {
        px = projected(x);
        x = px;
    }
    if (has_nonpositive(theta)) {
        pt = projected(theta);
        theta = pt;
    }
    // Coordinate n hits the boundary at t_n = x_n / (x_n − θ_n): t_n ≥ 1 when
    // x_n > θ_n, t_n < 0 when x_n < θ_n.
    double t0 = -kInf;
    double t1 = kInf;
    for (std::size_t n = 0; n < x.size(); ++n) {
        const double diff = x[n] - theta[n];
        if (diff == 0.0) continue;
        const double t = x[n] / diff;
        if (t <= 0.0) {
            t0 = std::max(t0, t);
        } else {
            t1 = std::min(t1, t);
        }
    }
    if (t0 == -kInf || t1 == kInf) return 0.0;  // x == θ
    return std::abs(std::log(1.0 - 1.0 / t0) - std::log(1.0 - 1.0 / t1));
}

double squared_euclidean(std::span<const double> x, std::span<const double> theta) {
    check_same_length(x, theta, "squared_euclidean");
    double v = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        const double d = x[n] - theta[n];
        v += d * d;
    }
    return v;
}

double manhattan(std::span<const double> x, std::span<const double> theta) {
    check_same_length(x, theta, "manhattan");
    double v = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) v += std::abs(x[n] - theta[n]);
    return v;
}

double distortion(DistortionKind kind, std::span<const double> x,
                  std::span<const double> theta) {
    switch (kind) {
        case DistortionKind::kEuclidean: return squared_euclidean(x, theta);
        case DistortionKind::kManhattan: return manhattan(x, theta);
        case DistortionKind::kKL: return kl_divergence(x, theta);
        case DistortionKind::kHilbert: return hilbert_distance(x, theta);
    }
    return kInf;
}

std::vector<double> cluster_prototype(const SimplexDataset& data,
                                      std::span<const std::size_t> members, PrototypeRule rule,
                                      std::size_t meb_exact_limit, std::uint64_t seed) {
    if (members.empty()) throw DomainError("cluster_prototype: empty cluster");
    const std::size_t d = data.dim();
    std::vector<double> out(d, 0.0);
    switch (rule) {
        case PrototypeRule::kMean: {
            std::vector<detail::CompensatedSum> sums(d);
            for (std::size_t i : members) {
                const auto x = data.row(i);
                for (std::size_t n = 0; n < d; ++n) sums[n].add(x[n]);
            }
            for (std::size_t n = 0; n < d; ++n) {
                out[n] = sums[n].value() / static_cast<double>(members.size());
            }
            return out;
        }
        case PrototypeRule::kMedian: {
            std::vector<double> column(members.size());
            double total = 0.0;
            for (std::size_t n = 0; n < d; ++n) {
                for (std::size_t m = 0; m < members.size(); ++m) column[m] = data.row(members[m])[n];
                out[n] = median_of(column);
                total += out[n];
            }
            if (total > 0.0) {
                for (double& v : out) v /= total;
            } else {
                std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(d));
            }
            return out;
        }
        case PrototypeRule::kMebMidpoint: {
            std::vector<std::size_t> pool(members.begin(), members.end());
            if (meb_exact_limit > 0 && pool.size() > meb_exact_limit) {
                std::mt19937_64 rng(seed);
                for (std::size_t m = 0; m < meb_exact_limit; ++m) {
                    const std::size_t span = pool.size() - m;
                    const std::size_t pick = m + static_cast<std::size_t>(rng() % span);
                    std::swap(pool[m], pool[pick]);
                }
                pool.resize(meb_exact_limit);
            }
            std::vector<std::vector<double>> pts;
            pts.reserve(pool.size());
            for (std::size_t i : pool) pts.push_back(projected(data.row(i)));
            std::size_t best_a = 0;
            std::size_t best_b = 0;
            double best = -1.0;
            for (std::size_t a = 0; a < pts.size(); ++a) {
                for (std::size_t b = a + 1; b < pts.size(); ++b) {
                    const double dist = hilbert_distance(pts[a], pts[b]);
                    if (dist > best) {
                        best = dist;
                        best_a = a;
                        best_b = b;
                    }
                }
            }
            std::vector<double> mid(d);
            for (std::size_t n = 0; n < d; ++n) {
                mid[n] = 0.5 * (data.row(pool[best_a])[n] + data.row(pool[best_b])[n]);
            }
            interior_project(mid, out);
            return out;
        }
    }
    return out;
}

DistortionFit distortion_kmeans(const SimplexDataset& data, const DistortionRunConfig& cfg) {
    if (cfg.k == 0) throw ConfigError("distortion k-means: k must be at least 1");
    if (cfg.max_iters < 1) throw ConfigError("distortion k-means: max_iters must be >= 1");
    if (data.size() < cfg.k) {
        throw ConfigError("distortion k-means: need at least k points");
    }
    const std::size_t d = data.dim();
    DistortionFit fit;
    fit.prototypes = cfg.init.empty() ? vertex_prototypes(cfg.k, d) : cfg.init;
    if (fit.prototypes.size() != cfg.k) {
        throw ConfigError("distortion k-means: expected k initial prototypes");
    }
    for (const auto& p : fit.prototypes) {
        if (p.size() != d) throw ShapeError("distortion k-means: prototype dimension mismatch");
    }

    const std::size_t n_points = data.size();
    std::vector<double> nearest_cost(n_points, 0.0);
    Assignment previous;
    for (int t = 0; t < cfg.max_iters; ++t) {
        if (t > 0) {
            auto members = members_of(previous);
            std::vector<bool> taken(n_points, false);
            for (std::size_t j = 0; j < cfg.k; ++j) {
                if (!members[j].empty()) {
                    fit.prototypes[j] = cluster_prototype(data, members[j], cfg.distortion.rule,
                                                          cfg.meb_exact_limit,
                                                          cfg.seed + static_cast<std::uint64_t>(j));
                    continue;
                }
                // Empty: move to the point worst served by its prototype.
                std::size_t far = 0;
                double far_cost = -1.0;
                for (std::size_t i = 0; i < n_points; ++i) {
                    if (!taken[i] && nearest_cost[i] > far_cost) {
                        far_cost = nearest_cost[i];
                        far = i;
                    }
                }
                taken[far] = true;
                const auto x = data.row(far);
                fit.prototypes[j].assign(x.begin(), x.end());
            }
        }

        std::vector<PrototypeDistance> dists;
        dists.reserve(cfg.k);
        for (const auto& p : fit.prototypes) dists.emplace_back(cfg.distortion.kind, p);

        Assignment current;
        current.num_clusters = cfg.k;
        current.labels.resize(n_points);
        detail::CompensatedSum total;
        for (std::size_t i = 0; i < n_points; ++i) {
            const auto x = data.row(i);
            int best = 0;
            double best_cost = kInf;
            for (std::size_t j = 0; j < cfg.k; ++j) {
                const double c = dists[j](x);
                if (c < best_cost) {
                    best_cost = c;
                    best = static_cast<int>(j);
                }
            }
            current.labels[i] = best;
            nearest_cost[i] = best_cost;
            total.add(best_cost);
        }
        fit.objective_trace.push_back(total.value());
        fit.iterations = t + 1;
        const bool stable = t > 0 && current.labels == previous.labels;
        previous = std::move(current);
        if (stable) {
            fit.converged = true;
            break;
        }
    }
    fit.assignment = std::move(previous);
    return fit;
}

Assignment argmax_baseline(const SimplexDataset& data) {
    Assignment out;
    out.num_clusters = data.dim();
    out.labels.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto x = data.row(i);
        out.labels[i] = static_cast<int>(std::max_element(x.begin(), x.end()) - x.begin());
    }
    return out;
}

void DirichletParams::validate() const {
    if (alpha.empty()) throw DomainError("Dirichlet parameters are empty");
    for (double a : alpha) {
        if (!(a > 0.0) || !std::isfinite(a)) {
            throw DomainError("Dirichlet parameters must be positive and finite");
        }
    }
}

double dirichlet_log_pdf(std::span<const double> x, const DirichletParams& p) {
    p.validate();
    check_same_length(x, p.alpha, "dirichlet_log_pdf");
    std::vector<double> proj;
    if (has_nonpositive(x)) {
        proj = projected(x);
        x = proj;
    }
    double v = -log_multivariate_beta(p.alpha);
    for (std::size_t n = 0; n < x.size(); ++n) v += (p.alpha[n] - 1.0) * std::log(x[n]);
    return v;
}

DirichletParams dirichlet_mle_from_stats(std::span<const double> mean_log,
                                         const DirichletParams& init,
                                         const DirichletMleOptions& opts) {
    init.validate();
    check_same_length(mean_log, init.alpha, "dirichlet_mle");
    for (double s : mean_log) {
        if (!std::isfinite(s) || s >= 0.0) {
            throw ConvergenceError("Dirichlet MLE: invalid mean log statistic",
                                   std::numeric_limits<double>::quiet_NaN());
        }
    }
    const std::size_t d = mean_log.size();
    std::vector<double> alpha = init.alpha;
    std::vector<double> next(d);
    double residual = kInf;
    for (int it = 0; it < opts.max_iters; ++it) {
        const double psi_sum = digamma(std::accumulate(alpha.begin(), alpha.end(), 0.0));
        double change = 0.0;
        try {
            for (std::size_t n = 0; n < d; ++n) {
                next[n] = inv_digamma(psi_sum + mean_log[n]);
                change = std::max(change, std::abs(next[n] - alpha[n]));
            }
        } catch (const Error& e) {
            throw ConvergenceError(std::string("Dirichlet MLE diverged: ") + e.what(), residual);
        }
        alpha.swap(next);
        if (!std::isfinite(change)) {
            throw ConvergenceError("Dirichlet MLE produced a non-finite iterate", residual);
        }
        if (change <= opts.tol) {
            const double psi_new = digamma(std::accumulate(alpha.begin(), alpha.end(), 0.0));
            residual = 0.0;
            for (std::size_t n = 0; n < d; ++n) {
                residual = std::max(residual, std::abs(digamma(alpha[n]) - psi_new - mean_log[n]));
            }
            if (residual <= 10.0 * opts.tol) return {alpha};
        }
    }
    throw ConvergenceError("Dirichlet MLE did not converge within " +
                               std::to_string(opts.max_iters) + " iterations",
                           residual);
}

DirichletParams dirichlet_moment_init(std::span<const double> mean, std::span<const double> mean_sq) {
    check_same_length(mean, mean_sq, "dirichlet_moment_init");
    double precision = 0.0;
    std::size_t valid = 0;
    for (std::size_t n = 0; n < mean.size(); ++n) {
        const double num = mean[n] - mean_sq[n];
        const double den = mean_sq[n] - mean[n] * mean[n];
        if (num > 0.0 && den > 0.0) {
            precision += num / den;
            ++valid;
        }
    }
    precision = valid > 0 ? precision / static_cast<double>(valid)
                          : static_cast<double>(mean.size());
    DirichletParams out;
    out.alpha.resize(mean.size());
    for (std::size_t n = 0; n < mean.size(); ++n) {
        out.alpha[n] = std::max(precision * mean[n], 1e-6);
    }
    return out;
}

namespace {

struct DirichletStats {
    std::vector<detail::CompensatedSum> log_sum;
    std::vector<detail::CompensatedSum> sum;
    std::vector<detail::CompensatedSum> sq_sum;
    std::vector<double> raw_max;
    double weight = 0.0;

    explicit DirichletStats(std::size_t d) : log_sum(d), sum(d), sq_sum(d), raw_max(d, 0.0) {}

    void add(std::span<const double> raw, std::span<const double> proj,
             std::span<const double> log_proj, double w) {
        for (std::size_t n = 0; n < raw.size(); ++n) {
            log_sum[n].add(w * log_proj[n]);
            sum[n].add(w * proj[n]);
            sq_sum[n].add(w * proj[n] * proj[n]);
            raw_max[n] = std::max(raw_max[n], raw[n]);
        }
        weight += w;
    }

    DirichletParams estimate(const DirichletMleOptions& opts) const {
        const std::size_t d = raw_max.size();
        for (std::size_t n = 0; n < d; ++n) {
            if (raw_max[n] <= 0.0) {
                throw ConvergenceError("Dirichlet MLE: coordinate " + std::to_string(n) +
                                           " is zero on every point (no support)",
                                       std::numeric_limits<double>::quiet_NaN());
            }
        }
        std::vector<double> mean_log(d), mean(d), mean_sq(d);
        for (std::size_t n = 0; n < d; ++n) {
            mean_log[n] = log_sum[n].value() / weight;
            mean[n] = sum[n].value() / weight;
            mean_sq[n] = sq_sum[n].value() / weight;
        }
        return dirichlet_mle_from_stats(mean_log, dirichlet_moment_init(mean, mean_sq), opts);
    }
};

}  // namespace

DirichletParams dirichlet_mle(const SimplexDataset& sample, std::span<const double> weights,
                              const DirichletParams& init, const DirichletMleOptions& opts) {
    if (sample.empty()) throw DomainError("dirichlet_mle: empty sample");
    if (!weights.empty() && weights.size() != sample.size()) {
        throw ShapeError("dirichlet_mle: weights and sample differ in length");
    }
    init.validate();
    if (init.alpha.size() != sample.dim()) {
        throw ShapeError("dirichlet_mle: initial parameters do not match the data dimension");
    }
    const std::size_t d = sample.dim();
    DirichletStats stats(d);
    std::vector<double> proj(d), logs(d);
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        if (w == 0.0) continue;
        interior_project(sample.row(i), proj);
        for (std::size_t n = 0; n < d; ++n) logs[n] = std::log(proj[n]);
        stats.add(sample.row(i), proj, logs, w);
    }
    if (!(stats.weight > 0.0)) throw DomainError("dirichlet_mle: total weight is zero");
    for (std::size_t n = 0; n < d; ++n) {
        if (stats.raw_max[n] <= 0.0) {
            throw ConvergenceError("Dirichlet MLE: coordinate " + std::to_string(n) +
                                       " is zero on every point (no support)",
                                   std::numeric_limits<double>::quiet_NaN());
        }
    }
    std::vector<double> mean_log(d);
    for (std::size_t n = 0; n < d; ++n) mean_log[n] = stats.log_sum[n].value() / stats.weight;
    return dirichlet_mle_from_stats(mean_log, init, opts);
}

KDirsFit k_dirs(const SimplexDataset& data, const KDirsConfig& cfg) {
    if (cfg.k == 0) throw ConfigError("k-Dirs: k must be at least 1");
    if (cfg.max_iters < 1) throw ConfigError("k-Dirs: max_iters must be >= 1");
    if (data.size() < cfg.k) throw ConfigError("k-Dirs: need at least k points");
    const std::size_t d = data.dim();
    const std::size_t k = cfg.k;
    const std::size_t n_points = data.size();

    KDirsFit fit;
    for (const auto& v : vertex_prototypes(k, d)) {
        DirichletParams p;
        p.alpha.resize(d);
        for (std::size_t n = 0; n < d; ++n) p.alpha[n] = 1.0 + cfg.initial_concentration * v[n];
        fit.models.push_back(std::move(p));
    }
    fit.proportions.assign(k, 1.0 / static_cast<double>(k));
    const double floor = 1.0 / (10.0 * static_cast<double>(n_points));

    std::vector<double> proj(n_points * d);
    std::vector<double> logs(n_points * d);
    for (std::size_t i = 0; i < n_points; ++i) {
        std::span<double> out(proj.data() + i * d, d);
        interior_project(data.row(i), out);
        for (std::size_t n = 0; n < d; ++n) logs[i * d + n] = std::log(out[n]);
    }

    Assignment previous;
    for (int t = 0; t < cfg.max_iters; ++t) {
        if (t > 0) {
            std::vector<DirichletStats> stats(k, DirichletStats(d));
            for (std::size_t i = 0; i < n_points; ++i) {
                stats[static_cast<std::size_t>(previous.labels[i])].add(
                    data.row(i), {proj.data() + i * d, d}, {logs.data() + i * d, d}, 1.0);
            }
            for (std::size_t j = 0; j < k; ++j) {
                if (stats[j].weight == 0.0) continue;
                DirichletParams p = stats[j].estimate(cfg.mle);
                if (cfg.unimodal) {
                    for (double& a : p.alpha) a = std::max(a, 1.0 + cfg.unimodal_eps);
                }
                fit.models[j] = std::move(p);
            }
        }

        std::vector<double> constant(k);
        for (std::size_t j = 0; j < k; ++j) {
            constant[j] = std::log(std::max(fit.proportions[j], floor)) -
                          log_multivariate_beta(fit.models[j].alpha);
        }
        Assignment current;
        current.num_clusters = k;
        current.labels.resize(n_points);
        for (std::size_t i = 0; i < n_points; ++i) {
            int best = 0;
            double best_score = -kInf;
            for (std::size_t j = 0; j < k; ++j) {
                double s = constant[j];
                const auto& alpha = fit.models[j].alpha;
                for (std::size_t n = 0; n < d; ++n) s += (alpha[n] - 1.0) * logs[i * d + n];
                if (s > best_score) {
                    best_score = s;
                    best = static_cast<int>(j);
                }
            }
            current.labels[i] = best;
        }
        fit.proportions = update_proportions(current, k);
        fit.iterations = t + 1;
        const bool stable = t > 0 && current.labels == previous.labels;
        previous = std::move(current);
        if (stable) {
            fit.converged = true;
            break;
        }
    }
    fit.assignment = std::move(previous);
    return fit;
}

}  // namespace ksb
