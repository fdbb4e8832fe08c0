#include "ksbetas/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ksbetas/detail/compensated_sum.hpp"
#include "ksbetas/error.hpp"
#include "ksbetas/special_fn.hpp"

namespace ksb {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Log-density of one cluster with the per-coordinate normalizers hoisted out
// of the point loop.
class ClusterDensity {
public:
    explicit ClusterDensity(const SBetaParams& p) : params_(&p) {
        const double log_scale = std::log1p(2.0 * p.delta);
        constant_ = 0.0;
        for (std::size_t n = 0; n < p.dim(); ++n) {
            constant_ -= log_beta(p.alpha[n], p.beta[n]) +
                         (p.alpha[n] + p.beta[n] - 2.0) * log_scale;
        }
    }

    // lo[n] = ln(x_n + δ), hi[n] = ln(1 + δ − x_n); `finite` says whether all
    // of them are finite (otherwise fall back to the saturating kernel).
    double operator()(std::span<const double> x, std::span<const double> lo,
                      std::span<const double> hi, bool finite) const {
        if (!finite) return sbeta::log_pdf_unchecked(x, *params_);
        double v = constant_;
        for (std::size_t n = 0; n < lo.size(); ++n) {
            v += (params_->alpha[n] - 1.0) * lo[n] + (params_->beta[n] - 1.0) * hi[n];
        }
        return std::clamp(v, -kLogDensitySaturation, kLogDensitySaturation);
    }

private:
    const SBetaParams* params_;
    double constant_;
};

struct PointLogs {
    std::vector<double> lo;
    std::vector<double> hi;
    bool finite = true;

    explicit PointLogs(std::size_t d) : lo(d), hi(d) {}

    void fill(std::span<const double> x, double delta) {
        finite = true;
        for (std::size_t n = 0; n < x.size(); ++n) {
            lo[n] = std::log(x[n] + delta);
            hi[n] = std::log(1.0 + delta - x[n]);
            finite = finite && std::isfinite(lo[n]) && std::isfinite(hi[n]);
        }
    }
};

void check_dims(const SimplexDataset& data, const ClusterModel& model) {
    if (model.k() == 0) throw ConfigError("cluster model has no clusters");
    if (model.proportions.size() != model.k()) {
        throw ShapeError("cluster model: proportions and clusters differ in length");
    }
    if (data.dim() != model.dim()) {
        throw ShapeError("data dimension " + std::to_string(data.dim()) +
                         " does not match model dimension " + std::to_string(model.dim()));
    }
}

SBetaParams peaked_params(std::span<const double> modes, double delta, double lambda0) {
    SBetaParams p;
    p.delta = delta;
    p.alpha.resize(modes.size());
    p.beta.resize(modes.size());
    for (std::size_t n = 0; n < modes.size(); ++n) {
        p.set_coordinate(n, sbeta::shape_from_mode_concentration(modes[n], lambda0, delta));
    }
    return p;
}

double log_sum_exp(std::span<const double> v) {
    double hi = kNegInf;
    for (double x : v) hi = std::max(hi, x);
    if (!std::isfinite(hi)) return hi;
    double s = 0.0;
    for (double x : v) s += std::exp(x - hi);
    return hi + std::log(s);
}

}  // namespace

void ClusterRunConfig::validate() const {
    if (k == 0) throw ConfigError("cluster count k must be at least 1");
    if (!(delta >= 0.0) || !std::isfinite(delta)) {
        throw ConfigError("delta must be nonnegative and finite");
    }
    constraints.validate();
    if (max_iters < 1) throw ConfigError("max_iters must be at least 1");
    if (estimator == Estimator::kMLE && (mle.max_iters < 1 || !(mle.tol > 0.0))) {
        throw ConfigError("MLE needs max_iters >= 1 and tol > 0");
    }
    if (!(lambda0() > 0.0) || !std::isfinite(lambda0())) {
        throw ConfigError("initial concentration must be positive and finite");
    }
    if (init == InitMode::kPrototypes && prototypes.size() != k) {
        throw ConfigError("prototype init needs exactly k = " + std::to_string(k) +
                          " prototypes, got " + std::to_string(prototypes.size()));
    }
}

double ClusterModel::log_prior(std::size_t cluster) const {
    if (pi_mode == PiMode::kUniform) return -std::log(static_cast<double>(k()));
    const double p = std::max(proportions[cluster], proportion_floor);
    return p > 0.0 ? std::log(p) : kNegInf;
}

std::vector<std::vector<double>> ClusterModel::modes() const {
    std::vector<std::vector<double>> out;
    out.reserve(k());
    for (const auto& p : clusters) {
        std::vector<double> m(p.dim());
        for (std::size_t n = 0; n < p.dim(); ++n) {
            const BetaShape s = p.coordinate(n);
            const double lambda = sbeta::concentration(s);
            m[n] = lambda == 0.0 ? 0.5 : std::clamp(sbeta::mode(s, p.delta), 0.0, 1.0);
        }
        out.push_back(std::move(m));
    }
    return out;
}

ClusterModel vertex_init(std::size_t k, std::size_t d, double delta,
                         const ConstraintConfig& constraints,
                         std::optional<double> initial_concentration) {
    if (k == 0) throw ConfigError("vertex init: k must be at least 1");
    if (k > d) {
        throw ConfigError("vertex init needs k <= d (k = " + std::to_string(k) +
                          ", d = " + std::to_string(d) + ")");
    }
    std::vector<std::vector<double>> vertices(k, std::vector<double>(d, 0.0));
    for (std::size_t j = 0; j < k; ++j) vertices[j][j] = 1.0;
    return prototype_init(vertices, delta, constraints, initial_concentration);
}

ClusterModel prototype_init(const std::vector<std::vector<double>>& prototypes, double delta,
                            const ConstraintConfig& constraints,
                            std::optional<double> initial_concentration) {
    constraints.validate();
    if (prototypes.empty()) throw ConfigError("prototype init: no prototypes");
    const double lambda0 = initial_concentration.value_or(constraints.tau_plus / 2.0);
    const std::size_t d = prototypes.front().size();
    ClusterModel model;
    model.delta = delta;
    model.constraints = constraints;
    for (const auto& proto : prototypes) {
        if (proto.size() != d) throw ShapeError("prototype init: ragged prototypes");
        model.clusters.push_back(sbeta::constrain(peaked_params(proto, delta, lambda0), constraints));
    }
    model.proportions.assign(prototypes.size(), 1.0 / static_cast<double>(prototypes.size()));
    return model;
}

Assignment assign(const SimplexDataset& data, const ClusterModel& model) {
    check_dims(data, model);
    const std::size_t k = model.k();
    std::vector<ClusterDensity> densities;
    std::vector<double> priors(k);
    densities.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
        densities.emplace_back(model.clusters[j]);
        priors[j] = model.log_prior(j);
    }

    Assignment out;
    out.num_clusters = k;
    out.labels.resize(data.size());
    PointLogs logs(data.dim());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto x = data.row(i);
        logs.fill(x, model.delta);
        int best = -1;
        double best_score = kNegInf;
        for (std::size_t j = 0; j < k; ++j) {
            if (priors[j] == kNegInf) continue;
            const double score = priors[j] + densities[j](x, logs.lo, logs.hi, logs.finite);
            if (score > best_score) {
                best_score = score;
                best = static_cast<int>(j);
            }
        }
        if (best < 0 || !std::isfinite(best_score)) {
            throw AssignmentError("point " + std::to_string(i) +
                                      " has no cluster with a finite log-density",
                                  i);
        }
        out.labels[i] = best;
    }
    return out;
}

std::vector<double> update_proportions(const Assignment& a, std::size_t k) {
    Assignment sized = a;
    sized.num_clusters = k;
    const auto counts = cluster_sizes(sized);
    std::vector<double> pi(k, 0.0);
    if (a.labels.empty()) return pi;
    const double n = static_cast<double>(a.labels.size());
    for (std::size_t j = 0; j < k; ++j) pi[j] = static_cast<double>(counts[j]) / n;
    return pi;
}

ClusterModel update_params(const SimplexDataset& data, const Assignment& a,
                           const ClusterModel& current, const ClusterRunConfig& cfg,
                           ParamUpdateStats* stats) {
    check_dims(data, current);
    if (a.labels.size() != data.size() || a.num_clusters != current.k()) {
        throw ShapeError("update_params: assignment does not match data/model");
    }
    const std::size_t k = current.k();
    const std::size_t d = data.dim();
    const double delta = current.delta;
    const auto counts = cluster_sizes(a);

    using detail::CompensatedSum;
    std::vector<CompensatedSum> sum_x(k * d);
    std::vector<CompensatedSum> sum_lo;
    std::vector<CompensatedSum> sum_hi;
    const bool mle = cfg.estimator == Estimator::kMLE;
    if (mle) {
        sum_lo.resize(k * d);
        sum_hi.resize(k * d);
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto x = data.row(i);
        const std::size_t base = static_cast<std::size_t>(a.labels[i]) * d;
        for (std::size_t n = 0; n < d; ++n) {
            sum_x[base + n].add(x[n]);
            if (mle) {
                sum_lo[base + n].add(std::log(x[n] + delta));
                sum_hi[base + n].add(std::log(1.0 + delta - x[n]));
            }
        }
    }
    std::vector<double> mean(k * d, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        if (counts[j] == 0) continue;
        for (std::size_t n = 0; n < d; ++n) {
            mean[j * d + n] = sum_x[j * d + n].value() / static_cast<double>(counts[j]);
        }
    }
    std::vector<CompensatedSum> sum_sq(k * d);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto x = data.row(i);
        const std::size_t base = static_cast<std::size_t>(a.labels[i]) * d;
        for (std::size_t n = 0; n < d; ++n) {
            const double dev = x[n] - mean[base + n];
            sum_sq[base + n].add(dev * dev);
        }
    }

    ClusterModel next = current;
    std::vector<bool> needs_reseed(k, false);
    ParamUpdateStats local;
    const double log_scale = std::log1p(2.0 * delta);
    for (std::size_t j = 0; j < k; ++j) {
        if (counts[j] == 0) {
            needs_reseed[j] = true;
            continue;
        }
        const double count = static_cast<double>(counts[j]);
        SBetaParams p;
        p.delta = delta;
        p.alpha.resize(d);
        p.beta.resize(d);
        try {
            for (std::size_t n = 0; n < d; ++n) {
                const std::size_t idx = j * d + n;
                BetaShape shape =
                    sbeta::mom_estimate_floored(mean[idx], sum_sq[idx].value() / count, delta);
                if (mle) {
                    const sbeta::LogMoments lm{sum_lo[idx].value() / count - log_scale,
                                               sum_hi[idx].value() / count - log_scale};
                    shape = sbeta::mle_from_moments(lm, shape, cfg.mle).shape;
                }
                p.set_coordinate(n, sbeta::constrain(shape, delta, cfg.constraints));
            }
        } catch (const ConvergenceError&) {
            ++local.mle_failures;
            needs_reseed[j] = true;
            continue;
        }
        next.clusters[j] = std::move(p);
    }

    // Re-seed at the vertex where the mixture of the healthy clusters (plus any
    // already re-seeded ones, weighted 1/k) has the least density.
    std::vector<std::size_t> in_mixture;
    std::vector<double> weight(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        if (!needs_reseed[j]) {
            in_mixture.push_back(j);
            weight[j] = std::max(current.proportions[j], 1.0 / static_cast<double>(data.size()));
        }
    }
    std::vector<double> vertex(d, 0.0);
    std::vector<double> terms;
    for (std::size_t j = 0; j < k; ++j) {
        if (!needs_reseed[j]) continue;
        std::size_t best_vertex = 0;
        double lowest = std::numeric_limits<double>::infinity();
        for (std::size_t n = 0; n < d; ++n) {
            std::fill(vertex.begin(), vertex.end(), 0.0);
            vertex[n] = 1.0;
            terms.clear();
            for (std::size_t m : in_mixture) {
                terms.push_back(std::log(weight[m]) +
                                sbeta::log_pdf_unchecked(vertex, next.clusters[m]));
            }
            const double mass = log_sum_exp(terms);
            if (mass < lowest) {
                lowest = mass;
                best_vertex = n;
            }
        }
        std::fill(vertex.begin(), vertex.end(), 0.0);
        vertex[best_vertex] = 1.0;
        next.clusters[j] =
            sbeta::constrain(peaked_params(vertex, delta, cfg.lambda0()), cfg.constraints);
        in_mixture.push_back(j);
        weight[j] = 1.0 / static_cast<double>(k);
        ++local.reseeded;
    }
    if (stats) *stats = local;
    return next;
}

double objective(const SimplexDataset& data, const ClusterModel& model, const Assignment& a) {
    check_dims(data, model);
    if (a.labels.size() != data.size()) {
        throw ShapeError("objective: assignment length does not match data");
    }
    std::vector<ClusterDensity> densities;
    densities.reserve(model.k());
    for (const auto& p : model.clusters) densities.emplace_back(p);
    detail::CompensatedSum total;
    PointLogs logs(data.dim());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto x = data.row(i);
        const auto j = static_cast<std::size_t>(a.labels[i]);
        logs.fill(x, model.delta);
        total.add(-(model.log_prior(j) + densities[j](x, logs.lo, logs.hi, logs.finite)));
    }
    return total.value();
}

FitResult fit(const SimplexDataset& data, const ClusterRunConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw DomainError("fit: empty dataset");
    if (data.size() < cfg.k) {
        throw ConfigError("fit: need at least k = " + std::to_string(cfg.k) + " points, got " +
                          std::to_string(data.size()));
    }

    FitResult result;
    ClusterModel& model = result.model;
    if (cfg.init == InitMode::kVertex) {
        model = vertex_init(cfg.k, data.dim(), cfg.delta, cfg.constraints,
                            cfg.initial_concentration);
    } else {
        for (const auto& p : cfg.prototypes) {
            if (p.size() != data.dim()) {
                throw ConfigError("prototype dimension does not match data dimension");
            }
        }
        model = prototype_init(cfg.prototypes, cfg.delta, cfg.constraints,
                               cfg.initial_concentration);
    }
    model.pi_mode = cfg.pi_mode;
    model.proportion_floor = 1.0 / (10.0 * static_cast<double>(data.size()));

    Assignment previous;
    for (int t = 0; t < cfg.max_iters; ++t) {
        IterationRecord rec;
        rec.iteration = t;
        rec.objective_after_params = std::numeric_limits<double>::quiet_NaN();
        if (t > 0) {
            ParamUpdateStats st;
            model = update_params(data, previous, model, cfg, &st);
            rec.reseeded = st.reseeded;
            rec.objective_after_params = objective(data, model, previous);
        }
        Assignment current = assign(data, model);
        rec.objective_after_assign = objective(data, model, current);
        if (cfg.pi_mode == PiMode::kAdaptive) {
            model.proportions = update_proportions(current, cfg.k);
        }
        rec.objective = objective(data, model, current);
        if (t == 0) {
            rec.changed = data.size();
        } else {
            for (std::size_t i = 0; i < data.size(); ++i) {
                rec.changed += current.labels[i] != previous.labels[i] ? 1 : 0;
            }
        }
        result.trace.iterations.push_back(rec);
        previous = std::move(current);
        if (t > 0 && rec.changed == 0) {
            result.trace.converged = true;
            break;
        }
    }
    result.assignment = std::move(previous);
    return result;
}

}  // namespace ksb
