#include "ksbetas/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ksbetas/error.hpp"

namespace ksb::bench {
namespace {

using nlohmann::json;

const std::map<std::string, MethodKind>& registry() {
    static const std::map<std::string, MethodKind> names = {
        {"argmax", MethodKind::kArgmax},       {"k-means", MethodKind::kKMeans},
        {"kl-k-means", MethodKind::kKLKMeans}, {"k-medians", MethodKind::kKMedians},
        {"hsc", MethodKind::kHSC},             {"k-dirs", MethodKind::kKDirs},
        {"k-sbetas", MethodKind::kKSBetas},    {"k-sbetas-biased", MethodKind::kKSBetas},
        {"k-betas", MethodKind::kKSBetas},
    };
    return names;
}

std::string trim(std::string s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

double parse_real(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
        throw ConfigError("option " + key + ": expected a number, got '" + v + "'");
    }
    return out;
}

long long parse_int(const std::string& key, const std::string& v) {
    long long out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw ConfigError("option " + key + ": expected an integer, got '" + v + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("option " + key + ": expected true/false, got '" + v + "'");
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

int bounded_int(const std::string& key, const std::string& v, long long lo, long long hi) {
    const long long x = parse_int(key, v);
    require(x >= lo && x <= hi, "option " + key + " must lie in [" + std::to_string(lo) + ", " +
                                    std::to_string(hi) + "], got " + v);
    return static_cast<int>(x);
}

double positive_real(const std::string& key, const std::string& v) {
    const double x = parse_real(key, v);
    require(x > 0.0, "option " + key + " must be positive, got " + v);
    return x;
}

std::vector<std::vector<double>> vertices(std::size_t d) {
    std::vector<std::vector<double>> out(d, std::vector<double>(d, 0.0));
    for (std::size_t j = 0; j < d; ++j) out[j][j] = 1.0;
    return out;
}

std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

}  // namespace

const std::vector<std::string>& method_names() {
    static const std::vector<std::string> names = {
        "argmax", "k-means", "kl-k-means", "k-medians", "hsc",
        "k-dirs", "k-sbetas", "k-sbetas-biased", "k-betas"};
    return names;
}

MethodSpec make_method(const std::string& name, const std::map<std::string, std::string>& options) {
    const auto it = registry().find(name);
    if (it == registry().end()) {
        std::string known;
        for (const auto& n : method_names()) known += (known.empty() ? "" : ", ") + n;
        throw ConfigError("unknown method '" + name + "' (known: " + known + ")");
    }
    MethodSpec spec;
    spec.name = name;
    spec.label = name;
    spec.kind = it->second;
    if (name == "k-sbetas-biased") spec.ksb.pi_mode = PiMode::kUniform;
    if (name == "k-betas") spec.ksb.delta = 0.0;
    switch (spec.kind) {
        case MethodKind::kKMeans: spec.distortion.distortion = Distortion::euclidean(); break;
        case MethodKind::kKLKMeans: spec.distortion.distortion = Distortion::kl(); break;
        case MethodKind::kKMedians: spec.distortion.distortion = Distortion::manhattan(); break;
        case MethodKind::kHSC: spec.distortion.distortion = Distortion::hilbert(); break;
        default: break;
    }

    const bool is_ksb = spec.kind == MethodKind::kKSBetas;
    const bool is_dist = spec.kind == MethodKind::kKMeans || spec.kind == MethodKind::kKLKMeans ||
                         spec.kind == MethodKind::kKMedians || spec.kind == MethodKind::kHSC;
    const bool is_kdirs = spec.kind == MethodKind::kKDirs;
    for (const auto& [key, raw] : options) {
        const std::string v = trim(raw);
        const auto inapplicable = [&] {
            return ConfigError("option " + key + " does not apply to method " + name);
        };
        if (key == "label") {
            require(!v.empty(), "option label must not be empty");
            spec.label = v;
        } else if (key == "align") {
            if (v == "hungarian") {
                spec.align = AlignMethod::kHungarian;
            } else if (v == "argmax") {
                spec.align = AlignMethod::kArgmax;
            } else {
                throw ConfigError("option align must be hungarian or argmax, got '" + v + "'");
            }
        } else if (key == "iters") {
            if (spec.kind == MethodKind::kArgmax) throw inapplicable();
            const int iters = bounded_int(key, v, 1, 100000);
            spec.ksb.max_iters = iters;
            spec.distortion.max_iters = iters;
            spec.kdirs.max_iters = iters;
        } else if (key == "delta") {
            if (!is_ksb) throw inapplicable();
            const double d = parse_real(key, v);
            require(d >= 0.0, "option delta must be nonnegative, got " + v);
            spec.ksb.delta = d;
        } else if (key == "tau-minus") {
            if (!is_ksb) throw inapplicable();
            spec.ksb.constraints.tau_minus = positive_real(key, v);
        } else if (key == "tau-plus") {
            if (!is_ksb) throw inapplicable();
            spec.ksb.constraints.tau_plus = positive_real(key, v);
        } else if (key == "estimator") {
            if (!is_ksb) throw inapplicable();
            if (v == "mom") {
                spec.ksb.estimator = Estimator::kMoM;
            } else if (v == "mle") {
                spec.ksb.estimator = Estimator::kMLE;
            } else {
                throw ConfigError("option estimator must be mom or mle, got '" + v + "'");
            }
        } else if (key == "pi") {
            if (!is_ksb) throw inapplicable();
            if (v == "adaptive") {
                spec.ksb.pi_mode = PiMode::kAdaptive;
            } else if (v == "uniform") {
                spec.ksb.pi_mode = PiMode::kUniform;
            } else {
                throw ConfigError("option pi must be adaptive or uniform, got '" + v + "'");
            }
        } else if (key == "init") {
            if (spec.kind == MethodKind::kArgmax) throw inapplicable();
            require(v == "vertex", "option init: only 'vertex' is available from the CLI");
        } else if (key == "mle-iters") {
            if (!is_ksb && !is_kdirs) throw inapplicable();
            const int it = bounded_int(key, v, 1, 1000000);
            spec.ksb.mle.max_iters = it;
            spec.kdirs.mle.max_iters = it;
        } else if (key == "mle-tol") {
            if (!is_ksb && !is_kdirs) throw inapplicable();
            const double tol = positive_real(key, v);
            spec.ksb.mle.tol = tol;
            spec.kdirs.mle.tol = tol;
        } else if (key == "lambda0") {
            if (!is_ksb && !is_kdirs) throw inapplicable();
            const double l = positive_real(key, v);
            spec.ksb.initial_concentration = l;
            spec.kdirs.initial_concentration = l;
        } else if (key == "unimodal") {
            if (!is_kdirs) throw inapplicable();
            spec.kdirs.unimodal = parse_bool(key, v);
        } else if (key == "unimodal-eps") {
            if (!is_kdirs) throw inapplicable();
            spec.kdirs.unimodal_eps = positive_real(key, v);
        } else if (key == "meb-limit") {
            if (spec.kind != MethodKind::kHSC) throw inapplicable();
            spec.distortion.meb_exact_limit = static_cast<std::size_t>(bounded_int(key, v, 2, 1000000));
        } else if (key == "seed") {
            if (!is_dist) throw inapplicable();
            const long long s = parse_int(key, v);
            require(s >= 0, "option seed must be nonnegative");
            spec.distortion.seed = static_cast<std::uint64_t>(s);
        } else {
            throw ConfigError("unknown option '" + key + "' for method " + name);
        }
    }
    if (is_ksb) {
        spec.ksb.constraints.validate();
    }
    return spec;
}

json MethodSpec::options_json() const {
    json o;
    o["align"] = std::string(to_string(align));
    switch (kind) {
        case MethodKind::kArgmax:
            break;
        case MethodKind::kKMeans:
        case MethodKind::kKLKMeans:
        case MethodKind::kKMedians:
        case MethodKind::kHSC:
            o["iters"] = distortion.max_iters;
            o["init"] = "vertex";
            o["distortion"] = std::string(to_string(distortion.distortion.kind));
            if (kind == MethodKind::kHSC) {
                o["meb-limit"] = distortion.meb_exact_limit;
                o["seed"] = distortion.seed;
            }
            break;
        case MethodKind::kKDirs:
            o["iters"] = kdirs.max_iters;
            o["init"] = "vertex";
            o["mle-iters"] = kdirs.mle.max_iters;
            o["mle-tol"] = kdirs.mle.tol;
            o["unimodal"] = kdirs.unimodal;
            o["unimodal-eps"] = kdirs.unimodal_eps;
            o["lambda0"] = kdirs.initial_concentration;
            break;
        case MethodKind::kKSBetas:
            o["iters"] = ksb.max_iters;
            o["init"] = "vertex";
            o["delta"] = ksb.delta;
            o["tau-minus"] = ksb.constraints.tau_minus;
            o["tau-plus"] = ksb.constraints.tau_plus;
            o["estimator"] = ksb.estimator == Estimator::kMoM ? "mom" : "mle";
            o["pi"] = ksb.pi_mode == PiMode::kAdaptive ? "adaptive" : "uniform";
            o["lambda0"] = ksb.lambda0();
            if (ksb.estimator == Estimator::kMLE) {
                o["mle-iters"] = ksb.mle.max_iters;
                o["mle-tol"] = ksb.mle.tol;
            }
            break;
    }
    return o;
}

MethodOutcome run_method(const MethodSpec& spec, const SimplexDataset& data) {
    const std::size_t k = data.dim();
    MethodOutcome out;
    switch (spec.kind) {
        case MethodKind::kArgmax:
            out.assignment = argmax_baseline(data);
            out.centroids = vertices(k);
            out.converged = true;
            break;
        case MethodKind::kKMeans:
        case MethodKind::kKLKMeans:
        case MethodKind::kKMedians:
        case MethodKind::kHSC: {
            auto cfg = spec.distortion;
            cfg.k = k;
            auto fit = distortion_kmeans(data, cfg);
            out.assignment = std::move(fit.assignment);
            out.centroids = std::move(fit.prototypes);
            out.iterations = fit.iterations;
            out.converged = fit.converged;
            break;
        }
        case MethodKind::kKDirs: {
            auto cfg = spec.kdirs;
            cfg.k = k;
            auto fit = k_dirs(data, cfg);
            for (const auto& m : fit.models) {
                double s = 0.0;
                for (double a : m.alpha) s += a;
                std::vector<double> mean(m.alpha.size());
                for (std::size_t n = 0; n < mean.size(); ++n) mean[n] = m.alpha[n] / s;
                out.centroids.push_back(std::move(mean));
            }
            out.assignment = std::move(fit.assignment);
            out.iterations = fit.iterations;
            out.converged = fit.converged;
            break;
        }
        case MethodKind::kKSBetas: {
            auto cfg = spec.ksb;
            cfg.k = k;
            auto fit = ksb::fit(data, cfg);
            out.centroids = fit.model.modes();
            out.assignment = std::move(fit.assignment);
            out.iterations = static_cast<int>(fit.trace.iterations.size());
            out.converged = fit.trace.converged;
            break;
        }
    }
    return out;
}

RunResult execute_run(const MethodSpec& spec, const RunData& data, int run) {
    RunResult r;
    r.run = run;
    r.seed = data.seed;
    MethodOutcome outcome;
    const auto start = std::chrono::steady_clock::now();
    try {
        outcome = run_method(spec, data.data);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        r.status = "fails";
        r.message = e.what();
        return r;
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.status = "ok";
    r.iterations = outcome.iterations;
    r.converged = outcome.converged;
    r.cluster_sizes = cluster_sizes(outcome.assignment);
    const std::size_t k = outcome.assignment.num_clusters;
    const std::size_t d = data.data.dim();
    AlignmentMap map = (spec.align == AlignMethod::kHungarian && k == d)
                           ? hungarian_align(outcome.centroids)
                           : argmax_align(outcome.centroids);
    if (data.labels) r.metrics = evaluate(outcome.assignment.labels, *data.labels, map, k, d);
    r.alignment = std::move(map);
    return r;
}

Aggregate aggregate(const std::vector<RunResult>& runs) {
    Aggregate a;
    std::vector<const RunResult*> ok;
    for (const auto& r : runs) {
        if (r.status == "ok") {
            ok.push_back(&r);
        } else {
            ++a.failed;
        }
    }
    a.ok = ok.size();
    if (ok.empty()) return a;
    a.has_metrics = std::all_of(ok.begin(), ok.end(), [](const RunResult* r) { return r->metrics.has_value(); });
    const auto stats = [&](auto get, double& mean, double& sd) {
        double s = 0.0;
        for (const auto* r : ok) s += get(*r);
        mean = s / static_cast<double>(ok.size());
        double q = 0.0;
        for (const auto* r : ok) q += (get(*r) - mean) * (get(*r) - mean);
        sd = ok.size() > 1 ? std::sqrt(q / static_cast<double>(ok.size() - 1)) : 0.0;
    };
    double unused = 0.0;
    stats([](const RunResult& r) { return r.seconds; }, a.seconds_mean, unused);
    if (a.has_metrics) {
        stats([](const RunResult& r) { return r.metrics->nmi; }, a.nmi_mean, a.nmi_std);
        stats([](const RunResult& r) { return r.metrics->accuracy; }, a.accuracy_mean, a.accuracy_std);
        stats([](const RunResult& r) { return r.metrics->mean_iou; }, a.mean_iou_mean, a.mean_iou_std);
    }
    return a;
}

int thread_count(int fallback) {
    const char* env = std::getenv("KSBETAS_THREADS");
    if (env == nullptr || *env == '\0') return std::max(1, fallback);
    const std::string v = trim(env);
    int n = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), n);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size() || n < 1) {
        throw ConfigError("KSBETAS_THREADS must be a positive integer, got '" + v + "'");
    }
    return n;
}

namespace {

struct Instance {
    std::string name;
    json description;
    // Produces the data of run r.
    std::function<RunData(int)> make;
};

constexpr std::uint64_t kRunSeedStride = 16;

std::vector<Instance> expand(const DatasetSpec& ds) {
    std::vector<Instance> out;
    switch (ds.kind) {
        case DatasetKind::kSimu: {
            json desc{{"kind", "simu"}, {"n", ds.n}, {"seed", ds.seed}};
            out.push_back({"simu", desc, [ds](int r) {
                               const std::uint64_t seed = ds.seed + kRunSeedStride * static_cast<std::uint64_t>(r);
                               auto l = sample_dirichlet_mixture(simu_spec(ds.n, seed));
                               return RunData{std::move(l.data), std::move(l.labels), seed};
                           }});
            break;
        }
        case DatasetKind::kIsimus: {
            const auto specs = make_isimus(ds.n, ds.seed);
            for (int m : ds.mixtures) {
                json weights = json::array();
                for (const auto& c : specs[static_cast<std::size_t>(m)].components) weights.push_back(c.weight);
                json desc{{"kind", "isimus"}, {"mixture", m}, {"weights", weights},
                          {"n", ds.n}, {"seed", ds.seed}};
                out.push_back({"isimus-" + std::to_string(m), desc, [ds, m](int r) {
                                   const std::uint64_t base = ds.seed + kRunSeedStride * static_cast<std::uint64_t>(r);
                                   auto spec = make_isimus(ds.n, base)[static_cast<std::size_t>(m)];
                                   auto l = sample_dirichlet_mixture(spec);
                                   return RunData{std::move(l.data), std::move(l.labels), spec.seed};
                               }});
            }
            break;
        }
        case DatasetKind::kFile: {
            json desc{{"kind", "file"}, {"path", ds.path.string()},
                      {"labels", ds.labels.empty() ? json(nullptr) : json(ds.labels.string())}};
            auto shared = std::make_shared<std::optional<RunData>>();
            out.push_back({ds.path.filename().string(), desc, [ds, shared](int) {
                               if (!*shared) {
                                   RunData rd;
                                   rd.data = load_predictions(ds.path, format_from_path(ds.path));
                                   if (!ds.labels.empty()) {
                                       auto labels = read_labels(ds.labels);
                                       if (labels.size() != rd.data.size()) {
                                           throw DataError("labels file has " + std::to_string(labels.size()) +
                                                               " rows, data has " + std::to_string(rd.data.size()),
                                                           0);
                                       }
                                       for (std::size_t i = 0; i < labels.size(); ++i) {
                                           if (static_cast<std::size_t>(labels[i]) >= rd.data.dim()) {
                                               throw DataError("label " + std::to_string(labels[i]) + " at row " +
                                                                   std::to_string(i) + " is not below D = " +
                                                                   std::to_string(rd.data.dim()),
                                                               i);
                                           }
                                       }
                                       rd.labels = std::move(labels);
                                   }
                                   *shared = std::move(rd);
                               }
                               return **shared;
                           }});
            break;
        }
    }
    return out;
}

template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, threads)), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace

BenchReport run_bench(const BenchConfig& config) {
    require(config.runs >= 0, "runs must be nonnegative");
    BenchReport report;
    report.config = config;
    if (config.runs == 0) return report;
    const int threads = thread_count(config.threads);
    for (const auto& inst : expand(config.dataset)) {
        const auto runs = static_cast<std::size_t>(config.runs);
        std::vector<RunData> data(runs);
        for (std::size_t r = 0; r < runs; ++r) data[r] = inst.make(static_cast<int>(r));

        DatasetResult dr;
        dr.name = inst.name;
        dr.description = inst.description;
        dr.n = data.front().data.size();
        dr.dim = data.front().data.dim();
        dr.methods.resize(config.methods.size());
        for (std::size_t m = 0; m < config.methods.size(); ++m) {
            dr.methods[m].spec = config.methods[m];
            dr.methods[m].runs.resize(runs);
        }
        parallel_for(config.methods.size() * runs, threads, [&](std::size_t task) {
            const std::size_t m = task / runs;
            const std::size_t r = task % runs;
            dr.methods[m].runs[r] = execute_run(config.methods[m], data[r], static_cast<int>(r));
        });
        for (auto& mr : dr.methods) mr.summary = aggregate(mr.runs);
        report.datasets.push_back(std::move(dr));
    }
    return report;
}

namespace {

json dataset_echo(const DatasetSpec& ds) {
    json j;
    switch (ds.kind) {
        case DatasetKind::kSimu:
            j = {{"kind", "simu"}, {"n", ds.n}, {"seed", ds.seed}};
            break;
        case DatasetKind::kIsimus:
            j = {{"kind", "isimus"}, {"n", ds.n}, {"seed", ds.seed}, {"mixtures", ds.mixtures}};
            break;
        case DatasetKind::kFile:
            j = {{"kind", "file"}, {"path", ds.path.string()},
                 {"labels", ds.labels.empty() ? json(nullptr) : json(ds.labels.string())}};
            break;
    }
    return j;
}

json run_json(const RunResult& r) {
    json j{{"run", r.run},           {"seed", r.seed},           {"status", r.status},
           {"seconds", r.seconds},   {"iterations", r.iterations}, {"converged", r.converged},
           {"cluster_sizes", r.cluster_sizes}};
    if (!r.message.empty()) j["message"] = r.message;
    if (r.alignment) {
        j["alignment"] = {{"method", std::string(to_string(r.alignment->method))},
                          {"cluster_to_class", r.alignment->cluster_to_class}};
    } else {
        j["alignment"] = nullptr;
    }
    if (r.metrics) {
        j["metrics"] = {{"nmi", r.metrics->nmi},
                        {"accuracy", r.metrics->accuracy},
                        {"mean_iou", r.metrics->mean_iou},
                        {"per_class_iou", r.metrics->per_class_iou},
                        {"confusion", r.metrics->confusion}};
    } else {
        j["metrics"] = nullptr;
    }
    return j;
}

json aggregate_json(const Aggregate& a) {
    json j{{"runs_ok", a.ok}, {"runs_failed", a.failed}, {"seconds_mean", a.seconds_mean}};
    if (a.has_metrics) {
        j["nmi_mean"] = a.nmi_mean;
        j["nmi_std"] = a.nmi_std;
        j["accuracy_mean"] = a.accuracy_mean;
        j["accuracy_std"] = a.accuracy_std;
        j["mean_iou_mean"] = a.mean_iou_mean;
        j["mean_iou_std"] = a.mean_iou_std;
    }
    return j;
}

void check(bool ok, const std::string& where, const std::string& what) {
    if (!ok) throw std::logic_error("report schema violation at " + where + ": " + what);
}

void check_unit_interval(const json& v, const std::string& where) {
    check(v.is_number(), where, "expected a number");
    const double x = v.get<double>();
    check(x >= 0.0 && x <= 1.0, where, "expected a value in [0, 1]");
}

}  // namespace

json to_json(const BenchReport& report) {
    json methods = json::array();
    for (const auto& m : report.config.methods) {
        methods.push_back({{"method", m.name}, {"label", m.label}, {"options", m.options_json()}});
    }
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    doc["config"] = {{"runs", report.config.runs},
                     {"dataset", dataset_echo(report.config.dataset)},
                     {"methods", methods}};
    json datasets = json::array();
    for (const auto& d : report.datasets) {
        json ms = json::array();
        for (const auto& m : d.methods) {
            json runs = json::array();
            for (const auto& r : m.runs) runs.push_back(run_json(r));
            ms.push_back({{"method", m.spec.name},
                          {"label", m.spec.label},
                          {"options", m.spec.options_json()},
                          {"runs", runs},
                          {"aggregate", aggregate_json(m.summary)}});
        }
        datasets.push_back({{"name", d.name},
                            {"description", d.description},
                            {"n", d.n},
                            {"dim", d.dim},
                            {"methods", ms}});
    }
    doc["datasets"] = datasets;
    return doc;
}

void validate_report(const json& doc) {
    check(doc.is_object(), "$", "expected an object");
    check(doc.contains("schema_version") && doc["schema_version"].is_number_integer() &&
              doc["schema_version"].get<int>() == kSchemaVersion,
          "$.schema_version", "expected " + std::to_string(kSchemaVersion));
    check(doc.contains("tool") && doc["tool"].is_object() && doc["tool"].contains("name") &&
              doc["tool"]["name"].is_string() && doc["tool"].contains("version") &&
              doc["tool"]["version"].is_string(),
          "$.tool", "expected {name, version} strings");
    check(doc.contains("config") && doc["config"].is_object(), "$.config", "expected an object");
    const auto& cfg = doc["config"];
    check(cfg.contains("runs") && cfg["runs"].is_number_integer(), "$.config.runs", "expected an integer");
    check(cfg.contains("dataset") && cfg["dataset"].is_object(), "$.config.dataset", "expected an object");
    check(cfg.contains("methods") && cfg["methods"].is_array(), "$.config.methods", "expected an array");
    check(doc.contains("datasets") && doc["datasets"].is_array(), "$.datasets", "expected an array");
    for (std::size_t di = 0; di < doc["datasets"].size(); ++di) {
        const auto& d = doc["datasets"][di];
        const std::string dw = "$.datasets[" + std::to_string(di) + "]";
        check(d.is_object() && d.contains("name") && d["name"].is_string(), dw, "missing name");
        check(d.contains("n") && d["n"].is_number_unsigned(), dw + ".n", "expected a count");
        check(d.contains("dim") && d["dim"].is_number_unsigned(), dw + ".dim", "expected a count");
        check(d.contains("description") && d["description"].is_object(), dw + ".description", "expected an object");
        check(d.contains("methods") && d["methods"].is_array(), dw + ".methods", "expected an array");
        const std::size_t dim = d["dim"].get<std::size_t>();
        for (std::size_t mi = 0; mi < d["methods"].size(); ++mi) {
            const auto& m = d["methods"][mi];
            const std::string mw = dw + ".methods[" + std::to_string(mi) + "]";
            check(m.is_object() && m.contains("method") && m["method"].is_string(), mw, "missing method");
            check(m.contains("label") && m["label"].is_string(), mw + ".label", "expected a string");
            check(m.contains("options") && m["options"].is_object(), mw + ".options", "expected an object");
            check(m.contains("runs") && m["runs"].is_array(), mw + ".runs", "expected an array");
            check(m.contains("aggregate") && m["aggregate"].is_object(), mw + ".aggregate", "expected an object");
            const auto& agg = m["aggregate"];
            check(agg.contains("runs_ok") && agg["runs_ok"].is_number_unsigned() &&
                      agg.contains("runs_failed") && agg["runs_failed"].is_number_unsigned(),
                  mw + ".aggregate", "expected run counts");
            check(agg["runs_ok"].get<std::size_t>() + agg["runs_failed"].get<std::size_t>() ==
                      m["runs"].size(),
                  mw + ".aggregate", "run counts do not add up");
            for (std::size_t ri = 0; ri < m["runs"].size(); ++ri) {
                const auto& r = m["runs"][ri];
                const std::string rw = mw + ".runs[" + std::to_string(ri) + "]";
                check(r.is_object() && r.contains("status") && r["status"].is_string(), rw, "missing status");
                const auto status = r["status"].get<std::string>();
                check(status == "ok" || status == "fails", rw + ".status", "expected ok or fails");
                check(r.contains("run") && r["run"].is_number_integer(), rw + ".run", "expected an integer");
                check(r.contains("seed") && r["seed"].is_number_unsigned(), rw + ".seed", "expected an integer");
                check(r.contains("seconds") && r["seconds"].is_number() && r["seconds"].get<double>() >= 0.0,
                      rw + ".seconds", "expected a nonnegative number");
                check(r.contains("iterations") && r["iterations"].is_number_integer(), rw + ".iterations",
                      "expected an integer");
                check(r.contains("converged") && r["converged"].is_boolean(), rw + ".converged", "expected a bool");
                check(r.contains("cluster_sizes") && r["cluster_sizes"].is_array(), rw + ".cluster_sizes",
                      "expected an array");
                check(r.contains("metrics") && (r["metrics"].is_null() || r["metrics"].is_object()),
                      rw + ".metrics", "expected an object or null");
                check(r.contains("alignment") && (r["alignment"].is_null() || r["alignment"].is_object()),
                      rw + ".alignment", "expected an object or null");
                if (status == "fails") {
                    check(r.contains("message") && r["message"].is_string(), rw + ".message",
                          "failed runs carry a message");
                    continue;
                }
                std::size_t total = 0;
                for (const auto& s : r["cluster_sizes"]) total += s.get<std::size_t>();
                check(total == d["n"].get<std::size_t>(), rw + ".cluster_sizes", "sizes do not sum to n");
                if (r["metrics"].is_object()) {
                    const auto& mt = r["metrics"];
                    for (const char* key : {"nmi", "accuracy", "mean_iou"}) {
                        check(mt.contains(key), rw + ".metrics", std::string("missing ") + key);
                        check_unit_interval(mt[key], rw + ".metrics." + key);
                    }
                    check(mt.contains("per_class_iou") && mt["per_class_iou"].is_array() &&
                              mt["per_class_iou"].size() == dim,
                          rw + ".metrics.per_class_iou", "expected dim entries");
                    check(mt.contains("confusion") && mt["confusion"].is_array(), rw + ".metrics.confusion",
                          "expected a matrix");
                    std::size_t ctotal = 0;
                    for (const auto& row : mt["confusion"]) {
                        check(row.is_array() && row.size() == dim, rw + ".metrics.confusion",
                              "rows must have dim entries");
                        for (const auto& v : row) ctotal += v.get<std::size_t>();
                    }
                    check(ctotal == d["n"].get<std::size_t>(), rw + ".metrics.confusion",
                          "entries do not sum to n");
                }
            }
        }
    }
}

std::string emit_json(const BenchReport& report) {
    const json doc = to_json(report);
    validate_report(doc);
    return doc.dump(2) + "\n";
}

std::string render_table(const BenchReport& report) {
    std::ostringstream out;
    if (report.datasets.empty()) {
        out << "(no runs)\n";
        return out.str();
    }
    const auto pm = [](bool has, double mean, double sd) {
        return has ? format_fixed(100.0 * mean, 2) + " ± " + format_fixed(100.0 * sd, 2)
                   : std::string("-");
    };
    for (const auto& d : report.datasets) {
        out << "dataset " << d.name << "  (n = " << d.n << ", d = " << d.dim << ")\n";
        std::size_t width = 6;
        for (const auto& m : d.methods) width = std::max(width, m.spec.label.size());
        const auto pad = [](std::string s, std::size_t w) {
            // Count code points so "±" does not skew the columns.
            std::size_t len = 0;
            for (unsigned char c : s) len += (c & 0xC0) != 0x80 ? 1 : 0;
            if (len < w) s.append(w - len, ' ');
            return s;
        };
        out << pad("method", width) << "  " << pad("runs", 6) << "  " << pad("NMI", 15) << "  "
            << pad("Acc", 15) << "  " << pad("mIoU", 15) << "  " << pad("time [s]", 9) << "  iters\n";
        for (const auto& m : d.methods) {
            const auto& a = m.summary;
            const std::string runs = std::to_string(a.ok) + "/" + std::to_string(m.runs.size());
            std::string nmi = a.ok == 0 ? std::string("fails") : pm(a.has_metrics, a.nmi_mean, a.nmi_std);
            double iters = 0.0;
            for (const auto& r : m.runs) {
                if (r.status == "ok") iters += r.iterations;
            }
            out << pad(m.spec.label, width) << "  " << pad(runs, 6) << "  " << pad(nmi, 15) << "  "
                << pad(a.ok == 0 ? "-" : pm(a.has_metrics, a.accuracy_mean, a.accuracy_std), 15) << "  "
                << pad(a.ok == 0 ? "-" : pm(a.has_metrics, a.mean_iou_mean, a.mean_iou_std), 15) << "  "
                << pad(a.ok == 0 ? "-" : format_fixed(a.seconds_mean, 3), 9) << "  "
                << (a.ok == 0 ? std::string("-") : format_fixed(iters / static_cast<double>(a.ok), 1))
                << "\n";
        }
        out << "\n";
    }
    return out.str();
}

BenchConfig parse_config(const std::string& text) {
    BenchConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    enum class Section { kNone, kBench, kDataset, kMethod } section = Section::kNone;
    std::vector<std::pair<std::string, std::map<std::string, std::string>>> methods;
    std::map<std::string, std::string> dataset;
    bool saw_dataset = false;
    const auto fail = [&](const std::string& what) {
        return ConfigError("config line " + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw fail("unterminated section header");
            const std::string header = trim(line.substr(1, line.size() - 2));
            if (header == "bench") {
                section = Section::kBench;
            } else if (header == "dataset") {
                if (saw_dataset) throw fail("only one [dataset] section is allowed");
                saw_dataset = true;
                section = Section::kDataset;
            } else if (header.rfind("method", 0) == 0 && header.size() > 6 &&
                       (header[6] == ' ' || header[6] == '\t')) {
                section = Section::kMethod;
                methods.emplace_back(trim(header.substr(7)), std::map<std::string, std::string>{});
            } else {
                throw fail("unknown section [" + header + "]");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw fail("expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw fail("empty key");
        std::map<std::string, std::string>* target = nullptr;
        std::map<std::string, std::string> bench_keys;
        switch (section) {
            case Section::kNone: throw fail("key outside of a section");
            case Section::kBench:
                if (key == "runs") {
                    cfg.runs = bounded_int(key, value, 0, 100000);
                } else if (key == "threads") {
                    cfg.threads = bounded_int(key, value, 1, 1024);
                } else {
                    throw fail("unknown [bench] key '" + key + "'");
                }
                continue;
            case Section::kDataset: target = &dataset; break;
            case Section::kMethod: target = &methods.back().second; break;
        }
        if (target->count(key)) throw fail("duplicate key '" + key + "'");
        (*target)[key] = value;
    }

    if (!saw_dataset) throw ConfigError("config has no [dataset] section");
    const auto get = [&](const std::string& k) -> std::optional<std::string> {
        const auto it = dataset.find(k);
        if (it == dataset.end()) return std::nullopt;
        return it->second;
    };
    const std::string kind = get("kind").value_or("simu");
    std::set<std::string> allowed;
    if (kind == "simu" || kind == "isimus") {
        cfg.dataset.kind = kind == "simu" ? DatasetKind::kSimu : DatasetKind::kIsimus;
        allowed = {"kind", "n", "seed"};
        if (auto n = get("n")) cfg.dataset.n = static_cast<std::size_t>(bounded_int("n", *n, 1, 100000000));
        if (auto s = get("seed")) {
            const long long v = parse_int("seed", *s);
            require(v >= 0, "dataset seed must be nonnegative");
            cfg.dataset.seed = static_cast<std::uint64_t>(v);
        }
        if (kind == "isimus") {
            allowed.insert("mixtures");
            if (auto mx = get("mixtures"); mx && *mx != "all") {
                cfg.dataset.mixtures.clear();
                std::istringstream parts(*mx);
                std::string part;
                while (std::getline(parts, part, ',')) {
                    cfg.dataset.mixtures.push_back(bounded_int("mixtures", trim(part), 0, 5));
                }
                require(!cfg.dataset.mixtures.empty(), "mixtures must list at least one index");
            }
        }
    } else if (kind == "file") {
        cfg.dataset.kind = DatasetKind::kFile;
        allowed = {"kind", "path", "labels"};
        const auto p = get("path");
        require(p.has_value() && !p->empty(), "file dataset needs a path");
        cfg.dataset.path = *p;
        if (auto l = get("labels")) cfg.dataset.labels = *l;
    } else {
        throw ConfigError("dataset kind must be simu, isimus or file, got '" + kind + "'");
    }
    for (const auto& [k, v] : dataset) {
        if (!allowed.count(k)) throw ConfigError("unknown [dataset] key '" + k + "' for kind " + kind);
    }

    std::set<std::string> labels;
    for (const auto& [name, opts] : methods) {
        auto spec = make_method(name, opts);
        if (!labels.insert(spec.label).second) {
            throw ConfigError("duplicate method label '" + spec.label +
                              "' (set label = ... to run a method twice)");
        }
        cfg.methods.push_back(std::move(spec));
    }
    return cfg;
}

BenchConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace ksb::bench
