// ksbetas command line: simulate datasets, cluster a prediction file, run benchmarks.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "ksbetas/bench.hpp"
#include "ksbetas/bench_data.hpp"
#include "ksbetas/error.hpp"

namespace fs = std::filesystem;
using namespace ksb;

namespace {

enum Exit { kOk = 0, kConfig = 1, kData = 2, kMethod = 3 };

void write_dataset(const fs::path& path, const SimplexDataset& data, DataFormat format) {
    if (format == DataFormat::kBinary) {
        write_binary(path, data);
    } else {
        write_csv(path, data);
    }
}

fs::path labels_path_for(const fs::path& data_path) {
    return data_path.parent_path() / (data_path.stem().string() + ".labels.txt");
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path.string() + " for writing", 0);
    out << text;
    if (!out) throw DataError("failed writing " + path.string(), 0);
}

struct SimulateArgs {
    std::string dataset = "simu";
    std::size_t n = 100000;
    std::uint64_t seed = 0;
    std::string out;
    std::string format;
};

int run_simulate(const SimulateArgs& a) {
    const fs::path out = a.out;
    DataFormat format = a.format.empty() ? format_from_path(out)
                                         : (a.format == "binary" ? DataFormat::kBinary : DataFormat::kCsv);
    if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
    const auto emit = [&](const fs::path& path, const DirichletSpec& spec) {
        const auto sample = sample_dirichlet_mixture(spec);
        write_dataset(path, sample.data, format);
        write_labels(labels_path_for(path), sample.labels);
        std::cout << path.string() << ": " << sample.data.size() << " rows, " << sample.data.dim()
                  << " columns\n";
    };
    if (a.dataset == "simu") {
        emit(out, simu_spec(a.n, a.seed));
    } else {
        const auto specs = make_isimus(a.n, a.seed);
        for (std::size_t i = 0; i < specs.size(); ++i) {
            const fs::path p =
                out.parent_path() / (out.stem().string() + "_" + std::to_string(i) + out.extension().string());
            emit(p, specs[i]);
        }
    }
    return kOk;
}

struct ClusterArgs {
    std::string method = "k-sbetas";
    std::string input;
    std::string labels;
    std::string out;
    std::map<std::string, std::string> options;
};

int run_cluster(const ClusterArgs& a) {
    const auto spec = bench::make_method(a.method, a.options);
    bench::RunData rd;
    rd.data = load_predictions(a.input, format_from_path(a.input));
    if (!a.labels.empty()) {
        auto labels = read_labels(a.labels);
        if (labels.size() != rd.data.size()) {
            throw DataError("labels file has " + std::to_string(labels.size()) + " rows, data has " +
                                std::to_string(rd.data.size()),
                            0);
        }
        rd.labels = std::move(labels);
    }
    bench::MethodOutcome outcome;
    try {
        outcome = bench::run_method(spec, rd.data);
    } catch (const ConfigError&) {
        throw;
    } catch (const DataError&) {
        throw;
    } catch (const Error& e) {
        std::cerr << "error: method " << spec.name << " failed: " << e.what() << "\n";
        return kMethod;
    }
    if (!a.out.empty()) {
        std::vector<int> labels(outcome.assignment.labels.begin(), outcome.assignment.labels.end());
        write_labels(a.out, labels);
    }
    nlohmann::json summary{{"method", spec.name},
                           {"options", spec.options_json()},
                           {"n", rd.data.size()},
                           {"dim", rd.data.dim()},
                           {"iterations", outcome.iterations},
                           {"converged", outcome.converged},
                           {"cluster_sizes", cluster_sizes(outcome.assignment)}};
    if (rd.labels) {
        const std::size_t k = outcome.assignment.num_clusters;
        const std::size_t d = rd.data.dim();
        const auto map = (spec.align == AlignMethod::kHungarian && k == d) ? hungarian_align(outcome.centroids)
                                                                           : argmax_align(outcome.centroids);
        const auto m = evaluate(outcome.assignment.labels, *rd.labels, map, k, d);
        summary["metrics"] = {{"nmi", m.nmi}, {"accuracy", m.accuracy}, {"mean_iou", m.mean_iou}};
        summary["alignment"] = map.cluster_to_class;
    }
    std::cout << summary.dump(2) << "\n";
    return kOk;
}

struct BenchArgs {
    std::string config;
    std::string out = ".";
    int threads = 1;
};

int run_bench_cmd(const BenchArgs& a) {
    auto cfg = bench::load_config(a.config);
    // Explicit config value wins over the flag; the environment wins over both.
    if (cfg.threads == 0) cfg.threads = a.threads;
    const auto report = bench::run_bench(cfg);
    const fs::path dir = a.out;
    fs::create_directories(dir);
    write_text(dir / "report.json", bench::emit_json(report));
    const auto table = bench::render_table(report);
    write_text(dir / "report.txt", table);
    std::cout << table;
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"k-sBetas clustering of probability-simplex predictions"};
    app.set_version_flag("--version", std::string(bench::kToolName) + " " + bench::kToolVersion);
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "sample a synthetic Dirichlet-mixture dataset");
    sim_cmd->add_option("--dataset", sim.dataset, "simu or isimus")
        ->check(CLI::IsMember({"simu", "isimus"}));
    sim_cmd->add_option("--n", sim.n, "number of points")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--seed", sim.seed, "random seed");
    sim_cmd->add_option("--out", sim.out, "output file (isimus writes <stem>_<i> files)")->required();
    sim_cmd->add_option("--format", sim.format, "csv or binary (default: from extension)")
        ->check(CLI::IsMember({"csv", "binary"}));

    ClusterArgs cl;
    auto* cl_cmd = app.add_subcommand("cluster", "cluster one prediction file");
    cl_cmd->add_option("--method", cl.method, "clustering method");
    cl_cmd->add_option("--input", cl.input, "CSV or binary prediction file")->required();
    cl_cmd->add_option("--labels", cl.labels, "ground-truth labels, one per line");
    cl_cmd->add_option("--out", cl.out, "write predicted cluster labels here");
    std::map<std::string, std::string> raw;
    for (const char* key : {"delta", "tau-minus", "tau-plus", "iters", "estimator", "pi", "init", "align",
                            "mle-iters", "mle-tol", "lambda0"}) {
        cl_cmd->add_option(std::string("--") + key, raw[key]);
    }

    BenchArgs bn;
    auto* bn_cmd = app.add_subcommand("bench", "run a benchmark config");
    bn_cmd->add_option("--config", bn.config, "benchmark config file")->required();
    bn_cmd->add_option("--out", bn.out, "output directory for report.json and report.txt");
    bn_cmd->add_option("--threads", bn.threads, "worker threads (KSBETAS_THREADS overrides)")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*sim_cmd) return run_simulate(sim);
        if (*cl_cmd) {
            for (const auto& [k, v] : raw) {
                if (cl_cmd->count(std::string("--") + k) > 0) cl.options[k] = v;
            }
            return run_cluster(cl);
        }
        if (*bn_cmd) return run_bench_cmd(bn);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kMethod;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    }
    return kOk;
}
