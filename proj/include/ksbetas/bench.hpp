#pragma once

// Benchmark harness: method registry, dataset expansion, the run matrix,
// and report emission (JSON with a versioned schema, plus a text table).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ksbetas/align_metrics.hpp"
#include "ksbetas/baselines.hpp"
#include "ksbetas/bench_data.hpp"
#include "ksbetas/cluster.hpp"

namespace ksb::bench {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolName = "ksbetas";
inline constexpr const char* kToolVersion = "0.1.0";

enum class MethodKind { kArgmax, kKMeans, kKLKMeans, kKMedians, kHSC, kKDirs, kKSBetas };

// Accepted method names, in display order.
const std::vector<std::string>& method_names();

struct MethodSpec {
    std::string name;   // as requested (aliases kept)
    std::string label;  // unique display name within a bench
    MethodKind kind = MethodKind::kKSBetas;
    ClusterRunConfig ksb;
    DistortionRunConfig distortion;
    KDirsConfig kdirs;
    AlignMethod align = AlignMethod::kHungarian;

    // Effective options, for the report.
    nlohmann::json options_json() const;
};

// Builds a method from its name and option overrides (keys as in the CLI,
// e.g. "tau-plus"). Throws ConfigError for unknown names, unknown or
// inapplicable keys, and out-of-range values.
MethodSpec make_method(const std::string& name,
                       const std::map<std::string, std::string>& options = {});

struct MethodOutcome {
    Assignment assignment;
    // Representative per cluster fed to the alignment step.
    std::vector<std::vector<double>> centroids;
    int iterations = 0;
    bool converged = false;
};

// Fits one method with K = D clusters. Library errors propagate.
MethodOutcome run_method(const MethodSpec& spec, const SimplexDataset& data);

enum class DatasetKind { kSimu, kIsimus, kFile };

struct DatasetSpec {
    DatasetKind kind = DatasetKind::kSimu;
    std::size_t n = 100000;
    std::uint64_t seed = 0;
    std::vector<int> mixtures = {0, 1, 2, 3, 4, 5};  // iSimus only
    std::filesystem::path path;                      // file only
    std::filesystem::path labels;                    // file only, optional
};

struct BenchConfig {
    int runs = 5;
    int threads = 0;  // 0: not set, the CLI flag decides
    DatasetSpec dataset;
    std::vector<MethodSpec> methods;
};

// Parses the sectioned key/value format described in the README.
BenchConfig parse_config(const std::string& text);
BenchConfig load_config(const std::filesystem::path& path);

// Worker count: KSBETAS_THREADS when set, else `fallback`.
int thread_count(int fallback);

struct RunResult {
    int run = 0;
    std::uint64_t seed = 0;
    std::string status;  // "ok" or "fails"
    std::string message;
    std::optional<MetricReport> metrics;
    std::optional<AlignmentMap> alignment;
    std::vector<std::size_t> cluster_sizes;
    double seconds = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct Aggregate {
    std::size_t ok = 0;
    std::size_t failed = 0;
    bool has_metrics = false;
    double nmi_mean = 0, nmi_std = 0;
    double accuracy_mean = 0, accuracy_std = 0;
    double mean_iou_mean = 0, mean_iou_std = 0;
    double seconds_mean = 0;
};

// Mean and sample standard deviation (n − 1; 0 for a single run) over the
// successful runs, accumulated in run order.
Aggregate aggregate(const std::vector<RunResult>& runs);

struct MethodResult {
    MethodSpec spec;
    std::vector<RunResult> runs;
    Aggregate summary;
};

struct DatasetResult {
    std::string name;
    nlohmann::json description;
    std::size_t n = 0;
    std::size_t dim = 0;
    std::vector<MethodResult> methods;
};

struct BenchReport {
    BenchConfig config;
    std::vector<DatasetResult> datasets;
};

// A loaded or generated dataset instance for one run.
struct RunData {
    SimplexDataset data;
    std::optional<std::vector<int>> labels;
    std::uint64_t seed = 0;
};

// One run of one method on one dataset: fit (timed), align, score. Method
// failures become status "fails".
RunResult execute_run(const MethodSpec& spec, const RunData& data, int run);

BenchReport run_bench(const BenchConfig& config);

nlohmann::json to_json(const BenchReport& report);

// Structural check of a report document; throws std::logic_error describing
// the first violation.
void validate_report(const nlohmann::json& doc);

// to_json + validate_report + dump with a trailing newline.
std::string emit_json(const BenchReport& report);

std::string render_table(const BenchReport& report);

}  // namespace ksb::bench
