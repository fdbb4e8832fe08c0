#pragma once

// Synthetic mixtures, prediction-file ingestion and probability-map
// downsampling.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ksbetas/simplex.hpp"

namespace ksb {

// Portable generator: std::mt19937_64 is fully specified by the standard,
// and every variate below is derived from its raw output by hand, so a seed
// produces the same data on every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    // Uniform on (0, 1), never zero.
    double uniform_open();
    // Standard normal (Marsaglia polar method).
    double normal();
    // Gamma(shape, 1) via Marsaglia–Tsang, with the U^(1/a) boost for a < 1.
    double gamma(double shape);
    // Index drawn with the given (non-negative) weights.
    std::size_t categorical(const std::vector<double>& weights);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

struct DirichletComponent {
    std::vector<double> alpha;
    double weight = 0.0;
};

struct DirichletSpec {
    std::vector<DirichletComponent> components;
    std::size_t n = 0;
    std::uint64_t seed = 0;

    std::size_t dim() const { return components.empty() ? 0 : components.front().alpha.size(); }
    // Throws ConfigError unless weights are on the simplex and alphas positive.
    void validate() const;
};

struct LabeledSimplexDataset {
    SimplexDataset data;
    std::vector<int> labels;
    std::size_t num_classes = 0;
};

LabeledSimplexDataset sample_dirichlet_mixture(const DirichletSpec& spec);

// The three-component balanced mixture. Component c is the one whose mass
// leans toward vertex c: (25,5,5), (5,7,5), (1,1,5).
DirichletSpec simu_spec(std::size_t n, std::uint64_t seed);

// The six permutations of the imbalanced weights (0.75, 0.2, 0.05) over the
// Simu components, in lexicographic order of the permutation.
std::vector<DirichletSpec> make_isimus(std::size_t n, std::uint64_t seed);

inline constexpr std::array<double, 3> kIsimusWeights = {0.75, 0.2, 0.05};

enum class DataFormat { kCsv, kBinary };

// Picks the format from the extension: ".bin"/".spxd" are binary, anything
// else CSV.
DataFormat format_from_path(const std::filesystem::path& path);

// CSV: one row per point, D comma-separated decimals, optional single
// non-numeric header line. Errors carry the 1-based line number
// (DataError::index) or the 0-based row index for simplex violations.
SimplexDataset read_csv(const std::filesystem::path& path, double tol = kSimplexRowTol);
void write_csv(const std::filesystem::path& path, const SimplexDataset& data);

// Binary: "SPXD", u32 N, u32 D, N·D little-endian f32, row-major. Rows are
// validated with tolerance max(tol, 1e-6·D) to absorb f32 rounding.
SimplexDataset read_binary(const std::filesystem::path& path, double tol = kSimplexRowTol);
void write_binary(const std::filesystem::path& path, const SimplexDataset& data);

SimplexDataset load_predictions(const std::filesystem::path& path, DataFormat format,
                                double tol = kSimplexRowTol);

// One integer per line; blank trailing lines are ignored.
std::vector<int> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const std::vector<int>& labels);

// Keeps pixels (r, c) with r % f == 0 and c % f == 0 from an H×W map stored
// row-major, preserving order. Throws ConfigError for f < 1 and ShapeError
// when H·W differs from the row count.
SimplexDataset downsample_rows(const SimplexDataset& data, std::size_t height, std::size_t width,
                               std::size_t factor);

}  // namespace ksb
