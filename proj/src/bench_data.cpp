#include "ksbetas/bench_data.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string_view>

#include "ksbetas/error.hpp"

namespace ksb {

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform_open() {
    double u = 0.0;
    do {
        u = uniform();
    } while (u == 0.0);
    return u;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u = 0.0;
    double v = 0.0;
    double s = 0.0;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * scale;
    has_spare_ = true;
    return u * scale;
}

double Rng::gamma(double shape) {
    if (!(shape > 0.0) || !std::isfinite(shape)) {
        throw DomainError("gamma variate needs a positive finite shape");
    }
    if (shape < 1.0) {
        const double g = gamma(shape + 1.0);
        return g * std::pow(uniform_open(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = 0.0;
        double v = 0.0;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform_open();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
}

std::size_t Rng::categorical(const std::vector<double>& weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) throw DomainError("categorical draw needs a positive total weight");
    const double target = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (target < acc) return i;
    }
    // Rounding left target at the very top: take the last positive weight.
    for (std::size_t i = weights.size(); i-- > 0;) {
        if (weights[i] > 0.0) return i;
    }
    return weights.size() - 1;
}

void DirichletSpec::validate() const {
    if (components.empty()) throw ConfigError("Dirichlet mixture has no components");
    const std::size_t d = dim();
    if (d < 2) throw ConfigError("Dirichlet mixture needs dimension >= 2");
    double total = 0.0;
    for (const auto& c : components) {
        if (c.alpha.size() != d) throw ConfigError("Dirichlet components differ in dimension");
        for (double a : c.alpha) {
            if (!(a > 0.0) || !std::isfinite(a)) {
                throw ConfigError("Dirichlet parameters must be positive and finite");
            }
        }
        if (!(c.weight >= 0.0)) throw ConfigError("mixture weights must be non-negative");
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("mixture weights must sum to 1");
}

LabeledSimplexDataset sample_dirichlet_mixture(const DirichletSpec& spec) {
    spec.validate();
    const std::size_t d = spec.dim();
    Rng rng(spec.seed);
    std::vector<double> weights;
    weights.reserve(spec.components.size());
    for (const auto& c : spec.components) weights.push_back(c.weight);

    LabeledSimplexDataset out;
    out.num_classes = spec.components.size();
    out.labels.resize(spec.n);
    std::vector<double> values(spec.n * d);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const std::size_t comp = rng.categorical(weights);
        out.labels[i] = static_cast<int>(comp);
        double* row = values.data() + i * d;
        double sum = 0.0;
        do {
            sum = 0.0;
            for (std::size_t n = 0; n < d; ++n) {
                row[n] = rng.gamma(spec.components[comp].alpha[n]);
                sum += row[n];
            }
        } while (!(sum > 0.0));
        for (std::size_t n = 0; n < d; ++n) row[n] /= sum;
    }
    out.data = SimplexDataset::from_rows(std::move(values), d);
    return out;
}

DirichletSpec simu_spec(std::size_t n, std::uint64_t seed) {
    const double w = 1.0 / 3.0;
    return {{{{25, 5, 5}, w}, {{5, 7, 5}, w}, {{1, 1, 5}, 1.0 - 2.0 * w}}, n, seed};
}

std::vector<DirichletSpec> make_isimus(std::size_t n, std::uint64_t seed) {
    std::array<std::size_t, 3> perm = {0, 1, 2};
    std::vector<DirichletSpec> out;
    std::uint64_t offset = 0;
    do {
        DirichletSpec spec = simu_spec(n, seed + offset++);
        for (std::size_t c = 0; c < 3; ++c) spec.components[c].weight = kIsimusWeights[perm[c]];
        out.push_back(std::move(spec));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

DataFormat format_from_path(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    return (ext == ".bin" || ext == ".spxd") ? DataFormat::kBinary : DataFormat::kCsv;
}

namespace {

std::string_view trim(std::string_view s) {
    const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && ws(s.front())) s.remove_prefix(1);
    while (!s.empty() && ws(s.back())) s.remove_suffix(1);
    return s;
}

bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

// Splits on ',' and parses every field; returns false at the first bad one.
bool parse_fields(std::string_view line, std::vector<double>& out, std::size_t& bad_field) {
    out.clear();
    std::size_t field = 0;
    for (;;) {
        const auto comma = line.find(',');
        const auto token = line.substr(0, comma);
        double v = 0.0;
        if (!parse_double(token, v)) {
            bad_field = field;
            return false;
        }
        out.push_back(v);
        if (comma == std::string_view::npos) return true;
        line.remove_prefix(comma + 1);
        ++field;
    }
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode) {
    std::ifstream in(path, mode);
    if (!in) throw DataError("cannot open " + path.string(), 0);
    return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
    std::ofstream out(path, mode);
    if (!out) throw DataError("cannot write " + path.string(), 0);
    return out;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::uint32_t read_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

constexpr char kMagic[4] = {'S', 'P', 'X', 'D'};

}  // namespace

SimplexDataset read_csv(const std::filesystem::path& path, double tol) {
    auto in = open_in(path, std::ios::in);
    std::string line;
    std::vector<double> values;
    std::vector<double> fields;
    std::size_t dim = 0;
    std::size_t line_no = 0;
    bool seen_content = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty()) continue;
        std::size_t bad = 0;
        if (!parse_fields(body, fields, bad)) {
            if (!seen_content) {  // header
                seen_content = true;
                continue;
            }
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": field " +
                                std::to_string(bad + 1) + " is not a number",
                            line_no);
        }
        seen_content = true;
        if (dim == 0) {
            dim = fields.size();
        } else if (fields.size() != dim) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                                std::to_string(dim) + " fields, found " +
                                std::to_string(fields.size()),
                            line_no);
        }
        values.insert(values.end(), fields.begin(), fields.end());
    }
    if (dim == 0) throw DataError(path.string() + ": no data rows", 0);
    return SimplexDataset::from_rows(std::move(values), dim, tol);
}

void write_csv(const std::filesystem::path& path, const SimplexDataset& data) {
    auto out = open_out(path, std::ios::out | std::ios::trunc);
    std::string line;
    for (std::size_t i = 0; i < data.size(); ++i) {
        line.clear();
        const auto row = data.row(i);
        for (std::size_t n = 0; n < row.size(); ++n) {
            if (n > 0) line += ',';
            line += format_double(row[n]);
        }
        line += '\n';
        out << line;
    }
    if (!out) throw DataError("write failed for " + path.string(), 0);
}

SimplexDataset read_binary(const std::filesystem::path& path, double tol) {
    auto in = open_in(path, std::ios::in | std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw DataError(path.string() + ": missing SPXD header", 0);
    }
    const std::size_t n = read_u32_le(bytes.data() + 4);
    const std::size_t d = read_u32_le(bytes.data() + 8);
    if (d == 0) throw DataError(path.string() + ": zero dimension", 0);
    if (bytes.size() != 12 + 4 * n * d) {
        throw DataError(path.string() + ": expected " + std::to_string(12 + 4 * n * d) +
                            " bytes, found " + std::to_string(bytes.size()),
                        0);
    }
    std::vector<double> values(n * d);
    for (std::size_t i = 0; i < n * d; ++i) {
        values[i] = static_cast<double>(std::bit_cast<float>(read_u32_le(bytes.data() + 12 + 4 * i)));
    }
    return SimplexDataset::from_rows(std::move(values), d,
                                     std::max(tol, 1e-6 * static_cast<double>(d)));
}

void write_binary(const std::filesystem::path& path, const SimplexDataset& data) {
    auto out = open_out(path, std::ios::out | std::ios::binary | std::ios::trunc);
    out.write(kMagic, 4);
    write_u32_le(out, static_cast<std::uint32_t>(data.size()));
    write_u32_le(out, static_cast<std::uint32_t>(data.dim()));
    for (double v : data.values()) write_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    if (!out) throw DataError("write failed for " + path.string(), 0);
}

SimplexDataset load_predictions(const std::filesystem::path& path, DataFormat format, double tol) {
    return format == DataFormat::kBinary ? read_binary(path, tol) : read_csv(path, tol);
}

std::vector<int> read_labels(const std::filesystem::path& path) {
    auto in = open_in(path, std::ios::in);
    std::vector<int> labels;
    std::string line;
    std::size_t line_no = 0;
    std::size_t pending_blank = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty()) {
            ++pending_blank;
            continue;
        }
        if (pending_blank > 0) {
            throw DataError(path.string() + ":" + std::to_string(line_no - 1) + ": blank line",
                            line_no - 1);
        }
        int v = 0;
        const auto res = std::from_chars(body.data(), body.data() + body.size(), v);
        if (res.ec != std::errc() || res.ptr != body.data() + body.size() || v < 0) {
            throw DataError(path.string() + ":" + std::to_string(line_no) +
                                ": expected a non-negative integer label",
                            line_no);
        }
        labels.push_back(v);
    }
    return labels;
}

void write_labels(const std::filesystem::path& path, const std::vector<int>& labels) {
    auto out = open_out(path, std::ios::out | std::ios::trunc);
    for (int v : labels) out << v << '\n';
    if (!out) throw DataError("write failed for " + path.string(), 0);
}

SimplexDataset downsample_rows(const SimplexDataset& data, std::size_t height, std::size_t width,
                               std::size_t factor) {
    if (factor < 1) throw ConfigError("downsample factor must be >= 1");
    if (height * width != data.size()) {
        throw ShapeError("downsample: " + std::to_string(height) + "x" + std::to_string(width) +
                         " grid does not match " + std::to_string(data.size()) + " rows");
    }
    std::vector<std::size_t> keep;
    keep.reserve(((height + factor - 1) / factor) * ((width + factor - 1) / factor));
    for (std::size_t r = 0; r < height; r += factor) {
        for (std::size_t c = 0; c < width; c += factor) keep.push_back(r * width + c);
    }
    return data.select(keep);
}

}  // namespace ksb
