#include "kpm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "kpm/error.hpp"
#include "kpm/random.hpp"

namespace kpm {

namespace {

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

SymmetricMatrix SymmetricMatrix::dense(std::size_t n, std::span<const double> row_major) {
    if (row_major.size() != n * n) throw InputError("dense matrix needs n*n entries");
    double scale = 0.0;
    for (double v : row_major) {
        if (!std::isfinite(v)) throw InputError("matrix entries must be finite");
        scale = std::max(scale, std::abs(v));
    }
    SymmetricMatrix m;
    m.n_ = n;
    m.storage_ = Storage::dense;
    m.packed_.resize(n * (n + 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double lower = row_major[i * n + j];
            const double upper = row_major[j * n + i];
            if (std::abs(lower - upper) > 1e-12 * std::max(scale, 1.0)) {
                throw InputError("matrix is not symmetric at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
            }
            m.packed_[i * (i + 1) / 2 + j] = lower;
        }
    }
    return m;
}

SymmetricMatrix SymmetricMatrix::sparse(std::size_t n, std::span<const Entry> entries, bool mirrored) {
    std::map<std::pair<std::size_t, std::size_t>, double> lower;
    std::map<std::pair<std::size_t, std::size_t>, double> upper;
    for (const auto& e : entries) {
        if (e.row >= n || e.col >= n) throw InputError("sparse entry index out of range");
        if (!std::isfinite(e.value)) throw InputError("matrix entries must be finite");
        if (e.row >= e.col || !mirrored) {
            const auto key = e.row >= e.col ? std::pair{e.row, e.col} : std::pair{e.col, e.row};
            lower[key] += e.value;
        } else {
            upper[{e.col, e.row}] += e.value;
        }
    }
    if (mirrored) {
        for (const auto& [key, v] : lower) {
            if (key.first == key.second) continue;
            auto it = upper.find(key);
            const double u = it == upper.end() ? 0.0 : it->second;
            if (std::abs(u - v) > 1e-12 * std::max(1.0, std::abs(v))) throw InputError("matrix is not symmetric");
        }
        for (const auto& [key, v] : upper) {
            if (!lower.contains(key) && v != 0.0) throw InputError("matrix is not symmetric");
        }
    }
    SymmetricMatrix m;
    m.n_ = n;
    m.storage_ = Storage::sparse;
    m.row_ptr_.assign(n + 1, 0);
    for (const auto& [key, v] : lower) {
        if (v == 0.0) continue;
        ++m.row_ptr_[key.first + 1];
    }
    std::partial_sum(m.row_ptr_.begin(), m.row_ptr_.end(), m.row_ptr_.begin());
    m.col_idx_.reserve(m.row_ptr_.back());
    m.values_.reserve(m.row_ptr_.back());
    for (const auto& [key, v] : lower) {  // map order is row-major
        if (v == 0.0) continue;
        m.col_idx_.push_back(key.second);
        m.values_.push_back(v);
    }
    return m;
}

SymmetricMatrix SymmetricMatrix::diagonal(std::span<const double> diag) {
    std::vector<Entry> entries;
    for (std::size_t i = 0; i < diag.size(); ++i) entries.push_back({i, i, diag[i]});
    return sparse(diag.size(), entries);
}

SymmetricMatrix SymmetricMatrix::identity(std::size_t n) {
    const std::vector<double> ones(n, 1.0);
    return diagonal(ones);
}

std::size_t SymmetricMatrix::nonzeros() const {
    std::size_t count = 0;
    if (storage_ == Storage::dense) {
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                if (packed_[i * (i + 1) / 2 + j] != 0.0) count += (i == j) ? 1 : 2;
            }
        }
        return count;
    }
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) count += (col_idx_[p] == i) ? 1 : 2;
    }
    return count;
}

void SymmetricMatrix::apply(std::span<const double> y, std::span<double> z) const {
    if (y.size() != n_ || z.size() != n_) throw InputError("matvec dimension mismatch");
    std::fill(z.begin(), z.end(), 0.0);
    if (storage_ == Storage::dense) {
        const double* row = packed_.data();
        for (std::size_t i = 0; i < n_; ++i) {
            double acc = 0.0;
            const double yi = y[i];
            for (std::size_t j = 0; j < i; ++j) {
                acc += row[j] * y[j];
                z[j] += row[j] * yi;
            }
            z[i] += acc + row[i] * yi;
            row += i + 1;
        }
        return;
    }
    for (std::size_t i = 0; i < n_; ++i) {
        double acc = 0.0;
        const double yi = y[i];
        for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
            const std::size_t j = col_idx_[p];
            acc += values_[p] * y[j];
            if (j != i) z[j] += values_[p] * yi;
        }
        z[i] += acc;
    }
}

double SymmetricMatrix::at(std::size_t i, std::size_t j) const {
    if (i >= n_ || j >= n_) throw InputError("matrix index out of range");
    if (i < j) std::swap(i, j);
    if (storage_ == Storage::dense) return packed_[i * (i + 1) / 2 + j];
    const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
    const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
    const auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return 0.0;
    return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

std::vector<double> SymmetricMatrix::to_dense() const {
    std::vector<double> out(n_ * n_, 0.0);
    if (storage_ == Storage::dense) {
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j <= i; ++j) out[i * n_ + j] = out[j * n_ + i] = packed_[i * (i + 1) / 2 + j];
        }
        return out;
    }
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
            out[i * n_ + col_idx_[p]] = out[col_idx_[p] * n_ + i] = values_[p];
        }
    }
    return out;
}

SymmetricMatrix SymmetricMatrix::scaled(double factor) const {
    SymmetricMatrix m = *this;
    for (double& v : m.packed_) v *= factor;
    for (double& v : m.values_) v *= factor;
    return m;
}

SymmetricMatrix SymmetricMatrix::to_sparse() const {
    if (storage_ == Storage::sparse) return *this;
    const auto entries = lower_entries();
    return sparse(n_, entries);
}

std::vector<SymmetricMatrix::Entry> SymmetricMatrix::lower_entries() const {
    std::vector<Entry> entries;
    if (storage_ == Storage::dense) {
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                const double v = packed_[i * (i + 1) / 2 + j];
                if (v != 0.0) entries.push_back({i, j, v});
            }
        }
        return entries;
    }
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) entries.push_back({i, col_idx_[p], values_[p]});
    }
    return entries;
}

double SymmetricMatrix::trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < n_; ++i) t += at(i, i);
    return t;
}

double SymmetricMatrix::frobenius_norm() const {
    double s = 0.0;
    if (storage_ == Storage::dense) {
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                const double v = packed_[i * (i + 1) / 2 + j];
                s += (i == j ? 1.0 : 2.0) * v * v;
            }
        }
    } else {
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
                s += (col_idx_[p] == i ? 1.0 : 2.0) * values_[p] * values_[p];
            }
        }
    }
    return std::sqrt(s);
}

void MatvecOracle::apply(std::span<const double> y, std::span<double> z, CallTag tag) const {
    if (y.size() != dimension() || z.size() != dimension()) throw InputError("oracle dimension mismatch");
    calls_.fetch_add(1, std::memory_order_relaxed);
    do_apply(y, z, tag);
}

ExactOracle::ExactOracle(std::shared_ptr<const SymmetricMatrix> matrix) : matrix_(std::move(matrix)) {
    if (!matrix_) throw ConfigError("oracle needs a matrix");
}

void ExactOracle::do_apply(std::span<const double> y, std::span<double> z, CallTag) const { matrix_->apply(y, z); }

NoisyOracle::NoisyOracle(std::shared_ptr<const SymmetricMatrix> matrix, double eps_mv, NoiseMode mode,
                         std::uint64_t seed)
    : matrix_(std::move(matrix)), eps_mv_(eps_mv), mode_(mode), seed_(seed) {
    if (!matrix_) throw ConfigError("oracle needs a matrix");
    if (!(eps_mv >= 0.0 && eps_mv < 1.0)) throw ConfigError("eps_mv must lie in [0, 1)");
}

void NoisyOracle::do_apply(std::span<const double> y, std::span<double> z, CallTag tag) const {
    const auto out = noisy_apply(*matrix_, y, eps_mv_, mode_, seed_, tag);
    std::copy(out.begin(), out.end(), z.begin());
}

std::vector<double> exact_apply(const SymmetricMatrix& m, std::span<const double> y) {
    std::vector<double> z(m.dimension());
    m.apply(y, z);
    return z;
}

std::vector<double> noisy_apply(const SymmetricMatrix& m, std::span<const double> y, double eps_mv, NoiseMode mode,
                                std::uint64_t seed, CallTag tag) {
    if (!(eps_mv >= 0.0 && eps_mv < 1.0)) throw ConfigError("eps_mv must lie in [0, 1)");
    auto z = exact_apply(m, y);
    const double radius = eps_mv * norm2(y);
    if (radius == 0.0) return z;
    const std::size_t n = y.size();
    std::vector<double> e(n);
    if (mode == NoiseMode::random_direction) {
        auto engine = keyed_engine({seed, tag.stream, tag.step});
        std::normal_distribution<double> normal;
        double len = 0.0;
        while (len == 0.0) {
            for (double& v : e) v = normal(engine);
            len = norm2(e);
        }
        for (double& v : e) v *= radius / len;
    } else {
        const double per = radius / std::sqrt(static_cast<double>(n));
        for (std::size_t i = 0; i < n; ++i) e[i] = y[i] < 0.0 ? -per : per;
    }
    for (std::size_t i = 0; i < n; ++i) z[i] += e[i];
    return z;
}

double estimate_spectral_norm(const SymmetricMatrix& m, int iterations, std::uint64_t seed) {
    if (iterations < 1) throw ConfigError("power iteration needs at least one step");
    const std::size_t n = m.dimension();
    if (n == 0) return 0.0;
    auto engine = keyed_engine({seed});
    std::normal_distribution<double> normal;
    std::vector<double> y(n);
    for (double& v : y) v = normal(engine);
    double len = norm2(y);
    for (double& v : y) v /= len;
    std::vector<double> z(n);
    double estimate = 0.0;
    for (int it = 0; it < iterations; ++it) {
        m.apply(y, z);
        estimate = norm2(z);  // ||A y|| with ||y|| = 1 never exceeds ||A||
        if (estimate == 0.0) return 0.0;
        for (std::size_t i = 0; i < n; ++i) y[i] = z[i] / estimate;
    }
    return estimate;
}

double norm_scale_factor(double nu, double margin) {
    if (nu <= 0.0) return 1.0;
    return 1.0 / (nu * (1.0 + margin));
}

SymmetricMatrix parse_matrix_market(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw InputError("empty Matrix Market input");
    std::istringstream banner(line);
    std::string tag, object, format, field, symmetry;
    banner >> tag >> object >> format >> field >> symmetry;
    auto lower = [](std::string s) {
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
        return s;
    };
    if (tag != "%%MatrixMarket" || lower(object) != "matrix" || lower(format) != "coordinate") {
        throw InputError("expected a '%%MatrixMarket matrix coordinate' banner");
    }
    field = lower(field);
    symmetry = lower(symmetry);
    if (field != "real" && field != "integer" && field != "pattern") {
        throw InputError("unsupported Matrix Market field '" + field + "'");
    }
    if (symmetry != "symmetric" && symmetry != "general") {
        throw InputError("unsupported Matrix Market symmetry '" + symmetry + "'");
    }
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '%') break;
    }
    std::istringstream size_line(line);
    std::size_t rows = 0, cols = 0, nnz = 0;
    if (!(size_line >> rows >> cols >> nnz)) throw InputError("malformed Matrix Market size line");
    if (rows != cols) throw InputError("matrix must be square");
    std::vector<SymmetricMatrix::Entry> entries;
    entries.reserve(nnz);
    for (std::size_t k = 0; k < nnz; ++k) {
        std::size_t i = 0, j = 0;
        double v = 1.0;
        if (!(in >> i >> j)) throw InputError("Matrix Market file ends early");
        if (field != "pattern" && !(in >> v)) throw InputError("Matrix Market entry missing value");
        if (i == 0 || j == 0 || i > rows || j > cols) throw InputError("Matrix Market index out of range");
        if (symmetry == "symmetric" && i < j) throw InputError("symmetric Matrix Market entries must be lower-triangular");
        entries.push_back({i - 1, j - 1, v});
    }
    return SymmetricMatrix::sparse(rows, entries, symmetry == "general");
}

SymmetricMatrix read_matrix_market(const std::filesystem::path& path) { return parse_matrix_market(read_file(path)); }

SymmetricMatrix parse_dense_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::vector<double> r;
        std::string tok;
        while (row >> tok) {
            try {
                std::size_t used = 0;
                r.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw InputError("bad number '" + tok + "'");
            } catch (const std::logic_error&) {
                throw InputError("bad number '" + tok + "'");
            }
        }
        if (r.empty()) continue;
        if (rows == 0) cols = r.size();
        if (r.size() != cols) throw InputError("ragged dense matrix rows");
        values.insert(values.end(), r.begin(), r.end());
        ++rows;
    }
    if (rows == 0) throw InputError("empty dense matrix");
    if (rows != cols) throw InputError("dense matrix must be square");
    return SymmetricMatrix::dense(rows, values);
}

SymmetricMatrix read_dense_text(const std::filesystem::path& path) { return parse_dense_text(read_file(path)); }

SymmetricMatrix read_matrix(const std::filesystem::path& path) {
    const auto text = read_file(path);
    if (text.rfind("%%MatrixMarket", 0) == 0) return parse_matrix_market(text);
    return parse_dense_text(text);
}

void write_matrix_market(const SymmetricMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    const auto entries = m.lower_entries();
    const std::size_t n = m.dimension();
    out << "%%MatrixMarket matrix coordinate real symmetric\n" << n << ' ' << n << ' ' << entries.size() << '\n';
    out.precision(17);
    for (const auto& e : entries) out << e.row + 1 << ' ' << e.col + 1 << ' ' << e.value << '\n';
}

std::string to_string(NoiseMode mode) {
    return mode == NoiseMode::random_direction ? "random-direction" : "adversarial-sign";
}

NoiseMode noise_mode_from_string(const std::string& name) {
    if (name == "random-direction") return NoiseMode::random_direction;
    if (name == "adversarial-sign") return NoiseMode::adversarial_sign;
    throw ConfigError("unknown noise mode '" + name + "'");
}

}  // namespace kpm
