#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace kpm {

/// Real symmetric matrix holding only its lower triangle, dense-packed or compressed-row.
class SymmetricMatrix {
public:
    enum class Storage { dense, sparse };

    struct Entry {
        std::size_t row;
        std::size_t col;
        double value;
    };

    /// From a full row-major n x n array; rejects asymmetry beyond 1e-12 relative.
    static SymmetricMatrix dense(std::size_t n, std::span<const double> row_major);
    /// From coordinate entries; each (i, j) pair is folded into the lower triangle.
    /// With `mirrored` set, both (i, j) and (j, i) are expected and must agree.
    static SymmetricMatrix sparse(std::size_t n, std::span<const Entry> entries, bool mirrored = false);
    static SymmetricMatrix diagonal(std::span<const double> diag);
    static SymmetricMatrix identity(std::size_t n);

    [[nodiscard]] std::size_t dimension() const { return n_; }
    [[nodiscard]] Storage storage() const { return storage_; }
    /// Stored nonzeros of the full symmetric matrix (both triangles counted).
    [[nodiscard]] std::size_t nonzeros() const;

    /// z = A y.
    void apply(std::span<const double> y, std::span<double> z) const;
    [[nodiscard]] double at(std::size_t i, std::size_t j) const;
    [[nodiscard]] std::vector<double> to_dense() const;
    [[nodiscard]] SymmetricMatrix scaled(double factor) const;
    [[nodiscard]] SymmetricMatrix to_sparse() const;
    /// Nonzero entries with row >= col, row-major order.
    [[nodiscard]] std::vector<Entry> lower_entries() const;
    [[nodiscard]] double trace() const;
    [[nodiscard]] double frobenius_norm() const;

private:
    SymmetricMatrix() = default;

    std::size_t n_ = 0;
    Storage storage_ = Storage::dense;
    std::vector<double> packed_;         // dense: row i holds columns 0..i
    std::vector<std::size_t> row_ptr_;   // sparse lower triangle, CSR
    std::vector<std::size_t> col_idx_;
    std::vector<double> values_;
};

/// Identifies one oracle call so randomized oracles can key their randomness
/// on (seed, stream, step) instead of on call order.
struct CallTag {
    std::uint64_t stream = 0;
    std::uint64_t step = 0;
};

/// An eps_mv-approximate matrix-vector product: ||z - A y|| <= eps_mv ||A|| ||y||.
///
/// Implementations must be callable concurrently.
class MatvecOracle {
public:
    virtual ~MatvecOracle() = default;

    [[nodiscard]] virtual std::size_t dimension() const = 0;
    /// eps_mv; zero for exact oracles.
    [[nodiscard]] virtual double error_bound() const = 0;
    /// Declared expected cost of one call, in matrix entries touched.
    [[nodiscard]] virtual double cost_per_call() const = 0;

    void apply(std::span<const double> y, std::span<double> z, CallTag tag = {}) const;

    [[nodiscard]] std::uint64_t calls() const { return calls_.load(); }
    void reset_calls() { calls_ = 0; }

protected:
    virtual void do_apply(std::span<const double> y, std::span<double> z, CallTag tag) const = 0;

private:
    mutable std::atomic<std::uint64_t> calls_{0};
};

class ExactOracle final : public MatvecOracle {
public:
    explicit ExactOracle(std::shared_ptr<const SymmetricMatrix> matrix);

    [[nodiscard]] std::size_t dimension() const override { return matrix_->dimension(); }
    [[nodiscard]] double error_bound() const override { return 0.0; }
    [[nodiscard]] double cost_per_call() const override { return static_cast<double>(matrix_->nonzeros()); }
    [[nodiscard]] const SymmetricMatrix& matrix() const { return *matrix_; }

protected:
    void do_apply(std::span<const double> y, std::span<double> z, CallTag tag) const override;

private:
    std::shared_ptr<const SymmetricMatrix> matrix_;
};

enum class NoiseMode { random_direction, adversarial_sign };

/// Exact product plus an error of norm exactly eps_mv ||y||.
class NoisyOracle final : public MatvecOracle {
public:
    NoisyOracle(std::shared_ptr<const SymmetricMatrix> matrix, double eps_mv, NoiseMode mode, std::uint64_t seed);

    [[nodiscard]] std::size_t dimension() const override { return matrix_->dimension(); }
    [[nodiscard]] double error_bound() const override { return eps_mv_; }
    [[nodiscard]] double cost_per_call() const override { return static_cast<double>(matrix_->nonzeros()); }
    [[nodiscard]] const SymmetricMatrix& matrix() const { return *matrix_; }

protected:
    void do_apply(std::span<const double> y, std::span<double> z, CallTag tag) const override;

private:
    std::shared_ptr<const SymmetricMatrix> matrix_;
    double eps_mv_;
    NoiseMode mode_;
    std::uint64_t seed_;
};

std::vector<double> exact_apply(const SymmetricMatrix& m, std::span<const double> y);

/// A y + e with ||e|| = eps_mv ||y||. Deterministic in (seed, tag).
std::vector<double> noisy_apply(const SymmetricMatrix& m, std::span<const double> y, double eps_mv, NoiseMode mode,
                                std::uint64_t seed, CallTag tag = {});

/// Power-iteration lower estimate of ||A||_2; 0 for the zero matrix.
double estimate_spectral_norm(const SymmetricMatrix& m, int iterations, std::uint64_t seed);

/// 1 / (nu (1 + margin)), or 1 when nu == 0.
double norm_scale_factor(double nu, double margin = 0.05);

/// Matrix Market coordinate file (real/integer/pattern, symmetric or general-but-symmetric).
SymmetricMatrix read_matrix_market(const std::filesystem::path& path);
SymmetricMatrix parse_matrix_market(const std::string& text);
/// Whitespace-separated dense rows.
SymmetricMatrix read_dense_text(const std::filesystem::path& path);
SymmetricMatrix parse_dense_text(const std::string& text);
/// Dispatches on a MatrixMarket banner, falling back to dense text.
SymmetricMatrix read_matrix(const std::filesystem::path& path);
void write_matrix_market(const SymmetricMatrix& m, const std::filesystem::path& path);

std::string to_string(NoiseMode mode);
NoiseMode noise_mode_from_string(const std::string& name);

}  // namespace kpm
