#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kpm/chebyshev.hpp"
#include "kpm/oracle.hpp"

namespace kpm {

enum class Provenance { exact, hutchinson, hutchinson_approx };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& name);

/// Estimates of tau_k = (1/n) tr(Tbar_k(A)) for k = 1..N; tau_0 is fixed at 1/sqrt(pi).
class MomentVector {
public:
    MomentVector(int degree, std::vector<double> values, Provenance provenance, int ell = 0, std::uint64_t seed = 0);

    [[nodiscard]] int degree() const { return static_cast<int>(values_.size()); }
    /// tau_1..tau_N.
    [[nodiscard]] std::span<const double> values() const { return values_; }
    /// tau_k, with tau_0 = 1/sqrt(pi).
    [[nodiscard]] double at(int k) const { return k == 0 ? kInvSqrtPi : values_[static_cast<std::size_t>(k - 1)]; }
    [[nodiscard]] Provenance provenance() const { return provenance_; }
    [[nodiscard]] int ell() const { return ell_; }
    [[nodiscard]] std::uint64_t seed() const { return seed_; }

    /// Oracle calls spent producing the estimate.
    std::uint64_t oracle_calls = 0;
    /// Non-fatal conditions noticed during estimation (e.g. eps_mv above the stability threshold).
    std::vector<std::string> warnings;

private:
    std::vector<double> values_;
    Provenance provenance_;
    int ell_;
    std::uint64_t seed_;
};

/// Configuration tying the target accuracy to degree, repetitions and oracle accuracy.
struct EstimationConfig {
    double eps = 0.1;
    double delta = 0.1;
    int degree = 180;
    int ell = 1;
    double moment_tolerance = 1.0 / (180.0 * 180.0);  // Delta
    double eps_mv = 0.0;
    double constant_c = 16.0;

    /// N = 4 ceil(18 / (4 eps)), Delta = 1/N^2, ell from repetitions_for, eps_mv = Delta / (4 N^2).
    static EstimationConfig for_accuracy(double eps, double delta, std::size_t dimension, double constant_c = 16.0);
    void validate() const;
};

/// ell = max(1, ceil(C log^2(N / delta) / (n Delta^2))).
int repetitions_for(int degree, double delta, std::size_t dimension, double moment_tolerance, double constant_c);

/// +-1 probe vector for repetition `rep`, keyed on (seed, rep).
std::vector<double> rademacher_probe(std::size_t n, std::uint64_t seed, std::uint64_t rep);

/// g^T T_k(A) g for k = 1..N from one forward recurrence (N oracle calls tagged with `stream`).
std::vector<double> probe_quadratic_forms(const MatvecOracle& oracle, std::span<const double> g, int degree,
                                          std::uint64_t stream = 0);

/// Exact moments through all n standard basis vectors; requires an exact oracle.
MomentVector exact_moments(const MatvecOracle& oracle, int degree, int workers = 1);

/// Exact moments from a known spectrum.
MomentVector moments_from_spectrum(std::span<const double> eigenvalues, int degree);

/// Hutchinson estimator with exact products; N * ell oracle calls.
MomentVector hutchinson_moments(const MatvecOracle& oracle, int degree, int ell, std::uint64_t seed, int workers = 1);

/// Hutchinson estimator over an approximate oracle; identical to hutchinson_moments when eps_mv = 0.
MomentVector approx_hutchinson_moments(const MatvecOracle& oracle, int degree, int ell, std::uint64_t seed,
                                       int workers = 1);

/// Every vector of one forward recurrence run, approximate and exact side by side.
struct RecurrenceTrace {
    std::vector<std::vector<double>> approx;       // v~_0..v~_N
    std::vector<std::vector<double>> exact;        // v_0..v_N = T_k(A) g
    std::vector<std::vector<double>> oracle_out;   // w_0..w_{N-1}
    std::vector<std::vector<double>> step_error;   // xi_0..xi_N, xi_k = A v~_{k-1} - w_{k-1}, xi_0 = 0
    std::vector<std::vector<double>> accumulated;  // delta_0..delta_N = v_k - v~_k
};

RecurrenceTrace trace_recurrence(const MatvecOracle& oracle, const SymmetricMatrix& matrix, std::span<const double> g,
                                 int degree, std::uint64_t stream = 0);

struct ErrorDecomposition {
    std::vector<std::vector<double>> measured;       // delta_k as recorded
    std::vector<std::vector<double>> reconstructed;  // U_{k-1}(A) xi_1 + 2 sum_{i>=2} U_{k-i}(A) xi_i
    double max_relative_mismatch = 0.0;
};

/// Rebuilds each delta_k from the per-step errors through second-kind polynomials of A.
ErrorDecomposition recurrence_error_decomposition(const RecurrenceTrace& trace, const SymmetricMatrix& matrix);

std::string moments_to_json(const MomentVector& m);
MomentVector moments_from_json(const std::string& text);

}  // namespace kpm
