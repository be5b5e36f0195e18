#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "kpm/density.hpp"
#include "kpm/oracle.hpp"

namespace kpm {

/// n eigenvalues in [-1, 1], sorted ascending.
class DiscreteSpectrum {
public:
    DiscreteSpectrum() = default;
    /// Sorts; values within 1e-9 outside [-1, 1] are clamped, others rejected
    /// unless `allow_any_range` (used for spectra on the Laplacian's [0, 2]).
    explicit DiscreteSpectrum(std::vector<double> values, bool allow_any_range = false);

    [[nodiscard]] std::size_t size() const { return values_.size(); }
    [[nodiscard]] std::span<const double> values() const { return values_; }

    friend bool operator==(const DiscreteSpectrum&, const DiscreteSpectrum&) = default;

private:
    std::vector<double> values_;
};

struct GreedyDiscretization {
    DiscreteSpectrum spectrum;
    /// Non-empty when floating-point rounding left the final cell to absorb a count mismatch.
    std::vector<std::string> diagnostics;
};

/// Grid-snapping discretization: cell masses on a spacing-eps grid, rounded down
/// to multiples of 1/n with the remainder carried into the next cell.
GreedyDiscretization discretize_greedy(const IntegrableDensity& q, std::size_t n, double eps);

/// One point per 1/n quantile slab, placed at the slab's conditional mean.
DiscreteSpectrum discretize_optimal(const IntegrableDensity& q, std::size_t n);

/// W1 between two equal-size uniform discrete distributions.
double w1_discrete(const DiscreteSpectrum& a, const DiscreteSpectrum& b);

/// W1 = integral of |F_q - F_spectrum| over [-1, 1], split at eigenvalues and
/// `resolution` uniform panels; each piece is integrated in closed form.
double w1_density_vs_spectrum(const IntegrableDensity& q, const DiscreteSpectrum& spectrum, int resolution = 4000);

inline constexpr std::size_t kMaxDenseEigenDimension = 4096;

/// All eigenvalues by cyclic Jacobi rotations, sorted ascending. Values are not clamped.
std::vector<double> dense_eigenvalues(const SymmetricMatrix& m);

/// Mass of each of `bins` equal-width bins on [-1, 1].
std::vector<double> histogram(const DiscreteSpectrum& s, int bins);

/// Plain text (one value per token) or JSON {"n", "values"}. Values within 1e-9 of [-1, 1] are
/// clamped into it; anything wider is kept as-is (e.g. a Laplacian spectrum on [0, 2]).
DiscreteSpectrum read_spectrum(const std::filesystem::path& path);
DiscreteSpectrum parse_spectrum(const std::string& text);
void write_spectrum_text(const DiscreteSpectrum& s, const std::filesystem::path& path);
std::string spectrum_to_json(const DiscreteSpectrum& s);

}  // namespace kpm
