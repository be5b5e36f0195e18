#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kpm/chebyshev.hpp"
#include "kpm/jackson.hpp"
#include "kpm/moments.hpp"

namespace kpm {

/// A probability density on [-1, 1] that can be integrated in closed form.
class IntegrableDensity {
public:
    virtual ~IntegrableDensity() = default;

    /// Mass on [-1, x].
    [[nodiscard]] virtual double cdf(double x) const = 0;
    /// Integral of x q(x) over [a, b].
    [[nodiscard]] virtual double first_moment(double a, double b) const = 0;
};

enum class DensityForm { idealized, shifted_rescaled };

std::string to_string(DensityForm form);

struct DensityMetadata {
    DensityForm form = DensityForm::idealized;
    Provenance moment_provenance = Provenance::exact;
    int ell = 0;
    std::uint64_t seed = 0;
    /// Set after laplacian_reflect: the density describes -x of the source, and the
    /// Laplacian spectrum is recovered on [0, 2] by adding `offset`.
    bool reflected = false;
    double offset = 0.0;

    friend bool operator==(const DensityMetadata&, const DensityMetadata&) = default;
};

/// q(x) = w(x) * Sum_k a_k Tbar_k(x).
class DensityEstimate final : public IntegrableDensity {
public:
    DensityEstimate(ChebyshevSeries series, DensityMetadata metadata);

    [[nodiscard]] const ChebyshevSeries& series() const { return series_; }
    [[nodiscard]] const DensityMetadata& metadata() const { return metadata_; }
    [[nodiscard]] int degree() const { return series_.degree(); }

    /// q(x); infinite at +-1 unless the polynomial vanishes there.
    [[nodiscard]] double evaluate(double x) const;
    /// Sum_k a_k Tbar_k(x), i.e. q / w.
    [[nodiscard]] double polynomial(double x) const { return series_eval(series_, x); }

    [[nodiscard]] double cdf(double x) const override;
    [[nodiscard]] double first_moment(double a, double b) const override;

private:
    ChebyshevSeries series_;
    DensityMetadata metadata_;
};

/// Damped series of exact moments, multiplied by w. Requires exact provenance.
DensityEstimate idealized_kpm(const MomentVector& moments, const JacksonCoefficients& coeffs);

/// Damped series of approximate moments, shifted by sqrt(2)/N on Tbar_0 and
/// rescaled by 1 / (1 + sqrt(2 pi)/N) so the result stays a density.
DensityEstimate full_kpm(const MomentVector& moments, const JacksonCoefficients& coeffs);

/// Closed-form integral of q over [a, b].
double density_integrate(const DensityEstimate& q, double a, double b);

/// Minimum of q / w over an evenly spaced interior grid.
double min_polynomial_on_grid(const DensityEstimate& q, int points = 10000);

/// Chebyshev-spaced abscissae on [-(1 - margin), 1 - margin], ascending.
std::vector<double> plot_grid(int points, double margin = 1e-4);

/// "x,q" CSV rows on plot_grid(points, margin).
std::string density_plot_csv(const DensityEstimate& q, int points = 1000, double margin = 1e-4);

std::string density_to_json(const DensityEstimate& q);
DensityEstimate density_from_json(const std::string& text);

}  // namespace kpm
