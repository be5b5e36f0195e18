#pragma once

#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace kpm {

inline constexpr double kInvSqrtPi = 0.56418958354775628695;   // 1/sqrt(pi)
inline constexpr double kSqrtTwoOverPi = 0.79788456080286535588;  // sqrt(2/pi)

/// Inputs within this distance outside [-1, 1] are clamped, anything further is rejected.
inline constexpr double kDomainSlack = 1e-12;

/// Clamps x into [-1, 1] or throws DomainError.
double clamp_unit(double x);

/// T_k(x) by the three-term forward recurrence.
double cheb_first(int k, double x);

/// U_k(x) for k >= -1, with U_{-1} = 0.
double cheb_second(int k, double x);

/// Normalization so that <Tbar_k, w Tbar_k> = 1: 1/sqrt(pi) for k = 0, sqrt(2/pi) otherwise.
constexpr double normalization(int k) { return k == 0 ? kInvSqrtPi : kSqrtTwoOverPi; }

/// Tbar_k(x) = normalization(k) * T_k(x).
double normalized_eval(int k, double x);

/// Closed form of the integral of T_k(x) / sqrt(1 - x^2) over [a, b].
///
/// Uses the antiderivative -sin(k arccos x)/k (arcsin x for k = 0), which is
/// finite at both endpoints, so the weight singularity is never sampled.
double cheb_weighted_integral(int k, double a, double b);

/// Integral of x T_k(x) / sqrt(1 - x^2) over [a, b], via x T_k = (T_{k+1} + T_{|k-1|}) / 2.
double cheb_weighted_first_moment(int k, double a, double b);

/// Coefficients a_0..a_N over the normalized basis Tbar_k.
class ChebyshevSeries {
public:
    ChebyshevSeries() : coeffs_(1, 0.0) {}
    explicit ChebyshevSeries(std::vector<double> coefficients);

    [[nodiscard]] int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    [[nodiscard]] std::span<const double> coefficients() const { return coeffs_; }
    [[nodiscard]] double operator[](std::size_t k) const { return coeffs_[k]; }
    double& operator[](std::size_t k) { return coeffs_[k]; }

    friend bool operator==(const ChebyshevSeries&, const ChebyshevSeries&) = default;

private:
    std::vector<double> coeffs_;
};

/// Sum_k a_k Tbar_k(x), accumulated while a single forward recurrence runs.
double series_eval(const ChebyshevSeries& series, double x);

/// Integral over [a, b] of w(x) * Sum_k a_k Tbar_k(x).
double series_weighted_integral(const ChebyshevSeries& series, double a, double b);

/// Integral over [a, b] of x * w(x) * Sum_k a_k Tbar_k(x).
double series_weighted_first_moment(const ChebyshevSeries& series, double a, double b);

/// Chebyshev weight 1/sqrt(1 - x^2); infinite at +-1.
double chebyshev_weight(double x);

}  // namespace kpm
