#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "kpm/chebyshev.hpp"

namespace kpm {

class MomentVector;

/// Largest degree accepted by jackson_coefficients; keeps the int64 convolution exact.
inline constexpr int kMaxJacksonDegree = 1 << 12;

/// Integer damping weights bhat_N[0..N], strictly decreasing and positive.
class JacksonCoefficients {
public:
    JacksonCoefficients(int degree, std::vector<std::int64_t> values);

    [[nodiscard]] int degree() const { return degree_; }
    [[nodiscard]] std::span<const std::int64_t> values() const { return values_; }

    /// bhat_N[k] / bhat_N[0].
    [[nodiscard]] double ratio(int k) const {
        return static_cast<double>(values_[static_cast<std::size_t>(k)]) / static_cast<double>(values_[0]);
    }

private:
    int degree_;
    std::vector<std::int64_t> values_;
};

/// Non-negative half of (g*g)*(g*g), g the indicator of {-N/4..N/4}.
///
/// Results are cached per degree; concurrent first use is safe. Throws
/// ConfigError unless N is a positive multiple of 4 no larger than
/// kMaxJacksonDegree.
std::shared_ptr<const JacksonCoefficients> jackson_coefficients(int degree);

/// Full symmetric convolution (g*g)*(g*g), indices -N..N stored at 0..2N. Uncached.
std::vector<std::int64_t> jackson_full_convolution(int degree);

/// Smallest multiple of 4 that is >= 18/eps.
int degree_for_accuracy(double eps);

/// Multiplies each coefficient a_k by bhat_N[k] / bhat_N[0].
ChebyshevSeries damp_series(const ChebyshevSeries& series, const JacksonCoefficients& coeffs);

/// Series with a_k = (bhat_N[k]/bhat_N[0]) tau_k; a_0 = tau_0 = 1/sqrt(pi).
ChebyshevSeries damp_moments(const MomentVector& moments, const JacksonCoefficients& coeffs);

}  // namespace kpm
