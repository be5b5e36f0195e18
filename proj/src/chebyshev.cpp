#include "kpm/chebyshev.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kpm/error.hpp"

namespace kpm {

double clamp_unit(double x) {
    if (!(x >= -1.0 - kDomainSlack && x <= 1.0 + kDomainSlack)) {
        throw DomainError("argument " + std::to_string(x) + " outside [-1, 1]");
    }
    return std::clamp(x, -1.0, 1.0);
}

double cheb_first(int k, double x) {
    if (k < 0) throw DomainError("Chebyshev degree must be non-negative");
    x = clamp_unit(x);
    if (k == 0) return 1.0;
    double prev = 1.0;
    double cur = x;
    for (int j = 2; j <= k; ++j) {
        const double next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

double cheb_second(int k, double x) {
    if (k < -1) throw DomainError("second-kind degree must be >= -1");
    x = clamp_unit(x);
    if (k == -1) return 0.0;
    double prev = 0.0;  // U_{-1}
    double cur = 1.0;   // U_0
    for (int j = 1; j <= k; ++j) {
        const double next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

double normalized_eval(int k, double x) { return normalization(k) * cheb_first(k, x); }

namespace {

// Antiderivative of T_k(x) w(x), x already clamped.
double antiderivative(int k, double x) {
    if (k == 0) return std::asin(x);
    return -std::sin(k * std::acos(x)) / k;
}

void check_interval(double& a, double& b) {
    a = clamp_unit(a);
    b = clamp_unit(b);
    if (!(a < b)) {
        throw DomainError("integration interval requires a < b");
    }
}

}  // namespace

double cheb_weighted_integral(int k, double a, double b) {
    if (k < 0) throw DomainError("Chebyshev degree must be non-negative");
    check_interval(a, b);
    return antiderivative(k, b) - antiderivative(k, a);
}

double cheb_weighted_first_moment(int k, double a, double b) {
    if (k < 0) throw DomainError("Chebyshev degree must be non-negative");
    check_interval(a, b);
    if (k == 0) return antiderivative(1, b) - antiderivative(1, a);
    const int lo = k - 1;
    const int hi = k + 1;
    return 0.5 * ((antiderivative(hi, b) - antiderivative(hi, a)) +
                  (antiderivative(lo, b) - antiderivative(lo, a)));
}

ChebyshevSeries::ChebyshevSeries(std::vector<double> coefficients) : coeffs_(std::move(coefficients)) {
    if (coeffs_.empty()) throw ConfigError("Chebyshev series needs at least one coefficient");
    for (double c : coeffs_) {
        if (!std::isfinite(c)) throw ConfigError("Chebyshev series coefficients must be finite");
    }
}

double series_eval(const ChebyshevSeries& series, double x) {
    x = clamp_unit(x);
    const auto a = series.coefficients();
    double sum = a[0] * normalization(0);
    if (a.size() == 1) return sum;
    double prev = 1.0;
    double cur = x;
    sum += a[1] * kSqrtTwoOverPi * cur;
    for (std::size_t k = 2; k < a.size(); ++k) {
        const double next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
        sum += a[k] * kSqrtTwoOverPi * cur;
    }
    return sum;
}

double series_weighted_integral(const ChebyshevSeries& series, double a, double b) {
    check_interval(a, b);
    const auto c = series.coefficients();
    double sum = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
        const int kk = static_cast<int>(k);
        sum += c[k] * normalization(kk) * (antiderivative(kk, b) - antiderivative(kk, a));
    }
    return sum;
}

double series_weighted_first_moment(const ChebyshevSeries& series, double a, double b) {
    check_interval(a, b);
    const auto c = series.coefficients();
    double sum = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
        const int kk = static_cast<int>(k);
        double m;
        if (kk == 0) {
            m = antiderivative(1, b) - antiderivative(1, a);
        } else {
            m = 0.5 * ((antiderivative(kk + 1, b) - antiderivative(kk + 1, a)) +
                       (antiderivative(kk - 1, b) - antiderivative(kk - 1, a)));
        }
        sum += c[k] * normalization(kk) * m;
    }
    return sum;
}

double chebyshev_weight(double x) {
    x = clamp_unit(x);
    const double s = 1.0 - x * x;
    if (s <= 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / std::sqrt(s);
}

}  // namespace kpm
