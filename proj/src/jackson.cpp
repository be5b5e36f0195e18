#include "kpm/jackson.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <string>

#include "kpm/error.hpp"
#include "kpm/moments.hpp"

namespace kpm {

namespace {

std::vector<std::int64_t> convolve(const std::vector<std::int64_t>& f, const std::vector<std::int64_t>& g) {
    std::vector<std::int64_t> out(f.size() + g.size() - 1, 0);
    for (std::size_t i = 0; i < f.size(); ++i) {
        for (std::size_t j = 0; j < g.size(); ++j) out[i + j] += f[i] * g[j];
    }
    return out;
}

void check_degree(int degree) {
    if (degree < 4 || degree % 4 != 0) {
        throw ConfigError("Jackson degree must be a positive multiple of 4, got " + std::to_string(degree));
    }
    if (degree > kMaxJacksonDegree) {
        throw ConfigError("Jackson degree " + std::to_string(degree) + " exceeds " +
                          std::to_string(kMaxJacksonDegree));
    }
}

}  // namespace

JacksonCoefficients::JacksonCoefficients(int degree, std::vector<std::int64_t> values)
    : degree_(degree), values_(std::move(values)) {
    if (static_cast<int>(values_.size()) != degree_ + 1) {
        throw ConfigError("Jackson coefficient vector must have N+1 entries");
    }
}

std::vector<std::int64_t> jackson_full_convolution(int degree) {
    check_degree(degree);
    const int z = degree / 4;
    const std::vector<std::int64_t> g(static_cast<std::size_t>(2 * z + 1), 1);
    const auto gg = convolve(g, g);
    return convolve(gg, gg);
}

std::shared_ptr<const JacksonCoefficients> jackson_coefficients(int degree) {
    check_degree(degree);
    static std::mutex mutex;
    static std::map<int, std::shared_ptr<const JacksonCoefficients>> cache;
    {
        std::lock_guard lock(mutex);
        if (auto it = cache.find(degree); it != cache.end()) return it->second;
    }
    const auto full = jackson_full_convolution(degree);
    std::vector<std::int64_t> half(full.begin() + degree, full.end());
    auto coeffs = std::make_shared<const JacksonCoefficients>(degree, std::move(half));
    std::lock_guard lock(mutex);
    return cache.emplace(degree, std::move(coeffs)).first->second;
}

int degree_for_accuracy(double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("accuracy eps must lie in (0, 1)");
    // 18/eps is nudged down so that e.g. eps = 0.1 maps to exactly 180.
    const double target = 18.0 / eps * (1.0 - 1e-12);
    const int n = 4 * static_cast<int>(std::ceil(target / 4.0));
    return std::max(n, 4);
}

ChebyshevSeries damp_series(const ChebyshevSeries& series, const JacksonCoefficients& coeffs) {
    if (series.degree() != coeffs.degree()) {
        throw ConfigError("series degree " + std::to_string(series.degree()) +
                          " does not match Jackson degree " + std::to_string(coeffs.degree()));
    }
    std::vector<double> out(series.coefficients().begin(), series.coefficients().end());
    for (int k = 1; k <= coeffs.degree(); ++k) out[static_cast<std::size_t>(k)] *= coeffs.ratio(k);
    return ChebyshevSeries(std::move(out));
}

ChebyshevSeries damp_moments(const MomentVector& moments, const JacksonCoefficients& coeffs) {
    if (moments.degree() != coeffs.degree()) {
        throw ConfigError("moment degree " + std::to_string(moments.degree()) +
                          " does not match Jackson degree " + std::to_string(coeffs.degree()));
    }
    std::vector<double> out(static_cast<std::size_t>(coeffs.degree()) + 1);
    out[0] = kInvSqrtPi;
    for (int k = 1; k <= coeffs.degree(); ++k) out[static_cast<std::size_t>(k)] = coeffs.ratio(k) * moments.at(k);
    return ChebyshevSeries(std::move(out));
}

}  // namespace kpm
