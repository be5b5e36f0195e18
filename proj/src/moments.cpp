#include "kpm/moments.hpp"

#include <cmath>
#include <json.hpp>
#include <limits>

#include "kpm/detail/parallel.hpp"
#include "kpm/error.hpp"
#include "kpm/jackson.hpp"
#include "kpm/random.hpp"

namespace kpm {

namespace {

constexpr std::uint64_t kProbeDomain = 0x5241444Dull;  // separates probe draws from oracle noise

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

void check_degree(int degree) {
    if (degree < 4 || degree % 4 != 0) {
        throw ConfigError("moment degree must be a positive multiple of 4, got " + std::to_string(degree));
    }
}

MomentVector estimate(const MatvecOracle& oracle, int degree, int ell, std::uint64_t seed, int workers,
                      Provenance provenance) {
    check_degree(degree);
    if (ell < 1) throw ConfigError("ell must be at least 1");
    const std::size_t n = oracle.dimension();
    const std::uint64_t before = oracle.calls();
    std::vector<std::vector<double>> per_probe(static_cast<std::size_t>(ell));
    detail::parallel_for(per_probe.size(), workers, [&](std::size_t i) {
        const auto g = rademacher_probe(n, seed, i);
        per_probe[i] = probe_quadratic_forms(oracle, g, degree, i);
    });
    // Ordered reduction keeps the result independent of the worker count.
    std::vector<double> tau(static_cast<std::size_t>(degree), 0.0);
    for (const auto& q : per_probe) {
        for (std::size_t k = 0; k < tau.size(); ++k) tau[k] += q[k];
    }
    const double scale = kSqrtTwoOverPi / (static_cast<double>(ell) * static_cast<double>(n));
    for (double& t : tau) t *= scale;
    MomentVector out(degree, std::move(tau), provenance, ell, seed);
    out.oracle_calls = oracle.calls() - before;
    return out;
}

}  // namespace

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::exact: return "exact";
        case Provenance::hutchinson: return "hutchinson";
        case Provenance::hutchinson_approx: return "hutchinson-approx";
    }
    return "unknown";
}

Provenance provenance_from_string(const std::string& name) {
    if (name == "exact") return Provenance::exact;
    if (name == "hutchinson") return Provenance::hutchinson;
    if (name == "hutchinson-approx") return Provenance::hutchinson_approx;
    throw InputError("unknown moment provenance '" + name + "'");
}

MomentVector::MomentVector(int degree, std::vector<double> values, Provenance provenance, int ell, std::uint64_t seed)
    : values_(std::move(values)), provenance_(provenance), ell_(ell), seed_(seed) {
    check_degree(degree);
    if (static_cast<int>(values_.size()) != degree) throw ConfigError("moment vector must hold tau_1..tau_N");
    for (double v : values_) {
        if (!std::isfinite(v)) throw InputError("moments must be finite");
    }
}

int repetitions_for(int degree, double delta, std::size_t dimension, double moment_tolerance, double constant_c) {
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    if (!(moment_tolerance > 0.0)) throw ConfigError("moment tolerance must be positive");
    if (dimension == 0) throw ConfigError("dimension must be positive");
    const double l = std::log(degree / delta);
    const double raw = constant_c * l * l / (static_cast<double>(dimension) * moment_tolerance * moment_tolerance);
    if (raw > static_cast<double>(std::numeric_limits<int>::max())) {
        throw ConfigError("repetition count overflows; pass ell explicitly");
    }
    return std::max(1, static_cast<int>(std::ceil(raw)));
}

EstimationConfig EstimationConfig::for_accuracy(double eps, double delta, std::size_t dimension, double constant_c) {
    EstimationConfig c;
    c.eps = eps;
    c.delta = delta;
    c.degree = degree_for_accuracy(eps);
    const double n = c.degree;
    c.moment_tolerance = 1.0 / (n * n);
    c.constant_c = constant_c;
    c.ell = repetitions_for(c.degree, delta, dimension, c.moment_tolerance, constant_c);
    c.eps_mv = c.moment_tolerance / (4.0 * n * n);
    return c;
}

void EstimationConfig::validate() const {
    check_degree(degree);
    if (ell < 1) throw ConfigError("ell must be at least 1");
    if (!(moment_tolerance > 0.0)) throw ConfigError("moment tolerance must be positive");
    if (!(eps_mv >= 0.0 && eps_mv < 1.0)) throw ConfigError("eps_mv must lie in [0, 1)");
}

std::vector<double> rademacher_probe(std::size_t n, std::uint64_t seed, std::uint64_t rep) {
    auto engine = keyed_engine({kProbeDomain, seed, rep});
    std::vector<double> g(n);
    std::uint64_t bits = 0;
    int left = 0;
    for (double& x : g) {
        if (left == 0) {
            bits = engine();
            left = 64;
        }
        x = (bits & 1u) ? 1.0 : -1.0;
        bits >>= 1;
        --left;
    }
    return g;
}

std::vector<double> probe_quadratic_forms(const MatvecOracle& oracle, std::span<const double> g, int degree,
                                          std::uint64_t stream) {
    const std::size_t n = oracle.dimension();
    if (g.size() != n) throw InputError("probe dimension mismatch");
    std::vector<double> out(static_cast<std::size_t>(degree));
    std::vector<double> prev(g.begin(), g.end());
    std::vector<double> cur(n);
    std::vector<double> w(n);
    oracle.apply(prev, cur, {stream, 0});
    out[0] = dot(g, cur);
    for (int k = 2; k <= degree; ++k) {
        oracle.apply(cur, w, {stream, static_cast<std::uint64_t>(k - 1)});
        for (std::size_t i = 0; i < n; ++i) prev[i] = 2.0 * w[i] - prev[i];
        std::swap(prev, cur);
        out[static_cast<std::size_t>(k - 1)] = dot(g, cur);
    }
    return out;
}

MomentVector exact_moments(const MatvecOracle& oracle, int degree, int workers) {
    check_degree(degree);
    if (oracle.error_bound() != 0.0) throw ConfigError("exact moments need an exact oracle");
    const std::size_t n = oracle.dimension();
    const std::uint64_t before = oracle.calls();
    std::vector<std::vector<double>> diag(n);
    detail::parallel_for(n, workers, [&](std::size_t i) {
        std::vector<double> e(n, 0.0);
        e[i] = 1.0;
        diag[i] = probe_quadratic_forms(oracle, e, degree, i);
    });
    std::vector<double> tau(static_cast<std::size_t>(degree), 0.0);
    for (const auto& d : diag) {
        for (std::size_t k = 0; k < tau.size(); ++k) tau[k] += d[k];
    }
    for (double& t : tau) t *= kSqrtTwoOverPi / static_cast<double>(n);
    MomentVector out(degree, std::move(tau), Provenance::exact);
    out.oracle_calls = oracle.calls() - before;
    return out;
}

MomentVector moments_from_spectrum(std::span<const double> eigenvalues, int degree) {
    check_degree(degree);
    if (eigenvalues.empty()) throw InputError("spectrum is empty");
    std::vector<double> tau(static_cast<std::size_t>(degree), 0.0);
    for (double lambda : eigenvalues) {
        const double x = clamp_unit(lambda);
        double prev = 1.0;
        double cur = x;
        tau[0] += cur;
        for (int k = 2; k <= degree; ++k) {
            const double next = 2.0 * x * cur - prev;
            prev = cur;
            cur = next;
            tau[static_cast<std::size_t>(k - 1)] += cur;
        }
    }
    for (double& t : tau) t *= kSqrtTwoOverPi / static_cast<double>(eigenvalues.size());
    return MomentVector(degree, std::move(tau), Provenance::exact);
}

MomentVector hutchinson_moments(const MatvecOracle& oracle, int degree, int ell, std::uint64_t seed, int workers) {
    if (oracle.error_bound() != 0.0) {
        throw ConfigError("hutchinson_moments needs an exact oracle; use approx_hutchinson_moments");
    }
    return estimate(oracle, degree, ell, seed, workers, Provenance::hutchinson);
}

MomentVector approx_hutchinson_moments(const MatvecOracle& oracle, int degree, int ell, std::uint64_t seed,
                                       int workers) {
    const double eps_mv = oracle.error_bound();
    const bool exact = eps_mv == 0.0;
    auto out = estimate(oracle, degree, ell, seed, workers, exact ? Provenance::hutchinson : Provenance::hutchinson_approx);
    const double threshold = 1.0 / (2.0 * degree * degree);
    if (eps_mv > threshold) {
        out.warnings.push_back("eps_mv = " + std::to_string(eps_mv) + " exceeds the recurrence stability threshold " +
                               std::to_string(threshold) + " = 1/(2N^2)");
    }
    return out;
}

RecurrenceTrace trace_recurrence(const MatvecOracle& oracle, const SymmetricMatrix& matrix, std::span<const double> g,
                                 int degree, std::uint64_t stream) {
    const std::size_t n = matrix.dimension();
    if (oracle.dimension() != n || g.size() != n) throw InputError("trace dimension mismatch");
    if (degree < 1) throw ConfigError("trace degree must be positive");
    const auto N = static_cast<std::size_t>(degree);
    RecurrenceTrace t;
    t.approx.assign(N + 1, std::vector<double>(n));
    t.exact.assign(N + 1, std::vector<double>(n));
    t.oracle_out.assign(N, std::vector<double>(n));
    t.step_error.assign(N + 1, std::vector<double>(n, 0.0));
    t.accumulated.assign(N + 1, std::vector<double>(n, 0.0));

    t.approx[0].assign(g.begin(), g.end());
    t.exact[0].assign(g.begin(), g.end());
    std::vector<double> av(n);
    for (std::size_t k = 0; k < N; ++k) {
        oracle.apply(t.approx[k], t.oracle_out[k], {stream, k});
        matrix.apply(t.approx[k], av);
        for (std::size_t i = 0; i < n; ++i) t.step_error[k + 1][i] = av[i] - t.oracle_out[k][i];

        matrix.apply(t.exact[k], av);
        for (std::size_t i = 0; i < n; ++i) {
            if (k == 0) {
                t.approx[1][i] = t.oracle_out[0][i];
                t.exact[1][i] = av[i];
            } else {
                t.approx[k + 1][i] = 2.0 * t.oracle_out[k][i] - t.approx[k - 1][i];
                t.exact[k + 1][i] = 2.0 * av[i] - t.exact[k - 1][i];
            }
        }
    }
    for (std::size_t k = 0; k <= N; ++k) {
        for (std::size_t i = 0; i < n; ++i) t.accumulated[k][i] = t.exact[k][i] - t.approx[k][i];
    }
    return t;
}

ErrorDecomposition recurrence_error_decomposition(const RecurrenceTrace& trace, const SymmetricMatrix& matrix) {
    const std::size_t n = matrix.dimension();
    if (trace.accumulated.empty()) throw InputError("empty recurrence trace");
    const std::size_t N = trace.accumulated.size() - 1;
    ErrorDecomposition out;
    out.measured = trace.accumulated;
    out.reconstructed.assign(N + 1, std::vector<double>(n, 0.0));

    // For each injected error xi_i, walk U_j(A) xi_i for j = 0..N-i and add it into delta_{i+j}.
    std::vector<double> u_prev(n), u_cur(n), u_next(n), tmp(n);
    for (std::size_t i = 1; i <= N; ++i) {
        const double weight = (i == 1) ? 1.0 : 2.0;
        const auto& xi = trace.step_error[i];
        std::fill(u_prev.begin(), u_prev.end(), 0.0);  // U_{-1}
        u_cur = xi;                                     // U_0
        for (std::size_t j = 0; i + j <= N; ++j) {
            auto& target = out.reconstructed[i + j];
            for (std::size_t r = 0; r < n; ++r) target[r] += weight * u_cur[r];
            matrix.apply(u_cur, tmp);
            for (std::size_t r = 0; r < n; ++r) u_next[r] = 2.0 * tmp[r] - u_prev[r];
            std::swap(u_prev, u_cur);
            std::swap(u_cur, u_next);
        }
    }
    for (std::size_t k = 0; k <= N; ++k) {
        std::vector<double> diff(n);
        for (std::size_t r = 0; r < n; ++r) diff[r] = out.measured[k][r] - out.reconstructed[k][r];
        const double scale = std::max(norm2(out.measured[k]), norm2(out.reconstructed[k]));
        const double mismatch = norm2(diff);
        if (scale > 0.0) out.max_relative_mismatch = std::max(out.max_relative_mismatch, mismatch / scale);
        else if (mismatch > 0.0) out.max_relative_mismatch = std::numeric_limits<double>::infinity();
    }
    return out;
}

std::string moments_to_json(const MomentVector& m) {
    nlohmann::json j;
    j["N"] = m.degree();
    j["ell"] = m.ell();
    j["seed"] = m.seed();
    j["provenance"] = to_string(m.provenance());
    j["values"] = std::vector<double>(m.values().begin(), m.values().end());
    return j.dump(2);
}

MomentVector moments_from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        return MomentVector(j.at("N").get<int>(), j.at("values").get<std::vector<double>>(),
                            provenance_from_string(j.at("provenance").get<std::string>()), j.value("ell", 0),
                            j.value("seed", std::uint64_t{0}));
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed moment JSON: ") + e.what());
    }
}

}  // namespace kpm
