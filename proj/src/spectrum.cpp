#include "kpm/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "kpm/error.hpp"

namespace kpm {

namespace {

constexpr double kSpectrumSlack = 1e-9;

// Integral of (F_q(x) - level) over [u, v].
double integral_of_gap(const IntegrableDensity& q, double u, double v, double fu, double fv, double level) {
    const double cdf_integral = v * fv - u * fu - q.first_moment(u, v);
    return cdf_integral - level * (v - u);
}

bool within_unit_range(const std::vector<double>& values) {
    return std::all_of(values.begin(), values.end(),
                       [](double v) { return v >= -1.0 - kSpectrumSlack && v <= 1.0 + kSpectrumSlack; });
}

}  // namespace

DiscreteSpectrum::DiscreteSpectrum(std::vector<double> values, bool allow_any_range) : values_(std::move(values)) {
    for (double& v : values_) {
        if (!std::isfinite(v)) throw InputError("eigenvalues must be finite");
        if (allow_any_range) continue;
        if (v < -1.0 - kSpectrumSlack || v > 1.0 + kSpectrumSlack) {
            throw DomainError("eigenvalue " + std::to_string(v) + " outside [-1, 1]");
        }
        v = std::clamp(v, -1.0, 1.0);
    }
    std::sort(values_.begin(), values_.end());
}

GreedyDiscretization discretize_greedy(const IntegrableDensity& q, std::size_t n, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("grid spacing eps must lie in (0, 1)");
    if (n == 0) throw ConfigError("discretization needs n >= 1");
    const auto cells = static_cast<std::size_t>(std::ceil(2.0 / eps - 1e-9));
    GreedyDiscretization out;
    std::vector<double> values;
    values.reserve(n);
    std::size_t emitted = 0;
    for (std::size_t j = 1; j <= cells; ++j) {
        const bool last = j == cells;
        const double t = last ? 1.0 : -1.0 + static_cast<double>(j) * eps;
        // floor(n * F(t)) equals the running count after the floor-and-carry chain.
        const double scaled = static_cast<double>(n) * q.cdf(t);
        auto through = static_cast<std::size_t>(std::max(0.0, std::floor(scaled + 1e-9)));
        through = std::clamp(through, emitted, n);
        if (last && through != n) {
            out.diagnostics.push_back("final cell absorbed " + std::to_string(n - through) +
                                      " eigenvalue(s); cumulative mass was " + std::to_string(scaled / n));
            through = n;
        }
        values.insert(values.end(), through - emitted, t);
        emitted = through;
    }
    out.spectrum = DiscreteSpectrum(std::move(values));
    return out;
}

DiscreteSpectrum discretize_optimal(const IntegrableDensity& q, std::size_t n) {
    if (n == 0) throw ConfigError("discretization needs n >= 1");
    std::vector<double> values;
    values.reserve(n);
    double t = -1.0;
    double f_t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double t_next = 1.0;
        double f_next = q.cdf(1.0);
        const double target = static_cast<double>(i + 1) / static_cast<double>(n);
        if (i + 1 < n && f_next > target) {
            double lo = t;
            double hi = 1.0;
            bool converged = false;
            for (int step = 0; step < 200; ++step) {
                const double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) {
                    converged = true;  // bracket is down to adjacent doubles
                    break;
                }
                const double f_mid = q.cdf(mid);
                if (f_mid < target) {
                    lo = mid;
                } else {
                    hi = mid;
                    f_next = f_mid;
                    if (f_mid - target <= 1e-10) {
                        converged = true;
                        break;
                    }
                }
            }
            if (!converged) {
                throw ConvergenceError("quantile bisection for slab " + std::to_string(i) + " did not reach 1e-10 (bracket [" +
                                       std::to_string(lo) + ", " + std::to_string(hi) + "])");
            }
            t_next = hi;
        }
        const double mass = f_next - f_t;
        double point = 0.5 * (t + t_next);
        if (mass > 0.0 && t_next > t) point = std::clamp(q.first_moment(t, t_next) / mass, t, t_next);
        values.push_back(point);
        t = t_next;
        f_t = f_next;
    }
    return DiscreteSpectrum(std::move(values));
}

double w1_discrete(const DiscreteSpectrum& a, const DiscreteSpectrum& b) {
    if (a.size() != b.size()) throw InputError("W1 between spectra of different sizes");
    if (a.size() == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a.values()[i] - b.values()[i]);
    return sum / static_cast<double>(a.size());
}

double w1_density_vs_spectrum(const IntegrableDensity& q, const DiscreteSpectrum& spectrum, int resolution) {
    if (resolution < 1) throw ConfigError("resolution must be positive");
    if (spectrum.size() == 0) throw InputError("empty spectrum");
    if (spectrum.values().front() < -1.0 || spectrum.values().back() > 1.0)
        throw DomainError("spectrum must lie in [-1, 1] to be compared with a density");
    std::vector<double> cuts;
    cuts.reserve(static_cast<std::size_t>(resolution) + spectrum.size() + 1);
    for (int j = 0; j <= resolution; ++j) cuts.push_back(-1.0 + 2.0 * j / resolution);
    cuts.back() = 1.0;
    for (double v : spectrum.values()) cuts.push_back(v);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    const auto values = spectrum.values();
    const double n = static_cast<double>(spectrum.size());
    std::size_t below = 0;
    double total = 0.0;
    double fu = q.cdf(cuts[0]);
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
        const double u = cuts[p];
        const double v = cuts[p + 1];
        while (below < values.size() && values[below] <= u) ++below;
        const double level = static_cast<double>(below) / n;
        const double fv = q.cdf(v);
        const double gu = fu - level;
        const double gv = fv - level;
        if ((gu < 0.0 && gv > 0.0) || (gu > 0.0 && gv < 0.0)) {
            double lo = u, hi = v;
            for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double gm = q.cdf(mid) - level;
                if ((gm < 0.0) == (gu < 0.0)) lo = mid;
                else hi = mid;
            }
            const double r = 0.5 * (lo + hi);
            const double fr = q.cdf(r);
            total += std::abs(integral_of_gap(q, u, r, fu, fr, level));
            total += std::abs(integral_of_gap(q, r, v, fr, fv, level));
        } else {
            total += std::abs(integral_of_gap(q, u, v, fu, fv, level));
        }
        fu = fv;
    }
    return total;
}

std::vector<double> dense_eigenvalues(const SymmetricMatrix& m) {
    const std::size_t n = m.dimension();
    if (n > kMaxDenseEigenDimension) {
        throw ConfigError("dense eigensolver limited to n <= " + std::to_string(kMaxDenseEigenDimension));
    }
    if (n == 0) return {};
    std::vector<double> a = m.to_dense();
    auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
    const double frob = m.frobenius_norm();
    const double target = 1e-10 * frob;
    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * at(i, j) * at(i, j);
        }
        return std::sqrt(s);
    };
    constexpr int kMaxSweeps = 100;
    int sweep = 0;
    for (; sweep < kMaxSweeps && off_norm() > target; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = at(p, q);
                if (apq == 0.0) continue;
                const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = at(k, p);
                    const double akq = at(k, q);
                    at(k, p) = at(p, k) = c * akp - s * akq;
                    at(k, q) = at(q, k) = s * akp + c * akq;
                }
                at(p, p) -= t * apq;
                at(q, q) += t * apq;
                at(p, q) = at(q, p) = 0.0;
            }
        }
    }
    if (off_norm() > target) throw ConvergenceError("Jacobi eigensolver did not converge");
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = at(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

std::vector<double> histogram(const DiscreteSpectrum& s, int bins) {
    if (bins < 1) throw ConfigError("histogram needs at least one bin");
    std::vector<double> h(static_cast<std::size_t>(bins), 0.0);
    if (s.size() == 0) return h;
    const double w = 1.0 / static_cast<double>(s.size());
    for (double v : s.values()) {
        auto b = static_cast<int>(std::floor((v + 1.0) / 2.0 * bins));
        b = std::clamp(b, 0, bins - 1);
        h[static_cast<std::size_t>(b)] += w;
    }
    return h;
}

DiscreteSpectrum parse_spectrum(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        try {
            const auto j = nlohmann::json::parse(text);
            auto values = j.at("values").get<std::vector<double>>();
            if (j.contains("n") && j["n"].get<std::size_t>() != values.size()) {
                throw InputError("spectrum JSON 'n' does not match its values");
            }
            if (within_unit_range(values)) return DiscreteSpectrum(std::move(values));
            return DiscreteSpectrum(std::move(values), true);
        } catch (const nlohmann::json::exception& e) {
            throw InputError(std::string("malformed spectrum JSON: ") + e.what());
        }
    }
    std::istringstream in(text);
    std::vector<double> values;
    std::string tok;
    while (in >> tok) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw InputError("bad eigenvalue '" + tok + "'");
        } catch (const std::logic_error&) {
            throw InputError("bad eigenvalue '" + tok + "'");
        }
    }
    if (values.empty()) throw InputError("spectrum file holds no values");
    return within_unit_range(values) ? DiscreteSpectrum(std::move(values)) : DiscreteSpectrum(std::move(values), true);
}

DiscreteSpectrum read_spectrum(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_spectrum(ss.str());
}

void write_spectrum_text(const DiscreteSpectrum& s, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out.precision(17);
    for (double v : s.values()) out << v << '\n';
}

std::string spectrum_to_json(const DiscreteSpectrum& s) {
    nlohmann::json j;
    j["n"] = s.size();
    j["values"] = std::vector<double>(s.values().begin(), s.values().end());
    return j.dump(2);
}

}  // namespace kpm
