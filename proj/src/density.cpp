#include "kpm/density.hpp"

#include <cmath>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "kpm/error.hpp"

namespace kpm {

namespace {

constexpr const char* kFormTag = "w-times-normalized-chebyshev";

void check_degrees(const MomentVector& moments, const JacksonCoefficients& coeffs) {
    if (moments.degree() != coeffs.degree()) {
        throw ConfigError("moment degree " + std::to_string(moments.degree()) + " does not match Jackson degree " +
                          std::to_string(coeffs.degree()));
    }
}

DensityForm form_from_string(const std::string& s) {
    if (s == "idealized") return DensityForm::idealized;
    if (s == "shifted-rescaled") return DensityForm::shifted_rescaled;
    throw InputError("unknown density form '" + s + "'");
}

}  // namespace

std::string to_string(DensityForm form) {
    return form == DensityForm::idealized ? "idealized" : "shifted-rescaled";
}

DensityEstimate::DensityEstimate(ChebyshevSeries series, DensityMetadata metadata)
    : series_(std::move(series)), metadata_(metadata) {}

double DensityEstimate::evaluate(double x) const {
    const double p = polynomial(x);
    const double x2 = clamp_unit(x);
    const double s = 1.0 - x2 * x2;
    if (s <= 0.0) return p == 0.0 ? 0.0 : std::copysign(HUGE_VAL, p);
    return p / std::sqrt(s);
}

double DensityEstimate::cdf(double x) const {
    x = clamp_unit(x);
    if (x <= -1.0) return 0.0;
    return series_weighted_integral(series_, -1.0, x);
}

double DensityEstimate::first_moment(double a, double b) const {
    if (a == b) return 0.0;
    return series_weighted_first_moment(series_, a, b);
}

DensityEstimate idealized_kpm(const MomentVector& moments, const JacksonCoefficients& coeffs) {
    check_degrees(moments, coeffs);
    if (moments.provenance() != Provenance::exact) {
        throw ConfigError("idealized KPM needs exact moments; use full_kpm for estimates");
    }
    DensityMetadata meta;
    meta.form = DensityForm::idealized;
    meta.moment_provenance = moments.provenance();
    meta.ell = moments.ell();
    meta.seed = moments.seed();
    return DensityEstimate(damp_moments(moments, coeffs), meta);
}

DensityEstimate full_kpm(const MomentVector& moments, const JacksonCoefficients& coeffs) {
    check_degrees(moments, coeffs);
    const double n = coeffs.degree();
    auto series = damp_moments(moments, coeffs);
    std::vector<double> a(series.coefficients().begin(), series.coefficients().end());
    a[0] += std::numbers::sqrt2 / n;
    const double rescale = 1.0 + std::sqrt(2.0 * std::numbers::pi) / n;
    for (double& c : a) c /= rescale;
    DensityMetadata meta;
    meta.form = DensityForm::shifted_rescaled;
    meta.moment_provenance = moments.provenance();
    meta.ell = moments.ell();
    meta.seed = moments.seed();
    return DensityEstimate(ChebyshevSeries(std::move(a)), meta);
}

double density_integrate(const DensityEstimate& q, double a, double b) {
    return series_weighted_integral(q.series(), a, b);
}

double min_polynomial_on_grid(const DensityEstimate& q, int points) {
    double lo = HUGE_VAL;
    for (int i = 0; i < points; ++i) {
        const double x = -1.0 + 2.0 * (i + 0.5) / points;
        lo = std::min(lo, q.polynomial(x));
    }
    return lo;
}

std::vector<double> plot_grid(int points, double margin) {
    if (points < 2) throw ConfigError("plot grid needs at least 2 points");
    if (!(margin >= 0.0 && margin < 1.0)) throw ConfigError("plot margin must lie in [0, 1)");
    std::vector<double> x(static_cast<std::size_t>(points));
    for (int j = 0; j < points; ++j) {
        x[static_cast<std::size_t>(j)] = -(1.0 - margin) * std::cos(std::numbers::pi * j / (points - 1));
    }
    return x;
}

std::string density_plot_csv(const DensityEstimate& q, int points, double margin) {
    std::ostringstream out;
    out.precision(12);
    out << "x,q\n";
    for (double x : plot_grid(points, margin)) out << x << ',' << q.evaluate(x) << '\n';
    return out.str();
}

std::string density_to_json(const DensityEstimate& q) {
    nlohmann::json j;
    j["N"] = q.degree();
    j["coefficients"] = std::vector<double>(q.series().coefficients().begin(), q.series().coefficients().end());
    j["form"] = kFormTag;
    const auto& m = q.metadata();
    j["metadata"] = {{"kind", to_string(m.form)},
                     {"moment_provenance", to_string(m.moment_provenance)},
                     {"ell", m.ell},
                     {"seed", m.seed},
                     {"reflected", m.reflected},
                     {"offset", m.offset}};
    return j.dump(2);
}

DensityEstimate density_from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.at("form").get<std::string>() != kFormTag) throw InputError("unsupported density form");
        auto coeffs = j.at("coefficients").get<std::vector<double>>();
        if (static_cast<int>(coeffs.size()) != j.at("N").get<int>() + 1) {
            throw InputError("density coefficient count does not match N");
        }
        DensityMetadata m;
        if (j.contains("metadata")) {
            const auto& md = j["metadata"];
            m.form = form_from_string(md.value("kind", std::string("idealized")));
            m.moment_provenance = provenance_from_string(md.value("moment_provenance", std::string("exact")));
            m.ell = md.value("ell", 0);
            m.seed = md.value("seed", std::uint64_t{0});
            m.reflected = md.value("reflected", false);
            m.offset = md.value("offset", 0.0);
        }
        return DensityEstimate(ChebyshevSeries(std::move(coeffs)), m);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed density JSON: ") + e.what());
    } catch (const ConfigError& e) {
        throw InputError(std::string("malformed density JSON: ") + e.what());
    }
}

}  // namespace kpm
