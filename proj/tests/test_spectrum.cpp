#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <algorithm>
#include <random>

#include "kpm/error.hpp"
#include "kpm/spectrum.hpp"

using namespace kpm;

namespace {

/// Uniform density on [-1, 1].
class Uniform final : public IntegrableDensity {
public:
    double cdf(double x) const override { return 0.5 * (x + 1.0); }
    double first_moment(double a, double b) const override { return 0.25 * (b * b - a * a); }
};

DensityEstimate ideal_from(const std::vector<double>& eig, int n) {
    return idealized_kpm(moments_from_spectrum(eig, n), *jackson_coefficients(n));
}

// Riemann reference for the integral of |F_q - F_s| on a fine grid.
double brute_w1(const IntegrableDensity& q, const DiscreteSpectrum& s, int steps) {
    auto v = s.values();
    double h = 2.0 / steps;
    double total = 0.0;
    std::size_t below = 0;
    for (int i = 0; i < steps; ++i) {
        double x = -1.0 + (i + 0.5) * h;
        while (below < v.size() && v[below] <= x) ++below;
        total += std::abs(q.cdf(x) - static_cast<double>(below) / v.size()) * h;
    }
    return total;
}

}  // namespace

TEST_CASE("spectrum validation and ordering") {
    DiscreteSpectrum s({0.5, -1.0 - 1e-10, 1.0});
    CHECK(s.values()[0] == -1.0);
    CHECK(s.values()[1] == 0.5);
    CHECK_THROWS_AS(DiscreteSpectrum({1.5}), DomainError);
    CHECK(DiscreteSpectrum({1.5, 0.0}, true).values()[1] == 1.5);
    CHECK_THROWS_AS(DiscreteSpectrum({std::nan("")}), InputError);
}

TEST_CASE("greedy discretization examples") {
    Uniform u;
    auto r = discretize_greedy(u, 2, 0.5);
    CHECK(std::vector<double>(r.spectrum.values().begin(), r.spectrum.values().end()) == std::vector<double>{0.0, 1.0});
    auto one = discretize_greedy(u, 1, 0.25);
    CHECK(one.spectrum.values()[0] == 1.0);
    auto q = ideal_from({0.0}, 180);
    auto d = discretize_greedy(q, 100, 0.1);
    CHECK(d.spectrum.size() == 100);
    // Mass that has not reached a full 1/n by the last interior grid point lands on 1.
    CHECK(w1_discrete(d.spectrum, DiscreteSpectrum(std::vector<double>(100, 0.0))) <= 0.3);
    CHECK(std::count_if(d.spectrum.values().begin(), d.spectrum.values().end(),
                        [](double v) { return std::abs(v) > 0.3; }) <= 1);
}

TEST_CASE("greedy handles a shortened last cell") {
    Uniform u;
    auto r = discretize_greedy(u, 3, 0.3);
    CHECK(r.spectrum.size() == 3);
    CHECK(r.spectrum.values().back() <= 1.0);
    CHECK_THROWS_AS(discretize_greedy(u, 3, 0.0), ConfigError);
    CHECK_THROWS_AS(discretize_greedy(u, 0, 0.1), ConfigError);
}

TEST_CASE("optimal discretization examples") {
    Uniform u;
    auto two = discretize_optimal(u, 2);
    CHECK(two.values()[0] == doctest::Approx(-0.5));
    CHECK(two.values()[1] == doctest::Approx(0.5));
    auto four = discretize_optimal(u, 4);
    double expected[] = {-0.75, -0.25, 0.25, 0.75};
    for (int i = 0; i < 4; ++i) CHECK(four.values()[i] == doctest::Approx(expected[i]).epsilon(1e-9));
    auto q = ideal_from({-0.4, 0.1, 0.9}, 20);
    CHECK(discretize_optimal(q, 1).values()[0] == doctest::Approx(q.first_moment(-1, 1)).epsilon(1e-12));
}

TEST_CASE("discrete W1") {
    DiscreteSpectrum a({0.0, 1.0});
    DiscreteSpectrum b({0.5, 1.0});
    CHECK(w1_discrete(a, a) == 0.0);
    CHECK(w1_discrete(a, b) == doctest::Approx(0.25));
    CHECK(w1_discrete(DiscreteSpectrum({-1.0, 1.0}), DiscreteSpectrum({1.0, -1.0})) == 0.0);
    CHECK_THROWS_AS(w1_discrete(a, DiscreteSpectrum({0.0})), InputError);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> x(7), y(7), z(7);
        for (int i = 0; i < 7; ++i) {
            x[i] = u(rng);
            y[i] = u(rng);
            z[i] = u(rng);
        }
        DiscreteSpectrum sx(x), sy(y), sz(z);
        REQUIRE(w1_discrete(sx, sy) == w1_discrete(sy, sx));
        REQUIRE(w1_discrete(sx, sz) <= w1_discrete(sx, sy) + w1_discrete(sy, sz) + 1e-12);
    }
}

TEST_CASE("density versus spectrum W1") {
    Uniform u;
    CHECK(w1_density_vs_spectrum(u, DiscreteSpectrum({0.0})) == doctest::Approx(0.5).epsilon(1e-12));
    auto q = ideal_from({-0.3, 0.2, 0.25, 0.8}, 32);
    DiscreteSpectrum s({-0.3, 0.2, 0.25, 0.8});
    CHECK(w1_density_vs_spectrum(q, s) == doctest::Approx(brute_w1(q, s, 400000)).epsilon(1e-5));
    double exact = w1_density_vs_spectrum(q, s);
    std::vector<double> resampled;
    for (double v : s.values()) resampled.insert(resampled.end(), 2000, v);
    CHECK(std::abs(w1_discrete(discretize_optimal(q, 8000), DiscreteSpectrum(resampled)) - exact) < 1e-3);
    CHECK_THROWS_AS(w1_density_vs_spectrum(u, DiscreteSpectrum({1.5}, true)), DomainError);
}

TEST_CASE("delta spectrum converges at the Jackson rate") {
    for (int n : {16, 64, 256}) {
        auto q = ideal_from({0.0}, n);
        CHECK(w1_density_vs_spectrum(q, DiscreteSpectrum(std::vector<double>(5, 0.0))) <= 18.0 / n);
    }
}

TEST_CASE("optimal never scores worse than greedy against its source") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> eig(5);
        for (double& e : eig) e = u(rng);
        auto q = ideal_from(eig, 24);
        auto opt = discretize_optimal(q, 50);
        auto greedy = discretize_greedy(q, 50, 0.05).spectrum;
        REQUIRE(w1_density_vs_spectrum(q, opt) <= w1_density_vs_spectrum(q, greedy) + 1e-12);
    }
}

TEST_CASE("optimal discretization of a density against itself") {
    auto q = ideal_from({-0.6, 0.0, 0.3}, 40);
    CHECK(w1_density_vs_spectrum(q, discretize_optimal(q, 10000)) <= 2e-4);
}

TEST_CASE("Jacobi eigenvalues") {
    std::vector<double> d{0.5, -0.25};
    auto e = dense_eigenvalues(SymmetricMatrix::diagonal(d));
    CHECK(e == std::vector<double>{-0.25, 0.5});
    std::vector<double> swap{0, 1, 1, 0};
    auto s = dense_eigenvalues(SymmetricMatrix::dense(2, swap));
    CHECK(s[0] == doctest::Approx(-1.0));
    CHECK(s[1] == doctest::Approx(1.0));

    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd;
    const std::size_t n = 60;
    Eigen::MatrixXd a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) a(i, j) = a(j, i) = nd(rng);
    std::vector<double> flat(a.data(), a.data() + n * n);
    auto m = SymmetricMatrix::dense(n, flat);
    auto ours = dense_eigenvalues(m);
    Eigen::VectorXd ref = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues();
    double sum = 0.0;
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(ours[i] == doctest::Approx(ref(static_cast<Eigen::Index>(i))).epsilon(1e-9).scale(1.0));
        sum += ours[i];
        sq += ours[i] * ours[i];
    }
    CHECK(std::abs(sum - m.trace()) <= 1e-8);
    CHECK(std::abs(sq - m.frobenius_norm() * m.frobenius_norm()) <= 1e-8 * std::max(1.0, sq));
    CHECK_THROWS_AS(dense_eigenvalues(SymmetricMatrix::identity(kMaxDenseEigenDimension + 1)), ConfigError);
}

TEST_CASE("histogram") {
    auto h = histogram(DiscreteSpectrum({-1.0, -0.95, 0.0, 1.0}), 11);
    CHECK(h.size() == 11);
    CHECK(h[0] == 0.5);
    CHECK(h[5] == 0.25);
    CHECK(h[10] == 0.25);
}

TEST_CASE("spectrum files") {
    auto dir = std::filesystem::temp_directory_path();
    DiscreteSpectrum s({-0.5, 0.125, 0.75});
    write_spectrum_text(s, dir / "kpm_spec.txt");
    CHECK(read_spectrum(dir / "kpm_spec.txt") == s);
    CHECK(parse_spectrum(spectrum_to_json(s)) == s);
    CHECK(parse_spectrum("0 1 2").values().back() == 2.0);
    CHECK(parse_spectrum("1.0000000001\n-0.5").values().back() == 1.0);
    CHECK_THROWS_AS(parse_spectrum("0.1 abc"), InputError);
    CHECK_THROWS_AS(parse_spectrum(""), InputError);
    CHECK_THROWS_AS(parse_spectrum("{\"n\": 3, \"values\": [0.1]}"), InputError);
    CHECK_THROWS_AS(read_spectrum(dir / "kpm_missing_spectrum.txt"), InputError);
    std::filesystem::remove(dir / "kpm_spec.txt");
}
