#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "kpm/error.hpp"
#include "kpm/oracle.hpp"

using namespace kpm;

namespace {

double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    std::vector<double> v(n);
    for (double& x : v) x = nd(rng);
    return v;
}

SymmetricMatrix random_sparse(std::size_t n, double density, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<SymmetricMatrix::Entry> entries;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            if (u(rng) < density) entries.push_back({i, j, 2.0 * u(rng) - 1.0});
    return SymmetricMatrix::sparse(n, entries);
}

std::filesystem::path temp_file(const std::string& name, const std::string& text) {
    auto p = std::filesystem::temp_directory_path() / name;
    std::ofstream(p) << text;
    return p;
}

}  // namespace

TEST_CASE("exact products") {
    auto id = SymmetricMatrix::identity(4);
    std::vector<double> y{1, 2, 3, 4};
    CHECK(exact_apply(id, y) == y);

    std::vector<double> swap{0, 1, 1, 0};
    auto p = SymmetricMatrix::dense(2, swap);
    CHECK(exact_apply(p, std::vector<double>{1, 0}) == std::vector<double>{0, 1});
    CHECK_THROWS_AS(exact_apply(p, std::vector<double>{1, 0, 0}), InputError);
}

TEST_CASE("sparse and dense storage agree") {
    std::mt19937_64 rng(5);
    auto s = random_sparse(50, 0.1, rng);
    auto d = SymmetricMatrix::dense(50, s.to_dense());
    CHECK(d.storage() == SymmetricMatrix::Storage::dense);
    for (int trial = 0; trial < 5; ++trial) {
        auto y = random_vector(50, rng);
        auto a = exact_apply(s, y);
        auto b = exact_apply(d, y);
        double diff = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
        CHECK(diff <= 1e-12 * std::max(1.0, norm(a)));
    }
    CHECK(d.to_sparse().nonzeros() == s.nonzeros());
    CHECK(s.trace() == doctest::Approx(d.trace()));
    CHECK(s.frobenius_norm() == doctest::Approx(d.frobenius_norm()));
}

TEST_CASE("dense constructor rejects asymmetry") {
    std::vector<double> a{1, 2, 3, 4};
    CHECK_THROWS_AS(SymmetricMatrix::dense(2, a), InputError);
}

TEST_CASE("mirrored sparse entries must agree") {
    std::vector<SymmetricMatrix::Entry> ok{{0, 1, 0.5}, {1, 0, 0.5}};
    CHECK(SymmetricMatrix::sparse(2, ok, true).at(0, 1) == 0.5);
    std::vector<SymmetricMatrix::Entry> bad{{0, 1, 0.5}, {1, 0, 0.4}};
    CHECK_THROWS_AS(SymmetricMatrix::sparse(2, bad, true), InputError);
}

TEST_CASE("noisy products have the requested error norm") {
    std::mt19937_64 rng(9);
    auto m = random_sparse(30, 0.2, rng);
    for (auto mode : {NoiseMode::random_direction, NoiseMode::adversarial_sign}) {
        for (double eps : {0.0, 1e-4, 1e-2, 0.5}) {
            auto y = random_vector(30, rng);
            auto exact = exact_apply(m, y);
            auto noisy = noisy_apply(m, y, eps, mode, 42, {3, 7});
            std::vector<double> e(30);
            for (std::size_t i = 0; i < e.size(); ++i) e[i] = noisy[i] - exact[i];
            CHECK(std::abs(norm(e) / norm(y) - eps) <= 1e-12);
            CHECK(noisy == noisy_apply(m, y, eps, mode, 42, {3, 7}));
        }
    }
    CHECK(noisy_apply(m, random_vector(30, rng), 0.1, NoiseMode::random_direction, 1, {0, 0}) !=
          noisy_apply(m, random_vector(30, rng), 0.1, NoiseMode::random_direction, 1, {0, 1}));
    CHECK_THROWS_AS(noisy_apply(m, random_vector(30, rng), 1.0, NoiseMode::random_direction, 1), ConfigError);
    CHECK_THROWS_AS(noisy_apply(m, random_vector(30, rng), -0.1, NoiseMode::random_direction, 1), ConfigError);
}

TEST_CASE("adversarial noise follows the sign of y") {
    auto m = SymmetricMatrix::identity(4);
    std::vector<double> y{2.0, -1.0, 0.5, -3.0};
    auto z = noisy_apply(m, y, 0.1, NoiseMode::adversarial_sign, 0);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK((z[i] - y[i]) * y[i] > 0.0);
}

TEST_CASE("oracles count calls") {
    auto m = std::make_shared<const SymmetricMatrix>(SymmetricMatrix::identity(3));
    ExactOracle exact(m);
    NoisyOracle noisy(m, 0.01, NoiseMode::random_direction, 3);
    std::vector<double> y{1, 1, 1};
    std::vector<double> z(3);
    exact.apply(y, z);
    exact.apply(y, z);
    noisy.apply(y, z);
    CHECK(exact.calls() == 2);
    CHECK(noisy.calls() == 1);
    CHECK(exact.error_bound() == 0.0);
    CHECK(noisy.error_bound() == 0.01);
    exact.reset_calls();
    CHECK(exact.calls() == 0);
}

TEST_CASE("spectral norm estimate") {
    CHECK(estimate_spectral_norm(SymmetricMatrix::identity(6), 50, 1) == doctest::Approx(1.0).epsilon(1e-6));
    std::vector<double> d{3.0, 1.0, 0.5};
    CHECK(estimate_spectral_norm(SymmetricMatrix::diagonal(d), 100, 1) == doctest::Approx(3.0).epsilon(1e-6));
    std::vector<double> z{0.0, 0.0};
    CHECK(estimate_spectral_norm(SymmetricMatrix::diagonal(z), 10, 1) == 0.0);
    CHECK(norm_scale_factor(0.0) == 1.0);
    CHECK(norm_scale_factor(2.0) == doctest::Approx(1.0 / 2.1));
    CHECK_THROWS_AS(estimate_spectral_norm(SymmetricMatrix::identity(2), 0, 1), ConfigError);
}

TEST_CASE("matrix market round trip") {
    std::mt19937_64 rng(13);
    auto m = random_sparse(12, 0.3, rng);
    auto p = std::filesystem::temp_directory_path() / "kpm_roundtrip.mtx";
    write_matrix_market(m, p);
    auto back = read_matrix(p);
    CHECK(back.dimension() == 12);
    for (std::size_t i = 0; i < 12; ++i)
        for (std::size_t j = 0; j < 12; ++j) REQUIRE(back.at(i, j) == m.at(i, j));
    std::filesystem::remove(p);
}

TEST_CASE("matrix market variants") {
    auto pattern = parse_matrix_market("%%MatrixMarket matrix coordinate pattern symmetric\n% c\n3 3 2\n2 1\n3 2\n");
    CHECK(pattern.at(0, 1) == 1.0);
    CHECK(pattern.at(2, 1) == 1.0);
    auto general = parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 2 0.5\n2 1 0.5\n2 2 -1\n");
    CHECK(general.at(0, 1) == 0.5);
    CHECK(general.at(1, 1) == -1.0);
    CHECK_THROWS_AS(parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2 0.5\n"), InputError);
    CHECK_THROWS_AS(parse_matrix_market("%%MatrixMarket matrix coordinate real symmetric\n2 3 1\n1 1 1\n"), InputError);
    CHECK_THROWS_AS(parse_matrix_market("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1\n"), InputError);
}

TEST_CASE("dense text") {
    auto m = parse_dense_text("0.5 0.1\n0.1 -0.2\n");
    CHECK(m.at(1, 0) == 0.1);
    CHECK_THROWS_AS(parse_dense_text("1 2 3\n4 5 6\n"), InputError);
    CHECK_THROWS_AS(parse_dense_text("1 x\n2 3\n"), InputError);
    auto p = temp_file("kpm_dense.txt", "1 0\n0 1\n");
    CHECK(read_matrix(p).trace() == 2.0);
    std::filesystem::remove(p);
    CHECK_THROWS_AS(read_matrix("/nonexistent/kpm.mtx"), InputError);
}

TEST_CASE("noise mode names") {
    CHECK(noise_mode_from_string("random-direction") == NoiseMode::random_direction);
    CHECK(to_string(NoiseMode::adversarial_sign) == "adversarial-sign");
    CHECK_THROWS_AS(noise_mode_from_string("gaussian"), ConfigError);
}
