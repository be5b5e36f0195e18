#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "kpm/kpm_api.h"

namespace {

std::string take(char* s) {
    std::string out = s ? s : "";
    kpm_string_free(s);
    return out;
}

}  // namespace

TEST_CASE("status codes and last error") {
    kpm_matrix* m = nullptr;
    CHECK(kpm_matrix_read("/nonexistent/matrix.mtx", &m) == KPM_ERR_INPUT);
    CHECK(m == nullptr);
    CHECK(std::strstr(kpm_last_error(), "nonexistent") != nullptr);

    double asym[] = {0.0, 1.0, 0.5, 0.0};
    CHECK(kpm_matrix_from_dense(2, asym, &m) == KPM_ERR_INPUT);
    CHECK(kpm_matrix_from_dense(2, asym, nullptr) == KPM_ERR_CONFIG);

    int degree = 0;
    CHECK(kpm_degree_for_accuracy(0.1, &degree) == KPM_OK);
    CHECK(degree == 180);
    CHECK(kpm_degree_for_accuracy(1.5, &degree) == KPM_ERR_CONFIG);

    double outside[] = {0.0, 3.0};
    kpm_spectrum* s = nullptr;
    CHECK(kpm_spectrum_from_values(outside, 2, &s) == KPM_ERR_DOMAIN);
    CHECK(std::string(kpm_version()) == "1.0.0");
}

TEST_CASE("exact pipeline through handles") {
    double a[] = {0.5, 0.0, 0.0, -0.25};
    kpm_matrix* m = nullptr;
    REQUIRE(kpm_matrix_from_dense(2, a, &m) == KPM_OK);
    size_t n = 0;
    CHECK(kpm_matrix_dimension(m, &n) == KPM_OK);
    CHECK(n == 2);
    double y[] = {1.0, 2.0};
    double z[2];
    CHECK(kpm_matrix_apply(m, y, z) == KPM_OK);
    CHECK(z[0] == 0.5);
    CHECK(z[1] == -0.5);

    kpm_moments* mom = nullptr;
    REQUIRE(kpm_moments_exact(m, 40, 1, &mom) == KPM_OK);
    double tau0 = 0.0;
    CHECK(kpm_moments_value(mom, 0, &tau0) == KPM_OK);
    CHECK(tau0 == doctest::Approx(1.0 / std::sqrt(M_PI)));
    CHECK(kpm_moments_value(mom, 41, &tau0) == KPM_ERR_CONFIG);

    kpm_density* q = nullptr;
    REQUIRE(kpm_density_idealized(mom, &q) == KPM_OK);
    double total = 0.0;
    CHECK(kpm_density_cdf(q, 1.0, &total) == KPM_OK);
    CHECK(total == doctest::Approx(1.0));

    kpm_spectrum* truth = nullptr;
    REQUIRE(kpm_spectrum_dense(m, &truth) == KPM_OK);
    double w1 = 0.0;
    CHECK(kpm_w1_density(q, truth, &w1) == KPM_OK);
    CHECK(w1 <= 18.0 / 40.0);

    kpm_spectrum* greedy = nullptr;
    char* diag = nullptr;
    REQUIRE(kpm_discretize_greedy(q, 2, 0.01, &greedy, &diag) == KPM_OK);
    CHECK(take(diag).front() == '[');
    CHECK(kpm_w1_discrete(greedy, truth, &w1) == KPM_OK);
    CHECK(w1 <= 3.0 * 18.0 / 40.0);

    std::string json = take([&] {
        char* j = nullptr;
        kpm_density_to_json(q, &j);
        return j;
    }());
    kpm_density* back = nullptr;
    CHECK(kpm_density_from_json(json.c_str(), &back) == KPM_OK);
    CHECK(kpm_density_from_json("not json", &back) == KPM_ERR_INPUT);

    kpm_density_free(back);
    kpm_spectrum_free(greedy);
    kpm_spectrum_free(truth);
    kpm_density_free(q);
    kpm_moments_free(mom);
    kpm_matrix_free(m);
}

TEST_CASE("estimated moments reject the idealized form") {
    double a[] = {0.5, 0.1, 0.1, -0.25};
    kpm_matrix* m = nullptr;
    REQUIRE(kpm_matrix_from_dense(2, a, &m) == KPM_OK);
    kpm_moment_options o;
    kpm_moment_options_init(&o);
    CHECK(o.degree == 40);
    CHECK(o.ell == 2);
    kpm_moments* mom = nullptr;
    REQUIRE(kpm_moments_hutchinson(m, &o, &mom) == KPM_OK);
    uint64_t calls = 0;
    CHECK(kpm_moments_oracle_calls(mom, &calls) == KPM_OK);
    CHECK(calls == 80);
    kpm_density* q = nullptr;
    CHECK(kpm_density_idealized(mom, &q) == KPM_ERR_CONFIG);
    CHECK(kpm_density_full(mom, &q) == KPM_OK);
    double low = 0.0;
    CHECK(kpm_density_min_polynomial(q, 2000, &low) == KPM_OK);
    CHECK(low >= -1e-10);
    kpm_density_free(q);
    kpm_moments_free(mom);
    kpm_matrix_free(m);
}

TEST_CASE("graph handles") {
    kpm_graph* g = nullptr;
    CHECK(kpm_graph_generate("torus", 10, &g) == KPM_ERR_CONFIG);
    CHECK(kpm_graph_generate("clique-plus-matching", 10, &g) == KPM_ERR_CONFIG);
    REQUIRE(kpm_graph_generate("hairy-clique", 40, &g) == KPM_OK);
    size_t n = 0;
    size_t nnz = 0;
    CHECK(kpm_graph_info(g, &n, &nnz) == KPM_OK);
    CHECK(n == 40);
    CHECK(nnz == 20 * 19 + 40);

    auto path = std::filesystem::temp_directory_path() / "kpm_c_api_graph.txt";
    CHECK(kpm_graph_write(g, path.c_str()) == KPM_OK);
    kpm_graph* back = nullptr;
    REQUIRE(kpm_graph_read(path.c_str(), &back) == KPM_OK);
    kpm_spectrum* none = nullptr;
    CHECK(kpm_graph_truth(back, &none) == KPM_ERR_CONFIG);
    std::filesystem::remove(path);

    kpm_moment_options o;
    kpm_moment_options_init(&o);
    o.degree = 8;
    o.samples_per_matvec = 400;
    o.repetitions = 1;
    kpm_moments* mom = nullptr;
    kpm_oracle_stats stats{};
    REQUIRE(kpm_moments_graph_amv(g, &o, &mom, &stats) == KPM_OK);
    CHECK(stats.oracle_calls == 16);
    CHECK(stats.sampled_products == 16);
    CHECK(stats.samples_per_matvec == 400);
    CHECK(stats.eps_mv == doctest::Approx(std::sqrt(48.0 * 40 / 400)));

    kpm_moment_options bad = o;
    bad.samples_per_matvec = 0;
    CHECK(kpm_moments_graph_amv(g, &bad, &mom, nullptr) == KPM_ERR_CONFIG);

    kpm_spectrum* truth = nullptr;
    REQUIRE(kpm_graph_truth(g, &truth) == KPM_OK);
    const double* values = nullptr;
    size_t count = 0;
    CHECK(kpm_spectrum_values(truth, &values, &count) == KPM_OK);
    CHECK(count == 40);
    kpm_spectrum* lap = nullptr;
    CHECK(kpm_spectrum_reflect(truth, 0, &lap) == KPM_OK);
    CHECK(kpm_spectrum_values(lap, &values, &count) == KPM_OK);
    CHECK(values[0] >= 0.0);
    CHECK(values[count - 1] <= 2.0);

    kpm_spectrum_free(lap);
    kpm_spectrum_free(truth);
    kpm_moments_free(mom);
    kpm_graph_free(back);
    kpm_graph_free(g);
}

TEST_CASE("moments json through the C boundary") {
    double v[] = {-0.5, 0.5};
    kpm_spectrum* s = nullptr;
    REQUIRE(kpm_spectrum_from_values(v, 2, &s) == KPM_OK);
    kpm_moments* m = nullptr;
    REQUIRE(kpm_moments_from_spectrum(s, 12, &m) == KPM_OK);
    char* json = nullptr;
    REQUIRE(kpm_moments_to_json(m, &json) == KPM_OK);
    kpm_moments* back = nullptr;
    CHECK(kpm_moments_from_json(json, &back) == KPM_OK);
    char* again = nullptr;
    CHECK(kpm_moments_to_json(back, &again) == KPM_OK);
    CHECK(std::string(json) == std::string(again));
    kpm_string_free(json);
    kpm_string_free(again);
    kpm_moments_free(back);
    kpm_moments_free(m);
    kpm_spectrum_free(s);
    kpm_moments_free(nullptr);
    kpm_spectrum_free(nullptr);
}
