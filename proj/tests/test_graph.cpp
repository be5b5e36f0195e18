#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <map>

#include "kpm/error.hpp"
#include "kpm/graph.hpp"
#include "kpm/random.hpp"

using namespace kpm;

namespace {

std::vector<double> eigen_spectrum(const Graph& g) {
    auto n = static_cast<Eigen::Index>(g.vertex_count());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (auto [u, v] : g.edges()) {
        double w = 1.0 / std::sqrt(static_cast<double>(g.degree(u) * g.degree(v)));
        a(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) = w;
        a(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u)) = w;
    }
    Eigen::VectorXd e = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues();
    return {e.data(), e.data() + n};
}

void check_truth(const GeneratedGraph& gg) {
    REQUIRE(gg.truth.has_value());
    auto ref = eigen_spectrum(gg.graph);
    auto ours = gg.truth->values();
    REQUIRE(ours.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(ours[i] - ref[i]) <= 1e-10);
    auto jacobi = dense_eigenvalues(normalized_adjacency(gg.graph));
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(jacobi[i] - ref[i]) <= 1e-9);
}

// Expected single-iteration contribution, by summing over every (j, i) pair and
// weighting with its probability (1/n)(1/d_j)(1/d_i).
std::vector<double> enumerated_expectation(const Graph& g, const std::vector<double>& y) {
    std::size_t n = g.vertex_count();
    std::vector<double> z(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::uint32_t i : g.neighbors(j)) {
            double di = static_cast<double>(g.degree(i));
            double prob = 1.0 / (static_cast<double>(n) * static_cast<double>(g.degree(j)) * di);
            double p = 0.0;
            for (std::uint32_t k : g.neighbors(i)) p += 1.0 / static_cast<double>(g.degree(k));
            p /= static_cast<double>(n) * di;
            for (std::uint32_t k : g.neighbors(i))
                z[k] += prob * y[i] / (p * std::sqrt(di)) / std::sqrt(static_cast<double>(g.degree(k)));
        }
    }
    return z;
}

double dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("closed-form spectra match dense eigensolvers") {
    check_truth(clique_plus_matching(8));
    check_truth(clique_plus_matching(40));
    check_truth(hairy_clique(4));
    check_truth(hairy_clique(30));
    check_truth(hypercube(1));
    check_truth(hypercube(4));
    check_truth(hypercube(7));
    check_truth(star(2));
    check_truth(star(9));
    check_truth(path(2));
    check_truth(path(11));
}

TEST_CASE("generator shapes") {
    auto cpm = clique_plus_matching(1000);
    CHECK(cpm.graph.vertex_count() == 1000);
    CHECK(cpm.graph.nonzeros() == 500 * 499 + 500);
    auto hc = hairy_clique(1000);
    CHECK(hc.graph.nonzeros() == 500 * 499 + 1000);
    auto cube = hypercube(14);
    CHECK(cube.graph.vertex_count() == 16384);
    CHECK(cube.graph.nonzeros() == 16384 * 14);
    CHECK(star(5).graph.edge_count() == 4);
    CHECK_THROWS_AS(clique_plus_matching(10), ConfigError);
    CHECK_THROWS_AS(hairy_clique(5), ConfigError);
    CHECK_THROWS_AS(hypercube(0), ConfigError);
    CHECK_THROWS_AS(star(1), ConfigError);
    CHECK(graph_kind_from_string("hairy-clique") == GraphKind::hairy_clique);
    CHECK_THROWS_AS(graph_kind_from_string("torus"), ConfigError);
}

TEST_CASE("inverse degree identity") {
    for (const auto& gg : {clique_plus_matching(16), hairy_clique(12), hypercube(5), star(7), path(6)}) {
        CHECK(inverse_degree_identity_holds(gg.graph));
        CHECK(inverse_degree_neighbor_sum(gg.graph) ==
              doctest::Approx(static_cast<double>(gg.graph.vertex_count())).epsilon(1e-12));
        // sum_i n d_i p_i recovers the same double sum.
        double total = 0.0;
        double n = static_cast<double>(gg.graph.vertex_count());
        for (std::size_t i = 0; i < gg.graph.vertex_count(); ++i)
            total += n * static_cast<double>(gg.graph.degree(i)) * acceptance_probability(gg.graph, i);
        CHECK(total == doctest::Approx(n).epsilon(1e-12));
    }
}

TEST_CASE("sampled product is unbiased by enumeration") {
    for (const auto& gg : {path(2), path(3), star(5), hairy_clique(6)}) {
        std::vector<double> y(gg.graph.vertex_count());
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = 0.3 + 0.7 * static_cast<double>(i) - 0.1 * i * i;
        auto expected = enumerated_expectation(gg.graph, y);
        auto exact = exact_normalized_matvec(gg.graph, y);
        for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(expected[i] - exact[i]) <= 1e-12);
    }
}

TEST_CASE("empirical mean of the sampled product") {
    auto g = path(5).graph;
    std::vector<double> y{1.0, -2.0, 0.5, 3.0, -1.0};
    const std::uint64_t t = 2'000'000;
    auto report = sampled_matvec(g, y, t, std::uint64_t{5});
    auto exact = exact_normalized_matvec(g, y);
    // Each accepted iteration adds at most max|y| / (p_min sqrt(d)) to one coordinate.
    double bound = 0.0;
    for (std::size_t i = 0; i < 5; ++i) bound = std::max(bound, std::abs(y[i]) / acceptance_probability(g, i));
    for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(report.z[i] - exact[i]) <= 6.0 * bound / std::sqrt(double(t)));
    CHECK(report.t == t);
    CHECK(report.accepted <= t);
}

TEST_CASE("acceptance frequencies on a star") {
    auto g = star(8).graph;
    std::vector<double> y{1, 2, 3, 4, 5, 6, 7, 8};
    auto engine = keyed_engine({99});
    std::map<int, double> counts;
    const int trials = 100000;
    double p_center = acceptance_probability(g, 0);
    double p_leaf = acceptance_probability(g, 1);
    CHECK(p_center == doctest::Approx(1.0 / 8.0));
    CHECK(p_leaf == doctest::Approx(1.0 / 56.0));
    for (int s = 0; s < trials; ++s) {
        auto r = sampled_matvec(g, y, 1, engine);
        int cat = -1;
        if (r.accepted == 0) {
            cat = 8;
        } else if (r.z[0] == 0.0) {
            cat = 0;
        } else {
            double yi = r.z[0] * p_leaf * std::sqrt(7.0);
            cat = static_cast<int>(std::lround(yi)) - 1;
        }
        REQUIRE(cat >= 0);
        REQUIRE(cat <= 8);
        counts[cat] += 1;
    }
    double chi2 = 0.0;
    for (int c = 0; c <= 8; ++c) {
        double p = c == 0 ? p_center : c == 8 ? 1.0 - p_center - 7 * p_leaf : p_leaf;
        double e = p * trials;
        chi2 += (counts[c] - e) * (counts[c] - e) / e;
    }
    CHECK(chi2 < 26.12);  // chi-square, 8 degrees of freedom, alpha = 0.001
}

TEST_CASE("variance on a single edge") {
    auto g = path(2).graph;
    std::vector<double> y{1.0, 0.0};
    const std::uint64_t t = 100;
    const int trials = 20000;
    double mean = 0.0;
    double mse = 0.0;
    auto engine = keyed_engine({4});
    for (int s = 0; s < trials; ++s) {
        auto r = sampled_matvec(g, y, t, engine);
        REQUIRE(r.z[0] == 0.0);
        mean += r.z[1];
        mse += (r.z[1] - 1.0) * (r.z[1] - 1.0);
    }
    mean /= trials;
    mse /= trials;
    CHECK(std::abs(mean - 1.0) <= 5.0 * std::sqrt(1.0 / t / trials));
    CHECK(mse == doctest::Approx(1.0 / t).epsilon(0.05));
}

TEST_CASE("boosted oracle meets its accuracy") {
    auto k2 = std::make_shared<const Graph>(path(2).graph);
    BoostedOracleOptions o;
    o.eps_mv = 0.5;
    o.delta = 0.05;
    o.seed = 11;
    GraphAmvOracle oracle(k2, o);
    CHECK(oracle.samples_per_product() == 384);
    CHECK(oracle.repetitions() == 24);
    std::vector<double> y{0.6, -0.8};
    std::vector<double> z(2);
    int failures = 0;
    const int calls = 2000;
    for (int c = 0; c < calls; ++c) {
        oracle.apply(y, z, {static_cast<std::uint64_t>(c), 0});
        if (dist(z, {-0.8, 0.6}) > o.eps_mv) ++failures;
    }
    CHECK(failures <= calls * o.delta);
    CHECK(oracle.calls() == calls);
    CHECK(oracle.sampled_products() == std::uint64_t(calls) * 24);

    auto cube = std::make_shared<const Graph>(hypercube(8).graph);
    BoostedOracleOptions co;
    co.seed = 3;
    GraphAmvOracle cube_oracle(cube, co);
    std::vector<double> v(256);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(0.37 * i) + 0.1;
    double vn = 0.0;
    for (double x : v) vn += x * x;
    vn = std::sqrt(vn);
    auto exact = exact_normalized_matvec(*cube, v);
    std::vector<double> out(256);
    int good = 0;
    for (int c = 0; c < 40; ++c) {
        cube_oracle.apply(v, out, {static_cast<std::uint64_t>(c), 1});
        if (dist(out, exact) <= co.eps_mv * vn) ++good;
    }
    CHECK(good >= 38);
}

TEST_CASE("boosting schedule") {
    BoostedOracleOptions o;
    auto [t, r] = GraphAmvOracle::schedule(1000, o);
    CHECK(t == 192000);
    CHECK(r == 19);
    o.eps_mv = 1e-5;
    CHECK_THROWS_AS(GraphAmvOracle::schedule(1000, o), ConfigError);
    o.samples = 500;
    o.repetitions = 1;
    auto [t2, r2] = GraphAmvOracle::schedule(1000, o);
    CHECK(t2 == 500);
    CHECK(r2 == 1);
    o.delta = 1.0;
    CHECK_THROWS_AS(GraphAmvOracle::schedule(1000, o), ConfigError);
}

TEST_CASE("oracle output is keyed by seed and tag") {
    auto g = std::make_shared<const Graph>(hairy_clique(20).graph);
    BoostedOracleOptions o;
    o.samples = 200;
    o.repetitions = 3;
    o.seed = 7;
    GraphAmvOracle a(g, o);
    GraphAmvOracle b(g, o);
    std::vector<double> y(20, 0.2);
    std::vector<double> za(20), zb(20), zc(20);
    a.apply(y, za, {1, 2});
    b.apply(y, zb, {1, 2});
    b.apply(y, zc, {1, 3});
    CHECK(za == zb);
    CHECK(za != zc);
}

TEST_CASE("neighbor enumeration without list access") {
    auto g = hairy_clique(16).graph;
    auto blind = g.without_list_access();
    CHECK_FALSE(blind.has_list_access());
    CHECK_THROWS_AS((void)blind.neighbors(0), ConfigError);
    auto engine = keyed_engine({1});
    for (std::size_t i = 0; i < g.vertex_count(); ++i) {
        auto listed = g.neighbors(i);
        auto found = blind.enumerate_neighbors(i, engine);
        CHECK(std::vector<std::uint32_t>(listed.begin(), listed.end()) == found);
    }
    std::vector<double> y(16, 1.0);
    CHECK(exact_normalized_matvec(g, y) == exact_normalized_matvec(blind, y));
}

TEST_CASE("graph files") {
    auto g = parse_graph("# comment\n4 4\n1 2\n2 3\n3 4\n2 1\n");
    CHECK(g.vertex_count() == 4);
    CHECK(g.edge_count() == 3);
    CHECK(g.degree(1) == 2);
    auto p = std::filesystem::temp_directory_path() / "kpm_graph_roundtrip.txt";
    write_graph(g, p);
    auto back = read_graph(p);
    CHECK(back.edges() == g.edges());
    std::filesystem::remove(p);
    CHECK_THROWS_AS(parse_graph("3 1\n1 1\n"), InputError);
    CHECK_THROWS_AS(parse_graph("3 1\n1 2\n"), InputError);
    CHECK_THROWS_AS(parse_graph("2 1\n1 3\n"), InputError);
    CHECK_THROWS_AS(parse_graph("2 2\n1 2\n"), InputError);
    CHECK_THROWS_AS(parse_graph("x y\n"), InputError);
    CHECK_THROWS_AS(read_graph("/nonexistent/graph.txt"), InputError);
}

TEST_CASE("laplacian reflection") {
    DiscreteSpectrum s({-1.0, 0.0, 1.0});
    auto lap = laplacian_reflect(s);
    CHECK(std::vector<double>(lap.values().begin(), lap.values().end()) == std::vector<double>{0.0, 1.0, 2.0});
    DiscreteSpectrum t({-0.5, 0.2, 0.9});
    CHECK(laplacian_reflect(laplacian_reflect(t, true), true) == t);

    auto q = idealized_kpm(moments_from_spectrum(t.values(), 24), *jackson_coefficients(24));
    auto r = laplacian_reflect(q);
    CHECK(r.metadata().reflected);
    CHECK(r.metadata().offset == 1.0);
    CHECK(laplacian_reflect(r).series() == q.series());
    CHECK_FALSE(laplacian_reflect(r).metadata().reflected);
    for (double x : {-0.7, 0.0, 0.3}) CHECK(r.evaluate(x) == doctest::Approx(q.evaluate(-x)));
    CHECK(w1_density_vs_spectrum(r, laplacian_reflect(t, true)) ==
          doctest::Approx(w1_density_vs_spectrum(q, t)).epsilon(1e-9));
}
