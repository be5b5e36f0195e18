#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace kpm {

struct Table1Options {
    std::uint64_t seed = 1;
    int seeds = 5;
    int ell = 2;
    int workers = 1;
    /// Grid spacing of the greedy discretization used to score every method.
    double grid_eps = 0.01;
    /// Fixed t for the approximate method; when unset it is found by doubling.
    std::optional<std::uint64_t> samples_per_matvec;
    std::size_t clique_graph_size = 1000;
    int hypercube_bits = 14;
    int clique_degree = 40;
    int hypercube_degree = 80;
    /// Doubling stops once the approximate median is within this factor of the Hutchinson median.
    double tuning_factor = 1.25;
    double tuning_margin = 0.005;
    /// Bisection steps between the last failing and first passing budget.
    int refinement_steps = 4;
    /// Plot-data and report files are written here when set.
    std::optional<std::filesystem::path> output_dir;
};

struct MethodScore {
    std::vector<double> w1;             // discretized error per seed
    std::vector<double> continuous_w1;  // density-vs-spectrum error per seed
    double median = 0.0;
    std::uint64_t oracle_calls = 0;
};

struct TuningStep {
    std::uint64_t samples = 0;
    double median = 0.0;
};

struct Table1Row {
    std::string graph;
    std::size_t n = 0;
    std::size_t nnz = 0;
    int degree = 0;
    double idealized = 0.0;
    double idealized_continuous = 0.0;
    MethodScore hutchinson;
    MethodScore approximate;
    std::uint64_t samples_per_matvec = 0;
    std::vector<TuningStep> tuning;
    std::uint64_t sampled_products = 0;
    std::uint64_t entries_touched = 0;
    /// Mean entries touched per sampled product over nnz(Abar) and over n^2.
    double touched_fraction_nnz = 0.0;
    double touched_fraction_n2 = 0.0;
    double seconds = 0.0;
};

struct Table1Report {
    Table1Options options;
    std::vector<Table1Row> rows;
    double seconds = 0.0;
};

Table1Report run_table1(const Table1Options& options);

std::string table1_to_json(const Table1Report& report);
std::string table1_to_csv(const Table1Report& report);

}  // namespace kpm
