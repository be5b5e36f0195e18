#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kpm/density.hpp"
#include "kpm/oracle.hpp"
#include "kpm/spectrum.hpp"

namespace kpm {

/// Immutable simple undirected graph with the three access primitives: uniform
/// vertex, uniform neighbor, and neighbor enumeration (O(d_i) with list access,
/// coupon-collector sampling otherwise).
class Graph {
public:
    using Engine = std::mt19937_64;

    /// 0-indexed edges; duplicates are merged, self-loops and isolated vertices rejected.
    static Graph from_edges(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges);

    [[nodiscard]] std::size_t vertex_count() const { return offsets_.size() - 1; }
    [[nodiscard]] std::size_t edge_count() const { return adjacency_.size() / 2; }
    /// nnz of the (normalized) adjacency matrix, 2m.
    [[nodiscard]] std::size_t nonzeros() const { return adjacency_.size(); }
    [[nodiscard]] std::size_t degree(std::size_t i) const { return offsets_[i + 1] - offsets_[i]; }
    [[nodiscard]] bool has_list_access() const { return list_access_; }

    /// Copy whose neighbor enumeration goes through repeated neighbor sampling.
    [[nodiscard]] Graph without_list_access() const;

    std::size_t sample_vertex(Engine& engine) const;
    std::size_t sample_neighbor(std::size_t i, Engine& engine) const;
    /// Sorted neighbor list of i. Without list access this samples neighbors until all d_i are seen.
    std::vector<std::uint32_t> enumerate_neighbors(std::size_t i, Engine& engine) const;
    /// Direct list view; requires list access.
    [[nodiscard]] std::span<const std::uint32_t> neighbors(std::size_t i) const;

    [[nodiscard]] std::vector<std::pair<std::size_t, std::size_t>> edges() const;

private:
    Graph() = default;

    std::vector<std::size_t> offsets_;
    std::vector<std::uint32_t> adjacency_;
    bool list_access_ = true;
};

/// z_i = sum_{j in N(i)} y_j / sqrt(d_i d_j).
std::vector<double> exact_normalized_matvec(const Graph& g, std::span<const double> y);

/// D^{-1/2} A D^{-1/2} as a sparse symmetric matrix.
SymmetricMatrix normalized_adjacency(const Graph& g);

/// p_i = (1 / (n d_i)) sum_{j in N(i)} 1/d_j, the per-iteration acceptance probability of column i.
double acceptance_probability(const Graph& g, std::size_t i);

/// sum_i sum_{j in N(i)} 1/d_j, which equals n for every graph.
double inverse_degree_neighbor_sum(const Graph& g);
/// Integer form of the same identity: vertex j occurs exactly d_j times across all neighbor lists.
bool inverse_degree_identity_holds(const Graph& g);

struct SampledMatvecReport {
    std::vector<double> z;
    std::uint64_t entries_touched = 0;
    std::uint64_t t = 0;
    std::uint64_t accepted = 0;
};

/// Unbiased column-sampling estimate of Abar y with t iterations.
SampledMatvecReport sampled_matvec(const Graph& g, std::span<const double> y, std::uint64_t t, Graph::Engine& engine);
SampledMatvecReport sampled_matvec(const Graph& g, std::span<const double> y, std::uint64_t t, std::uint64_t seed);

struct BoostedOracleOptions {
    double eps_mv = 0.5;
    double delta = 0.1;
    double boost_constant = 8.0;                 // r = ceil(c log(1/delta))
    std::optional<std::uint64_t> samples;        // overrides t = ceil(48 n / eps_mv^2)
    std::optional<int> repetitions;              // overrides r
    std::uint64_t seed = 0;
};

/// eps_mv-approximate oracle for Abar built from r independent sampled products
/// and a majority-agreement selection.
class GraphAmvOracle final : public MatvecOracle {
public:
    GraphAmvOracle(std::shared_ptr<const Graph> graph, BoostedOracleOptions options);

    [[nodiscard]] std::size_t dimension() const override { return graph_->vertex_count(); }
    [[nodiscard]] double error_bound() const override { return options_.eps_mv; }
    [[nodiscard]] double cost_per_call() const override { return static_cast<double>(repetitions_) * static_cast<double>(samples_); }

    [[nodiscard]] std::uint64_t samples_per_product() const { return samples_; }
    [[nodiscard]] int repetitions() const { return repetitions_; }
    [[nodiscard]] std::uint64_t entries_touched() const { return entries_touched_.load(); }
    [[nodiscard]] std::uint64_t sampled_products() const { return sampled_products_.load(); }
    /// Calls where no candidate reached a strict majority.
    [[nodiscard]] std::uint64_t flagged_calls() const { return flagged_.load(); }

    /// Boosting schedule for the given accuracy: (t, r).
    static std::pair<std::uint64_t, int> schedule(std::size_t n, const BoostedOracleOptions& options);

protected:
    void do_apply(std::span<const double> y, std::span<double> z, CallTag tag) const override;

private:
    std::shared_ptr<const Graph> graph_;
    BoostedOracleOptions options_;
    std::uint64_t samples_;
    int repetitions_;
    mutable std::atomic<std::uint64_t> entries_touched_{0};
    mutable std::atomic<std::uint64_t> sampled_products_{0};
    mutable std::atomic<std::uint64_t> flagged_{0};
};

enum class GraphKind { clique_plus_matching, hairy_clique, hypercube, star, path, from_file };

std::string to_string(GraphKind kind);
GraphKind graph_kind_from_string(const std::string& name);

struct GeneratedGraph {
    Graph graph;
    std::optional<DiscreteSpectrum> truth;  // closed-form spectrum of Abar when known
};

/// K_{n/2} plus a perfect matching on the other n/2 vertices (n divisible by 4).
GeneratedGraph clique_plus_matching(std::size_t n);
/// K_{n/2} with one pendant vertex attached to every clique vertex (n even).
GeneratedGraph hairy_clique(std::size_t n);
/// Boolean hypercube on `bits`-bit strings.
GeneratedGraph hypercube(int bits);
/// One center joined to n - 1 leaves.
GeneratedGraph star(std::size_t n);
GeneratedGraph path(std::size_t n);

/// "n m" header, then m lines "u v" with 1-indexed vertices.
Graph read_graph(const std::filesystem::path& path);
Graph parse_graph(const std::string& text);
void write_graph(const Graph& g, const std::filesystem::path& path);

/// lambda -> 1 - lambda (spectrum of I - Abar on [0, 2]); with `remap`, shifted
/// back to [-1, 1], i.e. lambda -> -lambda.
DiscreteSpectrum laplacian_reflect(const DiscreteSpectrum& s, bool remap = false);
/// a_k -> (-1)^k a_k, with the +1 shift to the Laplacian's range recorded in metadata.
DensityEstimate laplacian_reflect(const DensityEstimate& q);

}  // namespace kpm
