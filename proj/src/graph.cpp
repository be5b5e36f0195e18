#include "kpm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "kpm/error.hpp"
#include "kpm/random.hpp"

namespace kpm {

namespace {

constexpr std::uint64_t kSamplerDomain = 0x5a4d5650ULL;
constexpr double kMaxSamplesPerProduct = 1e9;

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace

Graph Graph::from_edges(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges) {
    if (n == 0) throw InputError("graph has no vertices");
    if (n > std::numeric_limits<std::uint32_t>::max()) throw InputError("graph too large");
    std::vector<std::vector<std::uint32_t>> lists(n);
    for (auto [u, v] : edges) {
        if (u >= n || v >= n) throw InputError("edge endpoint out of range");
        if (u == v) throw InputError("self-loop at vertex " + std::to_string(u + 1));
        lists[u].push_back(static_cast<std::uint32_t>(v));
        lists[v].push_back(static_cast<std::uint32_t>(u));
    }
    Graph g;
    g.offsets_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        auto& l = lists[i];
        std::sort(l.begin(), l.end());
        l.erase(std::unique(l.begin(), l.end()), l.end());
        if (l.empty()) throw InputError("isolated vertex " + std::to_string(i + 1));
        g.offsets_[i + 1] = g.offsets_[i] + l.size();
    }
    g.adjacency_.reserve(g.offsets_[n]);
    for (auto& l : lists) g.adjacency_.insert(g.adjacency_.end(), l.begin(), l.end());
    return g;
}

Graph Graph::without_list_access() const {
    Graph g = *this;
    g.list_access_ = false;
    return g;
}

std::size_t Graph::sample_vertex(Engine& engine) const {
    return std::uniform_int_distribution<std::size_t>(0, vertex_count() - 1)(engine);
}

std::size_t Graph::sample_neighbor(std::size_t i, Engine& engine) const {
    std::size_t d = degree(i);
    return adjacency_[offsets_[i] + std::uniform_int_distribution<std::size_t>(0, d - 1)(engine)];
}

std::vector<std::uint32_t> Graph::enumerate_neighbors(std::size_t i, Engine& engine) const {
    if (list_access_) {
        auto s = neighbors(i);
        return {s.begin(), s.end()};
    }
    std::size_t d = degree(i);
    std::vector<std::uint32_t> seen;
    seen.reserve(d);
    while (seen.size() < d) {
        auto j = static_cast<std::uint32_t>(sample_neighbor(i, engine));
        auto it = std::lower_bound(seen.begin(), seen.end(), j);
        if (it == seen.end() || *it != j) seen.insert(it, j);
    }
    return seen;
}

std::span<const std::uint32_t> Graph::neighbors(std::size_t i) const {
    if (!list_access_) throw ConfigError("graph was opened without neighbor-list access");
    return {adjacency_.data() + offsets_[i], degree(i)};
}

std::vector<std::pair<std::size_t, std::size_t>> Graph::edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(edge_count());
    for (std::size_t i = 0; i < vertex_count(); ++i)
        for (std::size_t p = offsets_[i]; p < offsets_[i + 1]; ++p)
            if (adjacency_[p] > i) out.emplace_back(i, adjacency_[p]);
    return out;
}

std::vector<double> exact_normalized_matvec(const Graph& g, std::span<const double> y) {
    std::size_t n = g.vertex_count();
    if (y.size() != n) throw ConfigError("vector length does not match graph");
    Graph::Engine unused;
    std::vector<double> inv_sqrt(n);
    for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(g.degree(i)));
    std::vector<double> z(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::uint32_t j : g.enumerate_neighbors(i, unused)) s += y[j] * inv_sqrt[j];
        z[i] = s * inv_sqrt[i];
    }
    return z;
}

SymmetricMatrix normalized_adjacency(const Graph& g) {
    std::vector<SymmetricMatrix::Entry> entries;
    entries.reserve(g.edge_count());
    for (auto [u, v] : g.edges()) {
        double w = 1.0 / std::sqrt(static_cast<double>(g.degree(u)) * static_cast<double>(g.degree(v)));
        entries.push_back({v, u, w});
    }
    return SymmetricMatrix::sparse(g.vertex_count(), entries);
}

double acceptance_probability(const Graph& g, std::size_t i) {
    Graph::Engine engine = keyed_engine({kSamplerDomain, i});
    double s = 0.0;
    for (std::uint32_t j : g.enumerate_neighbors(i, engine)) s += 1.0 / static_cast<double>(g.degree(j));
    return s / (static_cast<double>(g.vertex_count()) * static_cast<double>(g.degree(i)));
}

double inverse_degree_neighbor_sum(const Graph& g) {
    Graph::Engine engine = keyed_engine({kSamplerDomain});
    double s = 0.0;
    for (std::size_t i = 0; i < g.vertex_count(); ++i)
        for (std::uint32_t j : g.enumerate_neighbors(i, engine)) s += 1.0 / static_cast<double>(g.degree(j));
    return s;
}

bool inverse_degree_identity_holds(const Graph& g) {
    Graph::Engine engine = keyed_engine({kSamplerDomain});
    std::vector<std::size_t> occurrences(g.vertex_count(), 0);
    for (std::size_t i = 0; i < g.vertex_count(); ++i)
        for (std::uint32_t j : g.enumerate_neighbors(i, engine)) ++occurrences[j];
    for (std::size_t j = 0; j < g.vertex_count(); ++j)
        if (occurrences[j] != g.degree(j)) return false;
    return true;
}

SampledMatvecReport sampled_matvec(const Graph& g, std::span<const double> y, std::uint64_t t, Graph::Engine& engine) {
    std::size_t n = g.vertex_count();
    if (y.size() != n) throw ConfigError("vector length does not match graph");
    if (t == 0) throw ConfigError("sample count must be positive");
    SampledMatvecReport report;
    report.z.assign(n, 0.0);
    report.t = t;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double dn = static_cast<double>(n);
    for (std::uint64_t it = 0; it < t; ++it) {
        std::size_t j = g.sample_vertex(engine);
        std::size_t i = g.sample_neighbor(j, engine);
        double di = static_cast<double>(g.degree(i));
        if (unit(engine) > 1.0 / di) continue;
        ++report.accepted;
        auto nbrs = g.enumerate_neighbors(i, engine);
        report.entries_touched += nbrs.size();
        double inv_deg_sum = 0.0;
        for (std::uint32_t k : nbrs) inv_deg_sum += 1.0 / static_cast<double>(g.degree(k));
        double p = inv_deg_sum / (dn * di);
        double scale = y[i] / (p * std::sqrt(di));
        for (std::uint32_t k : nbrs) report.z[k] += scale / std::sqrt(static_cast<double>(g.degree(k)));
    }
    double inv_t = 1.0 / static_cast<double>(t);
    for (double& v : report.z) v *= inv_t;
    return report;
}

SampledMatvecReport sampled_matvec(const Graph& g, std::span<const double> y, std::uint64_t t, std::uint64_t seed) {
    Graph::Engine engine = keyed_engine({kSamplerDomain, seed});
    return sampled_matvec(g, y, t, engine);
}

std::pair<std::uint64_t, int> GraphAmvOracle::schedule(std::size_t n, const BoostedOracleOptions& o) {
    if (!(o.eps_mv > 0.0) || !std::isfinite(o.eps_mv)) throw ConfigError("eps_mv must be positive");
    if (!(o.delta > 0.0 && o.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    if (!(o.boost_constant > 0.0)) throw ConfigError("boosting constant must be positive");
    std::uint64_t t = 0;
    if (o.samples) {
        if (*o.samples == 0) throw ConfigError("samples per product must be positive");
        t = *o.samples;
    } else {
        double tt = std::ceil(48.0 * static_cast<double>(n) / (o.eps_mv * o.eps_mv));
        if (tt > kMaxSamplesPerProduct)
            throw ConfigError("sampling budget t = " + std::to_string(tt) +
                              " per product is infeasible; raise eps_mv or set the sample count explicitly");
        t = static_cast<std::uint64_t>(tt);
    }
    int r = 0;
    if (o.repetitions) {
        if (*o.repetitions < 1) throw ConfigError("repetitions must be at least 1");
        r = *o.repetitions;
    } else {
        r = std::max(1, static_cast<int>(std::ceil(o.boost_constant * std::log(1.0 / o.delta))));
    }
    return {t, r};
}

GraphAmvOracle::GraphAmvOracle(std::shared_ptr<const Graph> graph, BoostedOracleOptions options)
    : graph_(std::move(graph)), options_(options) {
    if (!graph_) throw ConfigError("null graph");
    std::tie(samples_, repetitions_) = schedule(graph_->vertex_count(), options_);
}

void GraphAmvOracle::do_apply(std::span<const double> y, std::span<double> z, CallTag tag) const {
    std::size_t n = graph_->vertex_count();
    std::vector<std::vector<double>> candidates;
    candidates.reserve(static_cast<std::size_t>(repetitions_));
    std::uint64_t touched = 0;
    for (int rep = 0; rep < repetitions_; ++rep) {
        Graph::Engine engine = keyed_engine({kSamplerDomain, options_.seed, tag.stream, tag.step,
                                             static_cast<std::uint64_t>(rep)});
        auto report = sampled_matvec(*graph_, y, samples_, engine);
        touched += report.entries_touched;
        candidates.push_back(std::move(report.z));
    }
    entries_touched_ += touched;
    sampled_products_ += static_cast<std::uint64_t>(repetitions_);

    std::size_t chosen = 0;
    if (repetitions_ > 1) {
        double radius = 0.5 * options_.eps_mv * norm2(y);
        auto need = static_cast<std::size_t>(repetitions_ / 2 + 1);
        std::size_t best = 0;
        std::size_t best_count = 0;
        bool found = false;
        for (std::size_t a = 0; a < candidates.size() && !found; ++a) {
            std::size_t agree = 0;
            for (const auto& b : candidates)
                if (distance(candidates[a], b) <= radius) ++agree;
            if (agree >= need) {
                chosen = a;
                found = true;
            } else if (agree > best_count) {
                best = a;
                best_count = agree;
            }
        }
        if (!found) {
            chosen = best;
            ++flagged_;
        }
    }
    std::copy_n(candidates[chosen].begin(), n, z.begin());
}

std::string to_string(GraphKind kind) {
    switch (kind) {
        case GraphKind::clique_plus_matching: return "clique-plus-matching";
        case GraphKind::hairy_clique: return "hairy-clique";
        case GraphKind::hypercube: return "hypercube";
        case GraphKind::star: return "star";
        case GraphKind::path: return "path";
        case GraphKind::from_file: return "file";
    }
    return "unknown";
}

GraphKind graph_kind_from_string(const std::string& name) {
    for (auto k : {GraphKind::clique_plus_matching, GraphKind::hairy_clique, GraphKind::hypercube, GraphKind::star,
                   GraphKind::path, GraphKind::from_file})
        if (to_string(k) == name) return k;
    throw ConfigError("unknown graph kind '" + name + "'");
}

GeneratedGraph clique_plus_matching(std::size_t n) {
    if (n < 8 || n % 4 != 0) throw ConfigError("clique-plus-matching needs n divisible by 4 and n >= 8");
    std::size_t m = n / 2;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) edges.emplace_back(i, j);
    for (std::size_t i = m; i < n; i += 2) edges.emplace_back(i, i + 1);
    std::vector<double> eig;
    eig.reserve(n);
    eig.push_back(1.0);
    eig.insert(eig.end(), m - 1, -1.0 / static_cast<double>(m - 1));
    eig.insert(eig.end(), n / 4, 1.0);
    eig.insert(eig.end(), n / 4, -1.0);
    return {Graph::from_edges(n, edges), DiscreteSpectrum(std::move(eig))};
}

GeneratedGraph hairy_clique(std::size_t n) {
    if (n < 4 || n % 2 != 0) throw ConfigError("hairy-clique needs an even n >= 4");
    std::size_t m = n / 2;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) edges.emplace_back(i, j);
    for (std::size_t i = 0; i < m; ++i) edges.emplace_back(i, m + i);
    // Clique vertices have degree m; Abar splits into 2x2 blocks [[c, 1/sqrt(m)], [1/sqrt(m), 0]]
    // with c = (m-1)/m on the all-ones direction and c = -1/m on its complement (multiplicity m-1).
    auto block = [m](double c) {
        double b2 = 1.0 / static_cast<double>(m);
        double disc = std::sqrt(c * c + 4.0 * b2);
        return std::pair{0.5 * (c + disc), 0.5 * (c - disc)};
    };
    double md = static_cast<double>(m);
    auto [a1, a2] = block((md - 1.0) / md);
    auto [b1, b2] = block(-1.0 / md);
    std::vector<double> eig{a1, a2};
    eig.insert(eig.end(), m - 1, b1);
    eig.insert(eig.end(), m - 1, b2);
    return {Graph::from_edges(n, edges), DiscreteSpectrum(std::move(eig))};
}

GeneratedGraph hypercube(int bits) {
    if (bits < 1 || bits > 24) throw ConfigError("hypercube dimension must lie in [1, 24]");
    std::size_t n = std::size_t{1} << bits;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    edges.reserve(n * static_cast<std::size_t>(bits) / 2);
    for (std::size_t v = 0; v < n; ++v)
        for (int b = 0; b < bits; ++b) {
            std::size_t u = v ^ (std::size_t{1} << b);
            if (u > v) edges.emplace_back(v, u);
        }
    std::vector<double> eig;
    eig.reserve(n);
    double binom = 1.0;
    for (int j = 0; j <= bits; ++j) {
        auto count = static_cast<std::size_t>(std::llround(binom));
        eig.insert(eig.end(), count, static_cast<double>(bits - 2 * j) / bits);
        binom = binom * (bits - j) / (j + 1);
    }
    return {Graph::from_edges(n, edges), DiscreteSpectrum(std::move(eig))};
}

GeneratedGraph star(std::size_t n) {
    if (n < 2) throw ConfigError("star needs at least 2 vertices");
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 1; i < n; ++i) edges.emplace_back(0, i);
    std::vector<double> eig(n, 0.0);
    eig.front() = -1.0;
    eig.back() = 1.0;
    return {Graph::from_edges(n, edges), DiscreteSpectrum(std::move(eig))};
}

GeneratedGraph path(std::size_t n) {
    if (n < 2) throw ConfigError("path needs at least 2 vertices");
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
    // Random walk on a path reflects at the ends: eigenvalues cos(pi k / (n - 1)).
    std::vector<double> eig(n);
    for (std::size_t k = 0; k < n; ++k) eig[k] = std::cos(M_PI * static_cast<double>(k) / static_cast<double>(n - 1));
    return {Graph::from_edges(n, edges), DiscreteSpectrum(std::move(eig))};
}

Graph parse_graph(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    auto next_line = [&](std::string& out) {
        while (std::getline(in, out)) {
            auto p = out.find_first_not_of(" \t\r");
            if (p == std::string::npos || out[p] == '#' || out[p] == '%') continue;
            return true;
        }
        return false;
    };
    if (!next_line(line)) throw InputError("empty graph file");
    long long n = 0;
    long long m = 0;
    {
        std::istringstream h(line);
        if (!(h >> n >> m) || n <= 0 || m < 0) throw InputError("bad graph header: expected 'n m'");
    }
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    edges.reserve(static_cast<std::size_t>(m));
    for (long long e = 0; e < m; ++e) {
        if (!next_line(line)) throw InputError("graph file ended after " + std::to_string(e) + " of " +
                                               std::to_string(m) + " edges");
        std::istringstream es(line);
        long long u = 0;
        long long v = 0;
        if (!(es >> u >> v)) throw InputError("bad edge line: '" + line + "'");
        if (u < 1 || v < 1 || u > n || v > n) throw InputError("edge endpoint out of range: '" + line + "'");
        edges.emplace_back(static_cast<std::size_t>(u - 1), static_cast<std::size_t>(v - 1));
    }
    return Graph::from_edges(static_cast<std::size_t>(n), edges);
}

Graph read_graph(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw InputError("cannot open graph file " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_graph(ss.str());
}

void write_graph(const Graph& g, const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw InputError("cannot write " + p.string());
    auto edges = g.edges();
    out << g.vertex_count() << ' ' << edges.size() << '\n';
    for (auto [u, v] : edges) out << u + 1 << ' ' << v + 1 << '\n';
}

DiscreteSpectrum laplacian_reflect(const DiscreteSpectrum& s, bool remap) {
    std::vector<double> out(s.values().begin(), s.values().end());
    for (double& v : out) v = remap ? -v : 1.0 - v;
    return DiscreteSpectrum(std::move(out), !remap);
}

DensityEstimate laplacian_reflect(const DensityEstimate& q) {
    auto c = q.series().coefficients();
    std::vector<double> flipped(c.begin(), c.end());
    for (std::size_t k = 1; k < flipped.size(); k += 2) flipped[k] = -flipped[k];
    DensityMetadata meta = q.metadata();
    meta.reflected = !meta.reflected;
    meta.offset = meta.reflected ? 1.0 : 0.0;
    return {ChebyshevSeries(std::move(flipped)), meta};
}

}  // namespace kpm
