#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kpm/kpm_api.h"

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Failure {
    kpm_status status;
    std::string message;
};

void check(kpm_status s) {
    if (s != KPM_OK) throw Failure{s, kpm_last_error()};
}

[[noreturn]] void config_error(const std::string& message) { throw Failure{KPM_ERR_CONFIG, message}; }
[[noreturn]] void input_error(const std::string& message) { throw Failure{KPM_ERR_INPUT, message}; }

int exit_code(kpm_status s) {
    switch (s) {
        case KPM_OK: return 0;
        case KPM_ERR_INPUT:
        case KPM_ERR_DOMAIN: return 2;
        case KPM_ERR_CONFIG: return 3;
        default: return 1;
    }
}

template <class T, void (*Free)(T*)>
struct Handle {
    T* p = nullptr;
    Handle() = default;
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    Handle(Handle&& o) noexcept : p(o.p) { o.p = nullptr; }
    Handle& operator=(Handle&& o) noexcept {
        std::swap(p, o.p);
        return *this;
    }
    ~Handle() { Free(p); }
    T** out() { return &p; }
    T* get() const { return p; }
};

using Matrix = Handle<kpm_matrix, kpm_matrix_free>;
using GraphH = Handle<kpm_graph, kpm_graph_free>;
using Moments = Handle<kpm_moments, kpm_moments_free>;
using Density = Handle<kpm_density, kpm_density_free>;
using Spectrum = Handle<kpm_spectrum, kpm_spectrum_free>;

std::string take_string(char* s) {
    std::string out(s ? s : "");
    kpm_string_free(s);
    return out;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) input_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) input_error("cannot write " + path);
    out << text;
    if (text.empty() || text.back() != '\n') out << '\n';
}

/// Every line "a b" with integers and the header's m equal to the remaining line count.
bool looks_like_graph(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::pair<long long, long long>> rows;
    while (std::getline(in, line)) {
        auto p = line.find_first_not_of(" \t\r");
        if (p == std::string::npos || line[p] == '#' || line[p] == '%') {
            if (p != std::string::npos && line.rfind("%%MatrixMarket", p) == p) return false;
            continue;
        }
        std::istringstream ls(line);
        std::string a, b, extra;
        if (!(ls >> a >> b) || (ls >> extra)) return false;
        if (a.find_first_not_of("0123456789") != std::string::npos ||
            b.find_first_not_of("0123456789") != std::string::npos)
            return false;
        rows.emplace_back(std::stoll(a), std::stoll(b));
    }
    return !rows.empty() && rows.front().second == static_cast<long long>(rows.size() - 1);
}

struct Common {
    std::string input;
    std::string input_kind = "auto";
    std::string method = "hutchinson";
    std::optional<double> eps;
    std::optional<int> degree;
    std::string ell = "2";
    std::optional<double> eps_mv;
    double delta = 0.1;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> samples_per_matvec;
    std::optional<int> repetitions;
    double boost_constant = 8.0;
    bool auto_scale = false;
    int workers = 1;
    std::string output;
    std::string manifest;
    std::string plot_csv;
    int grid_points = 1000;
    std::string moments_output;
};

class Manifest {
public:
    explicit Manifest(std::string command) : start_(Clock::now()) {
        doc_["command"] = std::move(command);
        doc_["version"] = kpm_version();
    }
    json& operator[](const char* key) { return doc_[key]; }
    void write(const std::string& explicit_path, const std::string& output) {
        doc_["timing_seconds"] = std::chrono::duration<double>(Clock::now() - start_).count();
        std::string path = !explicit_path.empty() ? explicit_path
                           : !output.empty()      ? output + ".manifest.json"
                                                  : std::string("kpm-manifest.json");
        write_text(path, doc_.dump(2));
    }

private:
    json doc_;
    Clock::time_point start_;
};

void add_estimation_flags(CLI::App* cmd, Common& c) {
    cmd->add_option("input", c.input, "Matrix (MatrixMarket or dense text) or graph edge list")->required();
    cmd->add_option("--input-kind", c.input_kind, "auto, matrix or graph")
        ->check(CLI::IsMember({"auto", "matrix", "graph"}));
    cmd->add_option("--method", c.method, "exact, hutchinson or graph-amv")
        ->check(CLI::IsMember({"exact", "hutchinson", "graph-amv"}));
    cmd->add_option("--eps", c.eps, "Target W1 accuracy; sets N = 4 ceil(18 / (4 eps))");
    cmd->add_option("--degree", c.degree, "Number of moments N (multiple of 4); overrides --eps");
    cmd->add_option("--ell", c.ell, "Probe vectors, or 'auto' for the repetition formula");
    cmd->add_option("--eps-mv", c.eps_mv, "Approximate-oracle accuracy (graph-amv default 1/(4 N^4))");
    cmd->add_option("--delta", c.delta, "Failure probability");
    cmd->add_option("--seed", c.seed, "Random seed");
    cmd->add_option("--samples-per-matvec", c.samples_per_matvec, "Sampling budget t per approximate product");
    cmd->add_option("--repetitions", c.repetitions, "Boosting repetitions r");
    cmd->add_option("--boost-constant", c.boost_constant, "c in r = ceil(c log(1/delta))");
    cmd->add_flag("--auto-scale", c.auto_scale, "Rescale the matrix by its estimated spectral norm");
    cmd->add_option("--workers", c.workers, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--output,-o", c.output, "Output JSON path")->required();
    cmd->add_option("--manifest", c.manifest, "Manifest path (default <output>.manifest.json)");
}

struct Loaded {
    Matrix matrix;
    GraphH graph;
    bool is_graph = false;
    double scale = 1.0;
    double norm_estimate = 0.0;
    std::size_t n = 0;
};

Loaded load_input(const Common& c) {
    Loaded l;
    std::string kind = c.input_kind;
    if (kind == "auto") kind = looks_like_graph(read_text(c.input)) ? "graph" : "matrix";
    if (kind == "graph") {
        l.is_graph = true;
        check(kpm_graph_read(c.input.c_str(), l.graph.out()));
        check(kpm_graph_info(l.graph.get(), &l.n, nullptr));
        if (c.method != "graph-amv") check(kpm_graph_normalized_matrix(l.graph.get(), l.matrix.out()));
        return l;
    }
    if (c.method == "graph-amv") config_error("method graph-amv needs a graph edge-list input, not a matrix file");
    check(kpm_matrix_read(c.input.c_str(), l.matrix.out()));
    check(kpm_matrix_dimension(l.matrix.get(), &l.n));
    check(kpm_matrix_norm_estimate(l.matrix.get(), 200, c.seed, &l.norm_estimate));
    if (c.auto_scale) {
        l.scale = kpm_norm_scale_factor(l.norm_estimate, 0.05);
        check(kpm_matrix_scale(l.matrix.get(), l.scale));
    } else if (l.norm_estimate > 1.0 + 1e-9) {
        config_error("estimated spectral norm " + std::to_string(l.norm_estimate) +
                     " exceeds 1; rescale the input or pass --auto-scale");
    }
    return l;
}

int resolve_degree(const Common& c) {
    if (c.degree) return *c.degree;
    if (c.eps) {
        int n = 0;
        check(kpm_degree_for_accuracy(*c.eps, &n));
        return n;
    }
    return 40;
}

int resolve_ell(const Common& c, int degree, std::size_t n) {
    if (c.ell == "auto") {
        int ell = 0;
        check(kpm_repetitions_for(degree, c.delta, n, 16.0, &ell));
        return ell;
    }
    try {
        std::size_t used = 0;
        int ell = std::stoi(c.ell, &used);
        if (used != c.ell.size() || ell < 1) throw std::invalid_argument("ell");
        return ell;
    } catch (const std::exception&) {
        config_error("--ell must be a positive integer or 'auto'");
    }
}

struct Estimated {
    Moments moments;
    json accounting;
};

Estimated compute_moments(const Common& c, Loaded& l, Manifest& manifest) {
    int degree = resolve_degree(c);
    Estimated e;
    json config{{"method", c.method}, {"degree", degree}, {"delta", c.delta}, {"seed", c.seed},
                {"workers", c.workers}, {"auto_scale", c.auto_scale}, {"input_kind", l.is_graph ? "graph" : "matrix"}};
    if (c.eps) config["eps"] = *c.eps;
    if (!l.is_graph) {
        config["norm_estimate"] = l.norm_estimate;
        config["scale"] = l.scale;
    }
    if (c.method == "exact") {
        check(kpm_moments_exact(l.matrix.get(), degree, c.workers, e.moments.out()));
        config["ell"] = nullptr;
    } else {
        kpm_moment_options o;
        kpm_moment_options_init(&o);
        o.degree = degree;
        o.ell = resolve_ell(c, degree, l.n);
        o.seed = c.seed;
        o.workers = c.workers;
        o.delta = c.delta;
        o.boost_constant = c.boost_constant;
        config["ell"] = o.ell;
        config["ell_source"] = c.ell == "auto" ? "formula" : "flag";
        if (c.method == "hutchinson") {
            check(kpm_moments_hutchinson(l.matrix.get(), &o, e.moments.out()));
        } else {
            if (c.eps_mv) o.eps_mv = *c.eps_mv;
            if (c.samples_per_matvec) o.samples_per_matvec = *c.samples_per_matvec;
            if (c.repetitions) o.repetitions = *c.repetitions;
            kpm_oracle_stats stats{};
            check(kpm_moments_graph_amv(l.graph.get(), &o, e.moments.out(), &stats));
            config["eps_mv"] = stats.eps_mv;
            config["samples_per_matvec"] = stats.samples_per_matvec;
            config["repetitions"] = stats.repetitions;
            config["boost_constant"] = c.boost_constant;
            e.accounting["sampled_products"] = stats.sampled_products;
            e.accounting["sample_budget"] = stats.sampled_products * stats.samples_per_matvec;
            e.accounting["entries_touched"] = stats.entries_touched;
            e.accounting["flagged_calls"] = stats.flagged_calls;
        }
    }
    std::uint64_t calls = 0;
    check(kpm_moments_oracle_calls(e.moments.get(), &calls));
    e.accounting["oracle_calls"] = calls;
    manifest["config"] = config;
    manifest["seeds"] = json::array({c.seed});
    manifest["inputs"] = json{{"input", c.input}};
    manifest["warnings"] = json::parse(take_string([&] {
        char* w = nullptr;
        check(kpm_moments_warnings(e.moments.get(), &w));
        return w;
    }()));
    return e;
}

void cmd_estimate(Common& c) {
    Manifest manifest("estimate");
    Loaded l = load_input(c);
    Estimated e = compute_moments(c, l, manifest);
    Density q;
    if (c.method == "exact") {
        check(kpm_density_idealized(e.moments.get(), q.out()));
    } else {
        check(kpm_density_full(e.moments.get(), q.out()));
    }
    char* text = nullptr;
    check(kpm_density_to_json(q.get(), &text));
    write_text(c.output, take_string(text));
    json outputs{{"density", c.output}};
    if (!c.plot_csv.empty()) {
        char* csv = nullptr;
        check(kpm_density_plot_csv(q.get(), c.grid_points, &csv));
        write_text(c.plot_csv, take_string(csv));
        outputs["plot_csv"] = c.plot_csv;
    }
    if (!c.moments_output.empty()) {
        char* m = nullptr;
        check(kpm_moments_to_json(e.moments.get(), &m));
        write_text(c.moments_output, take_string(m));
        outputs["moments"] = c.moments_output;
    }
    manifest["outputs"] = outputs;
    manifest["accounting"] = e.accounting;
    manifest.write(c.manifest, c.output);
}

void cmd_moments(Common& c) {
    Manifest manifest("moments");
    Loaded l = load_input(c);
    Estimated e = compute_moments(c, l, manifest);
    char* m = nullptr;
    check(kpm_moments_to_json(e.moments.get(), &m));
    write_text(c.output, take_string(m));
    manifest["outputs"] = json{{"moments", c.output}};
    manifest["accounting"] = e.accounting;
    manifest.write(c.manifest, c.output);
}

struct EvalArgs {
    std::string density;
    std::string truth;
    double eps = 0.01;
    std::string format = "json";
    std::string output;
    std::string manifest;
};

void cmd_eval(const EvalArgs& a) {
    Manifest manifest("eval");
    Density q;
    check(kpm_density_from_json(read_text(a.density).c_str(), q.out()));
    Spectrum truth;
    check(kpm_spectrum_read(a.truth.c_str(), truth.out()));
    const double* values = nullptr;
    std::size_t n = 0;
    check(kpm_spectrum_values(truth.get(), &values, &n));
    double w1_density = 0.0;
    check(kpm_w1_density(q.get(), truth.get(), &w1_density));
    Spectrum discrete;
    char* diag = nullptr;
    check(kpm_discretize_greedy(q.get(), n, a.eps, discrete.out(), &diag));
    auto diagnostics = json::parse(take_string(diag));
    double w1_discrete = 0.0;
    check(kpm_w1_discrete(discrete.get(), truth.get(), &w1_discrete));

    json report{{"n", n}, {"grid_eps", a.eps}, {"w1_density", w1_density}, {"w1_discrete", w1_discrete},
                {"diagnostics", diagnostics}};
    std::string text;
    if (a.format == "csv") {
        std::ostringstream out;
        out.precision(12);
        out << "n,grid_eps,w1_density,w1_discrete\n" << n << ',' << a.eps << ',' << w1_density << ',' << w1_discrete;
        text = out.str();
    } else {
        text = report.dump(2);
    }
    if (a.output.empty()) {
        std::cout << text << '\n';
    } else {
        write_text(a.output, text);
    }
    manifest["config"] = json{{"grid_eps", a.eps}, {"format", a.format}};
    manifest["inputs"] = json{{"density", a.density}, {"truth", a.truth}};
    manifest["outputs"] = json{{"report", a.output.empty() ? "stdout" : a.output}};
    manifest["result"] = report;
    manifest.write(a.manifest, a.output);
}

struct DiscretizeArgs {
    std::string density;
    std::size_t count = 0;
    std::string method = "greedy";
    double eps = 0.01;
    std::string output;
    std::string manifest;
};

void cmd_discretize(const DiscretizeArgs& a) {
    Manifest manifest("discretize");
    Density q;
    check(kpm_density_from_json(read_text(a.density).c_str(), q.out()));
    Spectrum s;
    json diagnostics = json::array();
    if (a.method == "greedy") {
        char* diag = nullptr;
        check(kpm_discretize_greedy(q.get(), a.count, a.eps, s.out(), &diag));
        diagnostics = json::parse(take_string(diag));
    } else {
        check(kpm_discretize_optimal(q.get(), a.count, s.out()));
    }
    check(kpm_spectrum_write_text(s.get(), a.output.c_str()));
    for (const auto& d : diagnostics) std::cerr << "note: " << d.get<std::string>() << '\n';
    json config{{"method", a.method}, {"count", a.count}};
    if (a.method == "greedy") config["grid_eps"] = a.eps;
    manifest["config"] = config;
    manifest["inputs"] = json{{"density", a.density}};
    manifest["outputs"] = json{{"spectrum", a.output}};
    manifest["diagnostics"] = diagnostics;
    manifest.write(a.manifest, a.output);
}

struct GraphGenArgs {
    std::string kind;
    std::size_t size = 0;
    std::string output;
    std::string truth;
    std::string manifest;
};

void cmd_graph_gen(const GraphGenArgs& a) {
    Manifest manifest("graph-gen");
    GraphH g;
    check(kpm_graph_generate(a.kind.c_str(), a.size, g.out()));
    check(kpm_graph_write(g.get(), a.output.c_str()));
    std::size_t n = 0;
    std::size_t nnz = 0;
    check(kpm_graph_info(g.get(), &n, &nnz));
    json outputs{{"graph", a.output}};
    if (!a.truth.empty()) {
        Spectrum s;
        check(kpm_graph_truth(g.get(), s.out()));
        check(kpm_spectrum_write_text(s.get(), a.truth.c_str()));
        outputs["truth"] = a.truth;
    }
    manifest["config"] = json{{"kind", a.kind}, {"size", a.size}};
    manifest["outputs"] = outputs;
    manifest["graph"] = json{{"n", n}, {"edges", nnz / 2}, {"nnz", nnz}};
    manifest.write(a.manifest, a.output);
}

struct Table1Args {
    std::uint64_t seed = 1;
    int seeds = 5;
    int ell = 2;
    int workers = 1;
    double grid_eps = 0.01;
    std::optional<std::uint64_t> samples_per_matvec;
    std::string output;
    std::string manifest;
};

void cmd_table1(const Table1Args& a) {
    Manifest manifest("experiment-table1");
    kpm_table1_options o;
    kpm_table1_options_init(&o);
    o.seed = a.seed;
    o.seeds = a.seeds;
    o.ell = a.ell;
    o.workers = a.workers;
    o.grid_eps = a.grid_eps;
    if (a.samples_per_matvec) o.samples_per_matvec = *a.samples_per_matvec;
    char* text = nullptr;
    check(kpm_experiment_table1(&o, a.output.c_str(), &text));
    json report = json::parse(take_string(text));

    std::printf("%-22s %10s %11s %22s %14s %12s\n", "graph", "idealized", "hutchinson", "approximate hutchinson",
                "touched/nnz", "touched/n^2");
    json accounting = json::array();
    for (const auto& r : report["rows"]) {
        std::printf("%-22s %9.2f%% %10.2f%% %21.2f%% %13.1f%% %11.2f%%\n", r["graph"].get<std::string>().c_str(),
                    100 * r["idealized_w1"].get<double>(), 100 * r["hutchinson"]["median_w1"].get<double>(),
                    100 * r["approximate_hutchinson"]["median_w1"].get<double>(),
                    100 * r["touched_fraction_nnz"].get<double>(), 100 * r["touched_fraction_n2"].get<double>());
        accounting.push_back({{"graph", r["graph"]},
                              {"hutchinson_oracle_calls", r["hutchinson"]["oracle_calls"]},
                              {"approximate_oracle_calls", r["approximate_hutchinson"]["oracle_calls"]},
                              {"samples_per_matvec", r["samples_per_matvec"]},
                              {"sampled_products", r["sampled_products"]},
                              {"entries_touched", r["entries_touched"]}});
    }
    manifest["config"] = report["options"];
    manifest["outputs"] = json{{"directory", a.output}};
    manifest["accounting"] = accounting;
    manifest.write(a.manifest.empty() ? a.output + "/manifest.json" : a.manifest, a.output);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernel polynomial spectral density estimation"};
    app.require_subcommand(1);

    Common est;
    auto* estimate = app.add_subcommand("estimate", "Estimate a spectral density and write it as JSON");
    add_estimation_flags(estimate, est);
    estimate->add_option("--plot-csv", est.plot_csv, "Also write (x, q(x)) plot data");
    estimate->add_option("--grid-points", est.grid_points, "Plot grid size")->check(CLI::PositiveNumber);
    estimate->add_option("--moments-output", est.moments_output, "Also write the moment vector");

    Common mom;
    auto* moments = app.add_subcommand("moments", "Estimate Chebyshev moments only");
    add_estimation_flags(moments, mom);

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "W1 error of a density against a true spectrum");
    eval->add_option("density", ev.density, "Density JSON")->required();
    eval->add_option("truth", ev.truth, "True spectrum (text or JSON)")->required();
    eval->add_option("--eps", ev.eps, "Grid spacing of the greedy discretization");
    eval->add_option("--format", ev.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    eval->add_option("--output,-o", ev.output, "Report path (default stdout)");
    eval->add_option("--manifest", ev.manifest, "Manifest path");

    DiscretizeArgs di;
    auto* discretize = app.add_subcommand("discretize", "Turn a density into n approximate eigenvalues");
    discretize->add_option("density", di.density, "Density JSON")->required();
    discretize->add_option("--count,-n", di.count, "Number of eigenvalues")->required()->check(CLI::PositiveNumber);
    discretize->add_option("--method", di.method, "greedy or optimal")->check(CLI::IsMember({"greedy", "optimal"}));
    discretize->add_option("--eps", di.eps, "Grid spacing for the greedy method");
    discretize->add_option("--output,-o", di.output, "Spectrum text path")->required();
    discretize->add_option("--manifest", di.manifest, "Manifest path");

    GraphGenArgs gg;
    auto* graph_gen = app.add_subcommand("graph-gen", "Write a synthetic graph as an edge list");
    graph_gen->add_option("--kind", gg.kind, "clique-plus-matching, hairy-clique, hypercube, star or path")->required();
    graph_gen->add_option("--size", gg.size, "Vertex count (bit count for hypercube)")->required();
    graph_gen->add_option("--output,-o", gg.output, "Edge-list path")->required();
    graph_gen->add_option("--truth", gg.truth, "Also write the closed-form spectrum");
    graph_gen->add_option("--manifest", gg.manifest, "Manifest path");

    Table1Args tb;
    auto* table1 = app.add_subcommand("experiment-table1", "Reproduce the three-graph comparison table");
    table1->add_option("--seed", tb.seed, "Base seed");
    table1->add_option("--seeds", tb.seeds, "Seeds per randomized method")->check(CLI::PositiveNumber);
    table1->add_option("--ell", tb.ell, "Probe vectors")->check(CLI::PositiveNumber);
    table1->add_option("--workers", tb.workers, "Worker threads")->check(CLI::PositiveNumber);
    table1->add_option("--eps", tb.grid_eps, "Grid spacing of the greedy discretization");
    table1->add_option("--samples-per-matvec", tb.samples_per_matvec, "Fixed t instead of the doubling search");
    table1->add_option("--output,-o", tb.output, "Output directory")->required();
    table1->add_option("--manifest", tb.manifest, "Manifest path (default <output>/manifest.json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 3;
    }

    try {
        if (*estimate) cmd_estimate(est);
        else if (*moments) cmd_moments(mom);
        else if (*eval) cmd_eval(ev);
        else if (*discretize) cmd_discretize(di);
        else if (*graph_gen) cmd_graph_gen(gg);
        else if (*table1) cmd_table1(tb);
    } catch (const Failure& f) {
        std::cerr << "error: " << f.message << '\n';
        return exit_code(f.status);
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
