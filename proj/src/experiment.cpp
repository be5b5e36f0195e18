#include "kpm/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <sstream>

#include "kpm/density.hpp"
#include "kpm/detail/parallel.hpp"
#include "kpm/error.hpp"
#include "kpm/graph.hpp"
#include "kpm/jackson.hpp"
#include "kpm/moments.hpp"
#include "kpm/random.hpp"
#include "kpm/spectrum.hpp"

namespace kpm {

namespace {

using Clock = std::chrono::steady_clock;

constexpr int kHistogramBins = 11;
constexpr int kPlotPoints = 1000;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::uint64_t seed_for(std::uint64_t base, int index) {
    auto engine = keyed_engine({0x7461626c65ULL, base, static_cast<std::uint64_t>(index)});
    return engine();
}

struct Scored {
    std::vector<double> w1;
    std::vector<double> continuous_w1;
    std::vector<DensityEstimate> densities;
    std::vector<MomentVector> moments;
    std::uint64_t oracle_calls = 0;
};

struct Context {
    std::string name;
    std::shared_ptr<const Graph> graph;
    DiscreteSpectrum truth;
    int degree;
};

class Runner {
public:
    Runner(const Table1Options& options, Context ctx)
        : options_(options), ctx_(std::move(ctx)), coeffs_(jackson_coefficients(ctx_.degree)) {
        auto matrix = std::make_shared<const SymmetricMatrix>(normalized_adjacency(*ctx_.graph));
        exact_ = std::make_unique<ExactOracle>(matrix);
        for (int s = 0; s < options_.seeds; ++s) seeds_.push_back(seed_for(options_.seed, s));
    }

    double score(const DensityEstimate& q) const {
        auto d = discretize_greedy(q, ctx_.truth.size(), options_.grid_eps);
        return w1_discrete(d.spectrum, ctx_.truth);
    }

    DensityEstimate idealized() const {
        auto m = moments_from_spectrum(ctx_.truth.values(), ctx_.degree);
        return idealized_kpm(m, *coeffs_);
    }

    MomentVector exact_moments_vector() const { return moments_from_spectrum(ctx_.truth.values(), ctx_.degree); }

    Scored hutchinson() const {
        return run([&](std::size_t s) {
            return hutchinson_moments(*exact_, ctx_.degree, options_.ell, seeds_[s]);
        });
    }

    Scored approximate(std::uint64_t t, std::uint64_t& products, std::uint64_t& touched) const {
        std::vector<std::uint64_t> p(seeds_.size(), 0);
        std::vector<std::uint64_t> e(seeds_.size(), 0);
        double nominal = std::sqrt(48.0 * static_cast<double>(ctx_.graph->vertex_count()) / static_cast<double>(t));
        auto out = run([&](std::size_t s) {
            BoostedOracleOptions o;
            o.eps_mv = nominal;
            o.samples = t;
            o.repetitions = 1;
            o.seed = seeds_[s];
            GraphAmvOracle oracle(ctx_.graph, o);
            auto m = approx_hutchinson_moments(oracle, ctx_.degree, options_.ell, seeds_[s]);
            p[s] = oracle.sampled_products();
            e[s] = oracle.entries_touched();
            return m;
        });
        products = 0;
        touched = 0;
        for (std::size_t s = 0; s < seeds_.size(); ++s) {
            products += p[s];
            touched += e[s];
        }
        return out;
    }

    [[nodiscard]] const JacksonCoefficients& coefficients() const { return *coeffs_; }

private:
    template <class Estimate>
    Scored run(Estimate&& estimate) const {
        std::size_t count = seeds_.size();
        std::vector<std::optional<MomentVector>> moments(count);
        std::vector<std::optional<DensityEstimate>> densities(count);
        std::vector<double> w1(count);
        std::vector<double> cw1(count);
        detail::parallel_for(count, options_.workers, [&](std::size_t s) {
            moments[s].emplace(estimate(s));
            densities[s].emplace(full_kpm(*moments[s], *coeffs_));
            w1[s] = score(*densities[s]);
            cw1[s] = w1_density_vs_spectrum(*densities[s], ctx_.truth);
        });
        Scored out;
        out.w1 = std::move(w1);
        out.continuous_w1 = std::move(cw1);
        for (std::size_t s = 0; s < count; ++s) {
            out.oracle_calls += moments[s]->oracle_calls;
            out.moments.push_back(std::move(*moments[s]));
            out.densities.push_back(std::move(*densities[s]));
        }
        return out;
    }

    const Table1Options& options_;
    Context ctx_;
    std::shared_ptr<const JacksonCoefficients> coeffs_;
    std::unique_ptr<ExactOracle> exact_;
    std::vector<std::uint64_t> seeds_;
};

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
}

void write_plot_data(const std::filesystem::path& dir, const Context& ctx, const JacksonCoefficients& coeffs,
                     const MomentVector& exact_m, const DensityEstimate& ideal, const Scored& hutch,
                     const Scored& approx, double grid_eps) {
    std::ostringstream dens;
    dens.precision(10);
    dens << "x,idealized,hutchinson,approximate_hutchinson\n";
    for (double x : plot_grid(kPlotPoints)) {
        dens << x << ',' << ideal.evaluate(x) << ',' << hutch.densities.front().evaluate(x) << ','
             << approx.densities.front().evaluate(x) << '\n';
    }
    write_file(dir / ("density_" + ctx.name + ".csv"), dens.str());

    std::size_t n = ctx.truth.size();
    auto h_truth = histogram(ctx.truth, kHistogramBins);
    auto h_ideal = histogram(discretize_greedy(ideal, n, grid_eps).spectrum, kHistogramBins);
    auto h_hutch = histogram(discretize_greedy(hutch.densities.front(), n, grid_eps).spectrum, kHistogramBins);
    auto h_approx = histogram(discretize_greedy(approx.densities.front(), n, grid_eps).spectrum, kHistogramBins);
    std::ostringstream hist;
    hist.precision(10);
    hist << "bin_lo,bin_hi,truth,idealized,hutchinson,approximate_hutchinson\n";
    for (int b = 0; b < kHistogramBins; ++b) {
        double lo = -1.0 + 2.0 * b / kHistogramBins;
        double hi = -1.0 + 2.0 * (b + 1) / kHistogramBins;
        hist << lo << ',' << hi << ',' << h_truth[b] << ',' << h_ideal[b] << ',' << h_hutch[b] << ',' << h_approx[b]
             << '\n';
    }
    write_file(dir / ("histogram_" + ctx.name + ".csv"), hist.str());

    const auto& mh = hutch.moments.front();
    const auto& ma = approx.moments.front();
    std::ostringstream mom;
    mom.precision(12);
    mom << "k,jackson_ratio,exact,hutchinson,approximate_hutchinson,damped_exact,damped_hutchinson,"
           "damped_approximate_hutchinson\n";
    for (int k = 0; k <= ctx.degree; ++k) {
        double r = coeffs.ratio(k);
        mom << k << ',' << r << ',' << exact_m.at(k) << ',' << mh.at(k) << ',' << ma.at(k) << ',' << r * exact_m.at(k)
            << ',' << r * mh.at(k) << ',' << r * ma.at(k) << '\n';
    }
    write_file(dir / ("moments_" + ctx.name + ".csv"), mom.str());
}

Table1Row run_graph(const Table1Options& options, Context ctx) {
    auto start = Clock::now();
    Runner runner(options, ctx);
    Table1Row row;
    row.graph = ctx.name;
    row.n = ctx.graph->vertex_count();
    row.nnz = ctx.graph->nonzeros();
    row.degree = ctx.degree;

    auto ideal = runner.idealized();
    row.idealized = runner.score(ideal);
    row.idealized_continuous = w1_density_vs_spectrum(ideal, ctx.truth);

    auto hutch = runner.hutchinson();
    row.hutchinson.w1 = hutch.w1;
    row.hutchinson.continuous_w1 = hutch.continuous_w1;
    row.hutchinson.median = median(hutch.w1);
    row.hutchinson.oracle_calls = hutch.oracle_calls;

    std::uint64_t products = 0;
    std::uint64_t touched = 0;
    std::optional<Scored> approx;
    if (options.samples_per_matvec) {
        row.samples_per_matvec = *options.samples_per_matvec;
        approx = runner.approximate(row.samples_per_matvec, products, touched);
        row.tuning.push_back({row.samples_per_matvec, median(approx->w1)});
    } else {
        // Double t from n until the approximate method is on par with exact products, capped so the
        // expected work per product stays at or below nnz, then bisect between the last two budgets.
        double target = options.tuning_factor * row.hutchinson.median + options.tuning_margin;
        std::uint64_t cap = row.nnz;
        std::uint64_t t = std::min<std::uint64_t>(row.n, cap);
        std::uint64_t failing = 0;
        auto attempt = [&](std::uint64_t samples) {
            std::uint64_t p = 0;
            std::uint64_t e = 0;
            auto scored = runner.approximate(samples, p, e);
            double med = median(scored.w1);
            row.tuning.push_back({samples, med});
            bool ok = med <= target;
            if (ok || !approx) {
                approx = std::move(scored);
                products = p;
                touched = e;
                row.samples_per_matvec = samples;
            }
            return ok;
        };
        bool passed = false;
        while (true) {
            approx.reset();
            passed = attempt(t);
            if (passed || t >= cap) break;
            failing = t;
            t = std::min<std::uint64_t>(2 * t, cap);
        }
        if (passed && failing > 0) {
            std::uint64_t lo = failing;
            std::uint64_t hi = t;
            for (int step = 0; step < options.refinement_steps && hi - lo > 1; ++step) {
                std::uint64_t mid = lo + (hi - lo) / 2;
                if (attempt(mid)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
        }
    }
    row.approximate.w1 = approx->w1;
    row.approximate.continuous_w1 = approx->continuous_w1;
    row.approximate.median = median(approx->w1);
    row.approximate.oracle_calls = approx->oracle_calls;
    row.sampled_products = products;
    row.entries_touched = touched;
    double mean_touched = products ? static_cast<double>(touched) / static_cast<double>(products) : 0.0;
    row.touched_fraction_nnz = mean_touched / static_cast<double>(row.nnz);
    row.touched_fraction_n2 = mean_touched / (static_cast<double>(row.n) * static_cast<double>(row.n));

    if (options.output_dir) {
        write_plot_data(*options.output_dir, ctx, runner.coefficients(), runner.exact_moments_vector(), ideal, hutch,
                        *approx, options.grid_eps);
    }
    row.seconds = seconds_since(start);
    return row;
}

}  // namespace

Table1Report run_table1(const Table1Options& options) {
    if (options.seeds < 1) throw ConfigError("at least one seed is required");
    if (options.ell < 1) throw ConfigError("ell must be at least 1");
    if (!(options.grid_eps > 0.0 && options.grid_eps <= 1.0)) throw ConfigError("grid spacing must lie in (0, 1]");
    if (options.samples_per_matvec && *options.samples_per_matvec == 0)
        throw ConfigError("samples per matvec must be positive");
    if (options.output_dir) std::filesystem::create_directories(*options.output_dir);

    auto start = Clock::now();
    Table1Report report;
    report.options = options;

    auto add = [&](std::string name, GeneratedGraph gen, int degree) {
        Context ctx{std::move(name), std::make_shared<const Graph>(std::move(gen.graph)), std::move(*gen.truth),
                    degree};
        report.rows.push_back(run_graph(options, std::move(ctx)));
    };
    add("clique-plus-matching", clique_plus_matching(options.clique_graph_size), options.clique_degree);
    add("hairy-clique", hairy_clique(options.clique_graph_size), options.clique_degree);
    add("hypercube", hypercube(options.hypercube_bits), options.hypercube_degree);
    report.seconds = seconds_since(start);

    if (options.output_dir) {
        write_file(*options.output_dir / "table1.json", table1_to_json(report));
        write_file(*options.output_dir / "table1.csv", table1_to_csv(report));
    }
    return report;
}

std::string table1_to_json(const Table1Report& report) {
    using nlohmann::json;
    json rows = json::array();
    for (const auto& r : report.rows) {
        json tuning = json::array();
        for (const auto& step : r.tuning) tuning.push_back({{"samples_per_matvec", step.samples}, {"median_w1", step.median}});
        auto method = [](const MethodScore& m) {
            return json{{"w1_per_seed", m.w1},
                        {"continuous_w1_per_seed", m.continuous_w1},
                        {"median_w1", m.median},
                        {"oracle_calls", m.oracle_calls}};
        };
        rows.push_back({{"graph", r.graph},
                        {"n", r.n},
                        {"nnz", r.nnz},
                        {"N", r.degree},
                        {"idealized_w1", r.idealized},
                        {"idealized_continuous_w1", r.idealized_continuous},
                        {"hutchinson", method(r.hutchinson)},
                        {"approximate_hutchinson", method(r.approximate)},
                        {"samples_per_matvec", r.samples_per_matvec},
                        {"tuning", tuning},
                        {"sampled_products", r.sampled_products},
                        {"entries_touched", r.entries_touched},
                        {"touched_fraction_nnz", r.touched_fraction_nnz},
                        {"touched_fraction_n2", r.touched_fraction_n2},
                        {"seconds", r.seconds}});
    }
    const auto& o = report.options;
    json options{{"seed", o.seed},
                 {"seeds", o.seeds},
                 {"ell", o.ell},
                 {"workers", o.workers},
                 {"grid_eps", o.grid_eps},
                 {"clique_graph_size", o.clique_graph_size},
                 {"hypercube_bits", o.hypercube_bits},
                 {"clique_degree", o.clique_degree},
                 {"hypercube_degree", o.hypercube_degree},
                 {"refinement_steps", o.refinement_steps}};
    if (o.samples_per_matvec) options["samples_per_matvec"] = *o.samples_per_matvec;
    return json{{"options", options}, {"rows", rows}, {"seconds", report.seconds}}.dump(2);
}

std::string table1_to_csv(const Table1Report& report) {
    std::ostringstream out;
    out.precision(8);
    out << "graph,n,nnz,N,idealized,hutchinson,approximate_hutchinson,samples_per_matvec,touched_fraction_nnz,"
           "touched_fraction_n2\n";
    for (const auto& r : report.rows) {
        out << r.graph << ',' << r.n << ',' << r.nnz << ',' << r.degree << ',' << r.idealized << ','
            << r.hutchinson.median << ',' << r.approximate.median << ',' << r.samples_per_matvec << ','
            << r.touched_fraction_nnz << ',' << r.touched_fraction_n2 << '\n';
    }
    return out.str();
}

}  // namespace kpm
