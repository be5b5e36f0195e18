#include "kpm/kpm_api.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <json.hpp>
#include <memory>
#include <optional>
#include <string>

#include "kpm/density.hpp"
#include "kpm/error.hpp"
#include "kpm/experiment.hpp"
#include "kpm/graph.hpp"
#include "kpm/jackson.hpp"
#include "kpm/moments.hpp"
#include "kpm/oracle.hpp"
#include "kpm/spectrum.hpp"

struct kpm_matrix {
    std::shared_ptr<const kpm::SymmetricMatrix> value;
};

struct kpm_graph {
    std::shared_ptr<const kpm::Graph> value;
    std::optional<kpm::DiscreteSpectrum> truth;
};

struct kpm_moments {
    kpm::MomentVector value;
};

struct kpm_density {
    kpm::DensityEstimate value;
};

struct kpm_spectrum {
    kpm::DiscreteSpectrum value;
};

namespace {

thread_local std::string last_error;

kpm_status fail(kpm_status code, const char* message) {
    last_error = message;
    return code;
}

template <class Fn>
kpm_status guard(Fn&& fn) {
    try {
        fn();
        last_error.clear();
        return KPM_OK;
    } catch (const kpm::InputError& e) {
        return fail(KPM_ERR_INPUT, e.what());
    } catch (const kpm::ConfigError& e) {
        return fail(KPM_ERR_CONFIG, e.what());
    } catch (const kpm::DomainError& e) {
        return fail(KPM_ERR_DOMAIN, e.what());
    } catch (const kpm::ConvergenceError& e) {
        return fail(KPM_ERR_CONVERGENCE, e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(KPM_ERR_INPUT, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(KPM_ERR_INPUT, e.what());
    } catch (const std::exception& e) {
        return fail(KPM_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(KPM_ERR_INTERNAL, "unknown error");
    }
}

void require(const void* p, const char* what) {
    if (p == nullptr) throw kpm::ConfigError(std::string("null argument: ") + what);
}

char* copy_string(const std::string& s) {
    auto* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

kpm::GeneratedGraph generate(const std::string& kind, std::size_t size) {
    switch (kpm::graph_kind_from_string(kind)) {
        case kpm::GraphKind::clique_plus_matching: return kpm::clique_plus_matching(size);
        case kpm::GraphKind::hairy_clique: return kpm::hairy_clique(size);
        case kpm::GraphKind::hypercube: return kpm::hypercube(static_cast<int>(size));
        case kpm::GraphKind::star: return kpm::star(size);
        case kpm::GraphKind::path: return kpm::path(size);
        case kpm::GraphKind::from_file: break;
    }
    throw kpm::ConfigError("graph kind '" + kind + "' cannot be generated; read it from a file instead");
}

}  // namespace

extern "C" {

const char* kpm_last_error(void) { return last_error.c_str(); }

const char* kpm_version(void) { return "1.0.0"; }

void kpm_string_free(char* s) { std::free(s); }

kpm_status kpm_matrix_read(const char* path, kpm_matrix** out) {
    return guard([&] {
        require(path, "path");
        require(out, "out");
        *out = new kpm_matrix{std::make_shared<const kpm::SymmetricMatrix>(kpm::read_matrix(path))};
    });
}

kpm_status kpm_matrix_from_dense(size_t n, const double* row_major, kpm_matrix** out) {
    return guard([&] {
        require(row_major, "row_major");
        require(out, "out");
        auto m = kpm::SymmetricMatrix::dense(n, std::span<const double>(row_major, n * n));
        *out = new kpm_matrix{std::make_shared<const kpm::SymmetricMatrix>(std::move(m))};
    });
}

void kpm_matrix_free(kpm_matrix* m) { delete m; }

kpm_status kpm_matrix_dimension(const kpm_matrix* m, size_t* n) {
    return guard([&] {
        require(m, "matrix");
        require(n, "n");
        *n = m->value->dimension();
    });
}

kpm_status kpm_matrix_nonzeros(const kpm_matrix* m, size_t* nnz) {
    return guard([&] {
        require(m, "matrix");
        require(nnz, "nnz");
        *nnz = m->value->nonzeros();
    });
}

kpm_status kpm_matrix_norm_estimate(const kpm_matrix* m, int iterations, uint64_t seed, double* nu) {
    return guard([&] {
        require(m, "matrix");
        require(nu, "nu");
        *nu = kpm::estimate_spectral_norm(*m->value, iterations, seed);
    });
}

double kpm_norm_scale_factor(double nu, double margin) { return kpm::norm_scale_factor(nu, margin); }

kpm_status kpm_matrix_scale(kpm_matrix* m, double factor) {
    return guard([&] {
        require(m, "matrix");
        m->value = std::make_shared<const kpm::SymmetricMatrix>(m->value->scaled(factor));
    });
}

kpm_status kpm_matrix_apply(const kpm_matrix* m, const double* y, double* z) {
    return guard([&] {
        require(m, "matrix");
        require(y, "y");
        require(z, "z");
        std::size_t n = m->value->dimension();
        m->value->apply(std::span<const double>(y, n), std::span<double>(z, n));
    });
}

kpm_status kpm_graph_generate(const char* kind, size_t size, kpm_graph** out) {
    return guard([&] {
        require(kind, "kind");
        require(out, "out");
        auto gen = generate(kind, size);
        *out = new kpm_graph{std::make_shared<const kpm::Graph>(std::move(gen.graph)), std::move(gen.truth)};
    });
}

kpm_status kpm_graph_read(const char* path, kpm_graph** out) {
    return guard([&] {
        require(path, "path");
        require(out, "out");
        *out = new kpm_graph{std::make_shared<const kpm::Graph>(kpm::read_graph(path)), std::nullopt};
    });
}

kpm_status kpm_graph_write(const kpm_graph* g, const char* path) {
    return guard([&] {
        require(g, "graph");
        require(path, "path");
        kpm::write_graph(*g->value, path);
    });
}

void kpm_graph_free(kpm_graph* g) { delete g; }

kpm_status kpm_graph_info(const kpm_graph* g, size_t* n, size_t* nnz) {
    return guard([&] {
        require(g, "graph");
        if (n) *n = g->value->vertex_count();
        if (nnz) *nnz = g->value->nonzeros();
    });
}

kpm_status kpm_graph_truth(const kpm_graph* g, kpm_spectrum** out) {
    return guard([&] {
        require(g, "graph");
        require(out, "out");
        if (!g->truth) throw kpm::ConfigError("no closed-form spectrum is known for this graph");
        *out = new kpm_spectrum{*g->truth};
    });
}

kpm_status kpm_graph_normalized_matrix(const kpm_graph* g, kpm_matrix** out) {
    return guard([&] {
        require(g, "graph");
        require(out, "out");
        *out = new kpm_matrix{std::make_shared<const kpm::SymmetricMatrix>(kpm::normalized_adjacency(*g->value))};
    });
}

void kpm_moment_options_init(kpm_moment_options* o) {
    if (o == nullptr) return;
    o->degree = 40;
    o->ell = 2;
    o->seed = 0;
    o->workers = 1;
    o->eps_mv = 0.0;
    o->delta = 0.1;
    o->boost_constant = 8.0;
    o->samples_per_matvec = 0;
    o->repetitions = 0;
}

kpm_status kpm_degree_for_accuracy(double eps, int* degree) {
    return guard([&] {
        require(degree, "degree");
        *degree = kpm::degree_for_accuracy(eps);
    });
}

kpm_status kpm_repetitions_for(int degree, double delta, size_t n, double constant_c, int* ell) {
    return guard([&] {
        require(ell, "ell");
        double nd = degree;
        *ell = kpm::repetitions_for(degree, delta, n, 1.0 / (nd * nd), constant_c);
    });
}

kpm_status kpm_moments_exact(const kpm_matrix* m, int degree, int workers, kpm_moments** out) {
    return guard([&] {
        require(m, "matrix");
        require(out, "out");
        kpm::ExactOracle oracle(m->value);
        *out = new kpm_moments{kpm::exact_moments(oracle, degree, workers)};
    });
}

kpm_status kpm_moments_from_spectrum(const kpm_spectrum* s, int degree, kpm_moments** out) {
    return guard([&] {
        require(s, "spectrum");
        require(out, "out");
        *out = new kpm_moments{kpm::moments_from_spectrum(s->value.values(), degree)};
    });
}

kpm_status kpm_moments_hutchinson(const kpm_matrix* m, const kpm_moment_options* o, kpm_moments** out) {
    return guard([&] {
        require(m, "matrix");
        require(o, "options");
        require(out, "out");
        kpm::ExactOracle oracle(m->value);
        *out = new kpm_moments{kpm::hutchinson_moments(oracle, o->degree, o->ell, o->seed, o->workers)};
    });
}

kpm_status kpm_moments_graph_amv(const kpm_graph* g, const kpm_moment_options* o, kpm_moments** out,
                                 kpm_oracle_stats* stats) {
    return guard([&] {
        require(g, "graph");
        require(o, "options");
        require(out, "out");
        if (o->degree < 1) throw kpm::ConfigError("degree must be positive");
        kpm::BoostedOracleOptions bo;
        double nd = o->degree;
        if (o->eps_mv > 0.0) {
            bo.eps_mv = o->eps_mv;
        } else if (o->samples_per_matvec > 0) {
            // Accuracy implied by the given budget through t = 48 n / eps_mv^2.
            bo.eps_mv = std::sqrt(48.0 * static_cast<double>(g->value->vertex_count()) /
                                  static_cast<double>(o->samples_per_matvec));
        } else {
            bo.eps_mv = 1.0 / (4.0 * nd * nd * nd * nd);
        }
        bo.delta = o->delta;
        bo.boost_constant = o->boost_constant;
        if (o->samples_per_matvec > 0) bo.samples = o->samples_per_matvec;
        if (o->repetitions > 0) bo.repetitions = o->repetitions;
        bo.seed = o->seed;
        kpm::GraphAmvOracle oracle(g->value, bo);
        auto moments = kpm::approx_hutchinson_moments(oracle, o->degree, o->ell, o->seed, o->workers);
        if (stats) {
            stats->oracle_calls = oracle.calls();
            stats->sampled_products = oracle.sampled_products();
            stats->entries_touched = oracle.entries_touched();
            stats->flagged_calls = oracle.flagged_calls();
            stats->samples_per_matvec = oracle.samples_per_product();
            stats->repetitions = oracle.repetitions();
            stats->eps_mv = bo.eps_mv;
        }
        *out = new kpm_moments{std::move(moments)};
    });
}

void kpm_moments_free(kpm_moments* m) { delete m; }

kpm_status kpm_moments_degree(const kpm_moments* m, int* degree) {
    return guard([&] {
        require(m, "moments");
        require(degree, "degree");
        *degree = m->value.degree();
    });
}

kpm_status kpm_moments_value(const kpm_moments* m, int k, double* value) {
    return guard([&] {
        require(m, "moments");
        require(value, "value");
        if (k < 0 || k > m->value.degree()) throw kpm::ConfigError("moment index out of range");
        *value = m->value.at(k);
    });
}

kpm_status kpm_moments_oracle_calls(const kpm_moments* m, uint64_t* calls) {
    return guard([&] {
        require(m, "moments");
        require(calls, "calls");
        *calls = m->value.oracle_calls;
    });
}

kpm_status kpm_moments_warnings(const kpm_moments* m, char** json) {
    return guard([&] {
        require(m, "moments");
        require(json, "json");
        *json = copy_string(nlohmann::json(m->value.warnings).dump());
    });
}

kpm_status kpm_moments_to_json(const kpm_moments* m, char** json) {
    return guard([&] {
        require(m, "moments");
        require(json, "json");
        *json = copy_string(kpm::moments_to_json(m->value));
    });
}

kpm_status kpm_moments_from_json(const char* json, kpm_moments** out) {
    return guard([&] {
        require(json, "json");
        require(out, "out");
        *out = new kpm_moments{kpm::moments_from_json(json)};
    });
}

kpm_status kpm_density_idealized(const kpm_moments* m, kpm_density** out) {
    return guard([&] {
        require(m, "moments");
        require(out, "out");
        auto coeffs = kpm::jackson_coefficients(m->value.degree());
        *out = new kpm_density{kpm::idealized_kpm(m->value, *coeffs)};
    });
}

kpm_status kpm_density_full(const kpm_moments* m, kpm_density** out) {
    return guard([&] {
        require(m, "moments");
        require(out, "out");
        auto coeffs = kpm::jackson_coefficients(m->value.degree());
        *out = new kpm_density{kpm::full_kpm(m->value, *coeffs)};
    });
}

void kpm_density_free(kpm_density* q) { delete q; }

kpm_status kpm_density_degree(const kpm_density* q, int* degree) {
    return guard([&] {
        require(q, "density");
        require(degree, "degree");
        *degree = q->value.degree();
    });
}

kpm_status kpm_density_evaluate(const kpm_density* q, double x, double* value) {
    return guard([&] {
        require(q, "density");
        require(value, "value");
        *value = q->value.evaluate(x);
    });
}

kpm_status kpm_density_cdf(const kpm_density* q, double x, double* value) {
    return guard([&] {
        require(q, "density");
        require(value, "value");
        *value = q->value.cdf(x);
    });
}

kpm_status kpm_density_min_polynomial(const kpm_density* q, int points, double* value) {
    return guard([&] {
        require(q, "density");
        require(value, "value");
        *value = kpm::min_polynomial_on_grid(q->value, points);
    });
}

kpm_status kpm_density_reflect(const kpm_density* q, kpm_density** out) {
    return guard([&] {
        require(q, "density");
        require(out, "out");
        *out = new kpm_density{kpm::laplacian_reflect(q->value)};
    });
}

kpm_status kpm_density_plot_csv(const kpm_density* q, int points, char** csv) {
    return guard([&] {
        require(q, "density");
        require(csv, "csv");
        *csv = copy_string(kpm::density_plot_csv(q->value, points));
    });
}

kpm_status kpm_density_to_json(const kpm_density* q, char** json) {
    return guard([&] {
        require(q, "density");
        require(json, "json");
        *json = copy_string(kpm::density_to_json(q->value));
    });
}

kpm_status kpm_density_from_json(const char* json, kpm_density** out) {
    return guard([&] {
        require(json, "json");
        require(out, "out");
        *out = new kpm_density{kpm::density_from_json(json)};
    });
}

kpm_status kpm_spectrum_from_values(const double* values, size_t n, kpm_spectrum** out) {
    return guard([&] {
        require(values, "values");
        require(out, "out");
        *out = new kpm_spectrum{kpm::DiscreteSpectrum(std::vector<double>(values, values + n))};
    });
}

kpm_status kpm_spectrum_read(const char* path, kpm_spectrum** out) {
    return guard([&] {
        require(path, "path");
        require(out, "out");
        *out = new kpm_spectrum{kpm::read_spectrum(path)};
    });
}

kpm_status kpm_spectrum_write_text(const kpm_spectrum* s, const char* path) {
    return guard([&] {
        require(s, "spectrum");
        require(path, "path");
        kpm::write_spectrum_text(s->value, path);
    });
}

kpm_status kpm_spectrum_to_json(const kpm_spectrum* s, char** json) {
    return guard([&] {
        require(s, "spectrum");
        require(json, "json");
        *json = copy_string(kpm::spectrum_to_json(s->value));
    });
}

void kpm_spectrum_free(kpm_spectrum* s) { delete s; }

kpm_status kpm_spectrum_values(const kpm_spectrum* s, const double** values, size_t* n) {
    return guard([&] {
        require(s, "spectrum");
        require(values, "values");
        require(n, "n");
        *values = s->value.values().data();
        *n = s->value.size();
    });
}

kpm_status kpm_spectrum_dense(const kpm_matrix* m, kpm_spectrum** out) {
    return guard([&] {
        require(m, "matrix");
        require(out, "out");
        *out = new kpm_spectrum{kpm::DiscreteSpectrum(kpm::dense_eigenvalues(*m->value))};
    });
}

kpm_status kpm_spectrum_reflect(const kpm_spectrum* s, int remap, kpm_spectrum** out) {
    return guard([&] {
        require(s, "spectrum");
        require(out, "out");
        *out = new kpm_spectrum{kpm::laplacian_reflect(s->value, remap != 0)};
    });
}

kpm_status kpm_spectrum_histogram(const kpm_spectrum* s, int bins, double* masses) {
    return guard([&] {
        require(s, "spectrum");
        require(masses, "masses");
        auto h = kpm::histogram(s->value, bins);
        std::copy(h.begin(), h.end(), masses);
    });
}

kpm_status kpm_discretize_greedy(const kpm_density* q, size_t n, double eps, kpm_spectrum** out, char** diagnostics) {
    return guard([&] {
        require(q, "density");
        require(out, "out");
        auto result = kpm::discretize_greedy(q->value, n, eps);
        char* diag = diagnostics ? copy_string(nlohmann::json(result.diagnostics).dump()) : nullptr;
        *out = new kpm_spectrum{std::move(result.spectrum)};
        if (diagnostics) *diagnostics = diag;
    });
}

kpm_status kpm_discretize_optimal(const kpm_density* q, size_t n, kpm_spectrum** out) {
    return guard([&] {
        require(q, "density");
        require(out, "out");
        *out = new kpm_spectrum{kpm::discretize_optimal(q->value, n)};
    });
}

kpm_status kpm_w1_discrete(const kpm_spectrum* a, const kpm_spectrum* b, double* w1) {
    return guard([&] {
        require(a, "a");
        require(b, "b");
        require(w1, "w1");
        *w1 = kpm::w1_discrete(a->value, b->value);
    });
}

kpm_status kpm_w1_density(const kpm_density* q, const kpm_spectrum* s, double* w1) {
    return guard([&] {
        require(q, "density");
        require(s, "spectrum");
        require(w1, "w1");
        *w1 = kpm::w1_density_vs_spectrum(q->value, s->value);
    });
}

void kpm_table1_options_init(kpm_table1_options* o) {
    if (o == nullptr) return;
    kpm::Table1Options d;
    o->seed = d.seed;
    o->seeds = d.seeds;
    o->ell = d.ell;
    o->workers = d.workers;
    o->grid_eps = d.grid_eps;
    o->samples_per_matvec = 0;
    o->clique_graph_size = d.clique_graph_size;
    o->hypercube_bits = d.hypercube_bits;
    o->clique_degree = d.clique_degree;
    o->hypercube_degree = d.hypercube_degree;
}

kpm_status kpm_experiment_table1(const kpm_table1_options* o, const char* output_dir, char** report) {
    return guard([&] {
        require(o, "options");
        require(report, "report");
        kpm::Table1Options opts;
        opts.seed = o->seed;
        opts.seeds = o->seeds;
        opts.ell = o->ell;
        opts.workers = o->workers;
        opts.grid_eps = o->grid_eps;
        if (o->samples_per_matvec > 0) opts.samples_per_matvec = o->samples_per_matvec;
        opts.clique_graph_size = o->clique_graph_size;
        opts.hypercube_bits = o->hypercube_bits;
        opts.clique_degree = o->clique_degree;
        opts.hypercube_degree = o->hypercube_degree;
        if (output_dir) opts.output_dir = output_dir;
        *report = copy_string(kpm::table1_to_json(kpm::run_table1(opts)));
    });
}

}  // extern "C"
