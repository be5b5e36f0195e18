#ifndef KPM_API_H
#define KPM_API_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(KPM_BUILDING_LIBRARY)
#    define KPM_API __declspec(dllexport)
#  else
#    define KPM_API __declspec(dllimport)
#  endif
#else
#  define KPM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kpm_status {
    KPM_OK = 0,
    KPM_ERR_INTERNAL = 1,
    KPM_ERR_INPUT = 2,
    KPM_ERR_CONFIG = 3,
    KPM_ERR_DOMAIN = 4,
    KPM_ERR_CONVERGENCE = 5
} kpm_status;

typedef struct kpm_matrix kpm_matrix;
typedef struct kpm_graph kpm_graph;
typedef struct kpm_moments kpm_moments;
typedef struct kpm_density kpm_density;
typedef struct kpm_spectrum kpm_spectrum;

/* Message of the last failed call on this thread; empty after success. */
KPM_API const char* kpm_last_error(void);
KPM_API const char* kpm_version(void);
/* Releases strings returned through char** out-parameters. */
KPM_API void kpm_string_free(char* s);

/* ---- matrices ---- */
KPM_API kpm_status kpm_matrix_read(const char* path, kpm_matrix** out);
KPM_API kpm_status kpm_matrix_from_dense(size_t n, const double* row_major, kpm_matrix** out);
KPM_API void kpm_matrix_free(kpm_matrix* m);
KPM_API kpm_status kpm_matrix_dimension(const kpm_matrix* m, size_t* n);
KPM_API kpm_status kpm_matrix_nonzeros(const kpm_matrix* m, size_t* nnz);
/* Power-iteration estimate of the spectral norm. */
KPM_API kpm_status kpm_matrix_norm_estimate(const kpm_matrix* m, int iterations, uint64_t seed, double* nu);
/* 1 / (nu (1 + margin)), or 1 when nu == 0. */
KPM_API double kpm_norm_scale_factor(double nu, double margin);
KPM_API kpm_status kpm_matrix_scale(kpm_matrix* m, double factor);
KPM_API kpm_status kpm_matrix_apply(const kpm_matrix* m, const double* y, double* z);

/* ---- graphs ---- */
/* kind: clique-plus-matching, hairy-clique, star, path (size = n) or hypercube (size = bits). */
KPM_API kpm_status kpm_graph_generate(const char* kind, size_t size, kpm_graph** out);
KPM_API kpm_status kpm_graph_read(const char* path, kpm_graph** out);
KPM_API kpm_status kpm_graph_write(const kpm_graph* g, const char* path);
KPM_API void kpm_graph_free(kpm_graph* g);
KPM_API kpm_status kpm_graph_info(const kpm_graph* g, size_t* n, size_t* nnz);
/* Closed-form spectrum of the normalized adjacency; KPM_ERR_CONFIG when none is known. */
KPM_API kpm_status kpm_graph_truth(const kpm_graph* g, kpm_spectrum** out);
/* Normalized adjacency D^{-1/2} A D^{-1/2}. */
KPM_API kpm_status kpm_graph_normalized_matrix(const kpm_graph* g, kpm_matrix** out);

/* ---- moments ---- */
typedef struct kpm_moment_options {
    int degree;                  /* N, a positive multiple of 4 */
    int ell;                     /* probe vectors */
    uint64_t seed;
    int workers;
    double eps_mv;               /* graph oracle accuracy; <= 0 selects sqrt(48 n / t) when t is set, else 1/(4 N^4) */
    double delta;                /* graph oracle failure probability */
    double boost_constant;       /* c in r = ceil(c log(1/delta)) */
    uint64_t samples_per_matvec; /* 0: t = ceil(48 n / eps_mv^2) */
    int repetitions;             /* 0: r from the boosting schedule */
} kpm_moment_options;

typedef struct kpm_oracle_stats {
    uint64_t oracle_calls;
    uint64_t sampled_products;
    uint64_t entries_touched;
    uint64_t flagged_calls;
    uint64_t samples_per_matvec;
    int repetitions;
    double eps_mv;
} kpm_oracle_stats;

KPM_API void kpm_moment_options_init(kpm_moment_options* options);
/* N = 4 ceil(18 / (4 eps)). */
KPM_API kpm_status kpm_degree_for_accuracy(double eps, int* degree);
/* max(1, ceil(C log^2(N / delta) / (n Delta^2))) with Delta = 1/N^2. */
KPM_API kpm_status kpm_repetitions_for(int degree, double delta, size_t n, double constant_c, int* ell);

KPM_API kpm_status kpm_moments_exact(const kpm_matrix* m, int degree, int workers, kpm_moments** out);
KPM_API kpm_status kpm_moments_from_spectrum(const kpm_spectrum* s, int degree, kpm_moments** out);
KPM_API kpm_status kpm_moments_hutchinson(const kpm_matrix* m, const kpm_moment_options* options, kpm_moments** out);
/* Approximate Hutchinson over the boosted sampling oracle; stats may be NULL. */
KPM_API kpm_status kpm_moments_graph_amv(const kpm_graph* g, const kpm_moment_options* options, kpm_moments** out,
                                         kpm_oracle_stats* stats);
KPM_API void kpm_moments_free(kpm_moments* m);
KPM_API kpm_status kpm_moments_degree(const kpm_moments* m, int* degree);
/* tau_k for 0 <= k <= N. */
KPM_API kpm_status kpm_moments_value(const kpm_moments* m, int k, double* value);
KPM_API kpm_status kpm_moments_oracle_calls(const kpm_moments* m, uint64_t* calls);
/* JSON array of warning strings. */
KPM_API kpm_status kpm_moments_warnings(const kpm_moments* m, char** json);
KPM_API kpm_status kpm_moments_to_json(const kpm_moments* m, char** json);
KPM_API kpm_status kpm_moments_from_json(const char* json, kpm_moments** out);

/* ---- densities ---- */
KPM_API kpm_status kpm_density_idealized(const kpm_moments* m, kpm_density** out);
KPM_API kpm_status kpm_density_full(const kpm_moments* m, kpm_density** out);
KPM_API void kpm_density_free(kpm_density* q);
KPM_API kpm_status kpm_density_degree(const kpm_density* q, int* degree);
KPM_API kpm_status kpm_density_evaluate(const kpm_density* q, double x, double* value);
KPM_API kpm_status kpm_density_cdf(const kpm_density* q, double x, double* value);
/* Minimum of q / w on an evenly spaced grid. */
KPM_API kpm_status kpm_density_min_polynomial(const kpm_density* q, int points, double* value);
KPM_API kpm_status kpm_density_reflect(const kpm_density* q, kpm_density** out);
KPM_API kpm_status kpm_density_plot_csv(const kpm_density* q, int points, char** csv);
KPM_API kpm_status kpm_density_to_json(const kpm_density* q, char** json);
KPM_API kpm_status kpm_density_from_json(const char* json, kpm_density** out);

/* ---- spectra ---- */
KPM_API kpm_status kpm_spectrum_from_values(const double* values, size_t n, kpm_spectrum** out);
KPM_API kpm_status kpm_spectrum_read(const char* path, kpm_spectrum** out);
KPM_API kpm_status kpm_spectrum_write_text(const kpm_spectrum* s, const char* path);
KPM_API kpm_status kpm_spectrum_to_json(const kpm_spectrum* s, char** json);
KPM_API void kpm_spectrum_free(kpm_spectrum* s);
/* Borrowed pointer, valid until the spectrum is freed. */
KPM_API kpm_status kpm_spectrum_values(const kpm_spectrum* s, const double** values, size_t* n);
/* Dense Jacobi eigenvalues; n <= 4096. */
KPM_API kpm_status kpm_spectrum_dense(const kpm_matrix* m, kpm_spectrum** out);
/* lambda -> 1 - lambda, or lambda -> -lambda when remap is non-zero. */
KPM_API kpm_status kpm_spectrum_reflect(const kpm_spectrum* s, int remap, kpm_spectrum** out);
KPM_API kpm_status kpm_spectrum_histogram(const kpm_spectrum* s, int bins, double* masses);

/* diagnostics (JSON array) may be NULL. */
KPM_API kpm_status kpm_discretize_greedy(const kpm_density* q, size_t n, double eps, kpm_spectrum** out,
                                         char** diagnostics);
KPM_API kpm_status kpm_discretize_optimal(const kpm_density* q, size_t n, kpm_spectrum** out);
KPM_API kpm_status kpm_w1_discrete(const kpm_spectrum* a, const kpm_spectrum* b, double* w1);
KPM_API kpm_status kpm_w1_density(const kpm_density* q, const kpm_spectrum* s, double* w1);

/* ---- experiments ---- */
typedef struct kpm_table1_options {
    uint64_t seed;
    int seeds;
    int ell;
    int workers;
    double grid_eps;
    uint64_t samples_per_matvec; /* 0: doubling search */
    size_t clique_graph_size;
    int hypercube_bits;
    int clique_degree;
    int hypercube_degree;
} kpm_table1_options;

KPM_API void kpm_table1_options_init(kpm_table1_options* options);
/* output_dir may be NULL; report receives the JSON report. */
KPM_API kpm_status kpm_experiment_table1(const kpm_table1_options* options, const char* output_dir, char** report);

#ifdef __cplusplus
}
#endif

#endif
