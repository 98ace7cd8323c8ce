/* C interface to the nlkpp travelling-wave toolkit.
 *
 * Objects are opaque handles created by nlkpp_*_create / solve functions and released
 * with the matching *_free. Every function returns an nlkpp_status; on failure the
 * message is available from nlkpp_last_error() on the calling thread until the next call.
 * Strings returned through char** are heap-allocated and released with nlkpp_string_free.
 * Handles are immutable after creation and may be shared between threads for reading.
 */
#ifndef NLKPP_H
#define NLKPP_H

#include <stddef.h>

#if defined(_WIN32)
#define NLKPP_API __declspec(dllexport)
#else
#define NLKPP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nlkpp_status {
  NLKPP_OK = 0,
  NLKPP_INVALID_ARGUMENT = 1,
  NLKPP_ASSUMPTION_FAILED = 2,
  NLKPP_NO_WAVE = 3,
  NLKPP_C_ZERO_UNSUPPORTED = 4,
  NLKPP_ITERATION_STALLED = 5,
  NLKPP_TAIL_UNDERRESOLVED = 6,
  NLKPP_FRONT_LEFT_DOMAIN = 7,
  NLKPP_PARSE_ERROR = 8,
  NLKPP_INTERNAL = 9
} nlkpp_status;

typedef struct nlkpp_model nlkpp_model;
typedef struct nlkpp_profile nlkpp_profile;
typedef struct nlkpp_evolution nlkpp_evolution;
typedef struct nlkpp_truncation nlkpp_truncation;

NLKPP_API const char* nlkpp_version(void);
/* Kebab-case name of a status, e.g. "no-wave". */
NLKPP_API const char* nlkpp_status_name(nlkpp_status status);
NLKPP_API const char* nlkpp_last_error(void);
NLKPP_API void nlkpp_string_free(char* s);

/* ---- model: parameters plus the projected kernel pair ---- */

typedef struct nlkpp_params {
  double kappa_plus;
  double m;
  double kappa_local;
  double kappa_nonlocal;
} nlkpp_params;

/* JSON document {"params": {...}, "a_plus": {...}, "a_minus": {...}} or a single kernel with "params". */
NLKPP_API nlkpp_status nlkpp_model_parse(const char* json, nlkpp_model** out);
NLKPP_API nlkpp_status nlkpp_model_load(const char* path, nlkpp_model** out);
/* Copy of `model` with the parameters replaced. */
NLKPP_API nlkpp_status nlkpp_model_with_params(const nlkpp_model* model, const nlkpp_params* params,
                                               nlkpp_model** out);
NLKPP_API void nlkpp_model_free(nlkpp_model* model);
NLKPP_API nlkpp_status nlkpp_model_params(const nlkpp_model* model, nlkpp_params* out);
NLKPP_API nlkpp_status nlkpp_model_theta(const nlkpp_model* model, double* out);
/* Resolved model as JSON: params, both kernels with family parameters and abscissas. */
NLKPP_API nlkpp_status nlkpp_model_json(const nlkpp_model* model, char** out);

/* Assumption report Q1..Q7 as a JSON array of {id, label, status, diagnostic, detail}.
 * `blocking` receives the first failing id among Q1..Q6 ("" when none); may be NULL. */
NLKPP_API nlkpp_status nlkpp_check(const nlkpp_model* model, char** report_json, char** blocking);

/* ---- dispersion ---- */

enum { NLKPP_CLASS_V = 0, NLKPP_CLASS_W = 1 };
enum { NLKPP_INTERVAL_UNBOUNDED = 0, NLKPP_INTERVAL_OPEN = 1, NLKPP_INTERVAL_CLOSED = 2 };

typedef struct nlkpp_dispersion {
  double lambda_star;
  double c_star;
  int kernel_class;  /* NLKPP_CLASS_* */
  double sigma_plus; /* +inf when unbounded */
  double t_at_sigma; /* NaN unless interval_kind is closed */
  int interval_kind; /* NLKPP_INTERVAL_* */
  double m_xi;
  int critical_equality;
  double tie_tolerance;
} nlkpp_dispersion;

NLKPP_API nlkpp_status nlkpp_minimal_speed(const nlkpp_model* model, nlkpp_dispersion* out);
NLKPP_API nlkpp_status nlkpp_g_function(const nlkpp_model* model, double lambda, double* out);
NLKPP_API nlkpp_status nlkpp_t_function(const nlkpp_model* model, double lambda, double* out);
NLKPP_API nlkpp_status nlkpp_speed_to_abscissa(const nlkpp_model* model, double c, double* lambda, int* multiplicity);
NLKPP_API nlkpp_status nlkpp_abscissa_to_speed(const nlkpp_model* model, double sigma, double* c);
/* CSV "lambda,G,T,h" with h at speed c, 17 significant digits. */
NLKPP_API nlkpp_status nlkpp_dispersion_csv(const nlkpp_model* model, double c, const double* lambdas, size_t count,
                                            char** out);

typedef struct nlkpp_mu_star {
  double mu_star;
  double alpha;
  double bracket_lo;
  double bracket_hi;
  int inside_bracket;
} nlkpp_mu_star;

/* Critical mu of alpha e^{-mu|s|} / (1 + |s|^q). */
NLKPP_API nlkpp_status nlkpp_mu_star_compute(double q, const nlkpp_params* params, nlkpp_mu_star* out);

/* ---- profiles ---- */

enum { NLKPP_SHIFT_NONE = 0, NLKPP_SHIFT_HALF_THETA = 1, NLKPP_SHIFT_UNIT_D = 2 };

typedef struct nlkpp_profile_config {
  double grid_l;       /* 0: 40 / lambda_c */
  double grid_h;       /* 0: min(0.01, 1 / (20 lambda_c)) */
  double anchor;
  double tol;
  double residual_tol;
  int max_sweeps;
  double sweep_tol;
  int max_newton;
  int normalize;       /* NLKPP_SHIFT_* */
} nlkpp_profile_config;

typedef struct nlkpp_profile_info {
  double grid_start;
  double h;
  size_t size;
  double theta;
  double speed;
  double speed_discrete;
  double lambda_c;
  double lambda_discrete;
  int multiplicity;
  int increasing;
  double residual_sup;
  int monotone_sweeps;
  int monotone_violations;
  double monotone_max_increase;
  int newton_steps;
  int gmres_iterations;
} nlkpp_profile_info;

typedef struct nlkpp_tail_fit {
  double rate;
  double j_estimate;
  double d_estimate;
  double window_lo;
  double window_hi;
  size_t points;
  double fit_residual;
} nlkpp_tail_fit;

NLKPP_API void nlkpp_profile_config_default(nlkpp_profile_config* cfg);
NLKPP_API nlkpp_status nlkpp_profile_solve(const nlkpp_model* model, double c, const nlkpp_profile_config* cfg,
                                           nlkpp_profile** out);
NLKPP_API void nlkpp_profile_free(nlkpp_profile* profile);
NLKPP_API nlkpp_status nlkpp_profile_get_info(const nlkpp_profile* profile, nlkpp_profile_info* out);
/* Borrowed pointer to the values, valid while the handle lives. */
NLKPP_API nlkpp_status nlkpp_profile_values(const nlkpp_profile* profile, const double** values, size_t* count);
NLKPP_API nlkpp_status nlkpp_profile_tail(const nlkpp_profile* profile, double lo_value, double hi_value,
                                          nlkpp_tail_fit* out);
NLKPP_API nlkpp_status nlkpp_profile_half_theta(const nlkpp_profile* profile, double* out);
/* min over q of sup |p1(s) - p2(s + q)|. */
NLKPP_API nlkpp_status nlkpp_profile_compare(const nlkpp_profile* p1, const nlkpp_profile* p2, double* distance,
                                             double* shift);

/* ---- evolution ---- */

enum { NLKPP_U0_CONSTANT = 0, NLKPP_U0_STEP = 1, NLKPP_U0_EXPONENTIAL_TAIL = 2, NLKPP_U0_SAMPLES = 3 };
enum { NLKPP_FRONT_RIGHT = 0, NLKPP_FRONT_LEFT = 1 };

typedef struct nlkpp_initial {
  int shape;       /* NLKPP_U0_* */
  double height;   /* 0: theta */
  double position;
  double rate;
  double start;    /* samples: s of values[0] */
  double step;
  const double* values;
  size_t count;
} nlkpp_initial;

typedef struct nlkpp_evolution_config {
  double dt;
  double t_end;
  double h;
  double x_min;
  double x_max;
  double snapshot_interval; /* 0: t_end / 200 */
  int keep_values;
  int widen;
} nlkpp_evolution_config;

typedef struct nlkpp_evolution_info {
  double h;
  double dt;
  double theta;
  double level;
  size_t snapshots;
  double max_value;
  double min_value;
  int widenings;
  int steps;
} nlkpp_evolution_info;

typedef struct nlkpp_speed_fit {
  double speed;
  double intercept;
  double slope_stderr;
  double t_from;
  double t_to;
  size_t points;
  double burn_in;
  double level;
} nlkpp_speed_fit;

NLKPP_API void nlkpp_evolution_config_default(nlkpp_evolution_config* cfg);
NLKPP_API nlkpp_status nlkpp_evolve(const nlkpp_model* model, const nlkpp_initial* u0,
                                    const nlkpp_evolution_config* cfg, nlkpp_evolution** out);
NLKPP_API void nlkpp_evolution_free(nlkpp_evolution* run);
NLKPP_API nlkpp_status nlkpp_evolution_get_info(const nlkpp_evolution* run, nlkpp_evolution_info* out);
/* Front positions at level theta/2 of snapshot k (NaN when there is none). */
NLKPP_API nlkpp_status nlkpp_evolution_front(const nlkpp_evolution* run, size_t k, double* t, double* right,
                                             double* left);
/* Borrowed values of snapshot k (count 0 when values were not kept). */
NLKPP_API nlkpp_status nlkpp_evolution_snapshot(const nlkpp_evolution* run, size_t k, double* t, double* grid_start,
                                                const double** values, size_t* count);
/* level <= 0 means theta/2. */
NLKPP_API nlkpp_status nlkpp_evolution_speed(const nlkpp_evolution* run, int side, double burn_in, double level,
                                             nlkpp_speed_fit* out);

/* ---- truncation ---- */

typedef struct nlkpp_truncation_level {
  double radius;
  double mass_plus;
  double mass_minus;
  double theta_r;
  double lambda_star;
  double c_star;
  double gap;
} nlkpp_truncation_level;

typedef struct nlkpp_truncation_info {
  size_t levels;
  double limit_lambda_star;
  double limit_c_star;
  double lambda1_bound;
  int strictly_increasing;
  int above_lambda1;
  int theta_bounded;
  int dominated;
  double domination_excess;
  size_t domination_samples;
  double final_gap;
} nlkpp_truncation_info;

NLKPP_API nlkpp_status nlkpp_theta_r(const nlkpp_params* params, double mass_plus, double mass_minus, double* out);
NLKPP_API nlkpp_status nlkpp_truncation_sweep(const nlkpp_model* model, const double* radii, size_t count,
                                              int workers, nlkpp_truncation** out);
NLKPP_API void nlkpp_truncation_free(nlkpp_truncation* trace);
NLKPP_API nlkpp_status nlkpp_truncation_get_info(const nlkpp_truncation* trace, nlkpp_truncation_info* out);
NLKPP_API nlkpp_status nlkpp_truncation_get_level(const nlkpp_truncation* trace, size_t i,
                                                  nlkpp_truncation_level* out);

#ifdef __cplusplus
}
#endif

#endif
