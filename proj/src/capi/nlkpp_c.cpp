#include "nlkpp/nlkpp.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <sstream>
#include <string>

#include "nlkpp/dispersion.hpp"
#include "nlkpp/error.hpp"
#include "nlkpp/evolution.hpp"
#include "nlkpp/model_io.hpp"
#include "nlkpp/profile.hpp"
#include "nlkpp/truncation.hpp"

#ifndef NLKPP_VERSION
#define NLKPP_VERSION "0.0.0"
#endif

struct nlkpp_model {
  nlkpp::ModelSpec spec;
};
struct nlkpp_profile {
  nlkpp::WaveProfile w;
};
struct nlkpp_evolution {
  nlkpp::EvolutionRun run;
};
struct nlkpp_truncation {
  nlkpp::TruncationTrace trace;
};

namespace {

thread_local std::string last_error;

nlkpp_status status_of(nlkpp::ErrorCode code) {
  using nlkpp::ErrorCode;
  switch (code) {
    case ErrorCode::invalid_argument: return NLKPP_INVALID_ARGUMENT;
    case ErrorCode::assumption_failed: return NLKPP_ASSUMPTION_FAILED;
    case ErrorCode::no_wave: return NLKPP_NO_WAVE;
    case ErrorCode::c_zero_unsupported: return NLKPP_C_ZERO_UNSUPPORTED;
    case ErrorCode::iteration_stalled: return NLKPP_ITERATION_STALLED;
    case ErrorCode::tail_underresolved: return NLKPP_TAIL_UNDERRESOLVED;
    case ErrorCode::front_left_domain: return NLKPP_FRONT_LEFT_DOMAIN;
    case ErrorCode::parse_error: return NLKPP_PARSE_ERROR;
    case ErrorCode::internal: return NLKPP_INTERNAL;
  }
  return NLKPP_INTERNAL;
}

// Runs f, translating exceptions into a status and the thread's last error.
template <class F>
nlkpp_status guarded(F&& f) {
  last_error.clear();
  try {
    f();
    return NLKPP_OK;
  } catch (const nlkpp::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const nlohmann::json::exception& e) {
    last_error = e.what();
    return NLKPP_PARSE_ERROR;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return NLKPP_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return NLKPP_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) nlkpp::fail(nlkpp::ErrorCode::invalid_argument, std::string(what) + " is null");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nlkpp::ModelParams to_params(const nlkpp_params& p) {
  return nlkpp::ModelParams{p.kappa_plus, p.m, p.kappa_local, p.kappa_nonlocal};
}

}  // namespace

extern "C" {

const char* nlkpp_version(void) { return NLKPP_VERSION; }

const char* nlkpp_status_name(nlkpp_status status) {
  switch (status) {
    case NLKPP_OK: return "ok";
    case NLKPP_INVALID_ARGUMENT: return "invalid-argument";
    case NLKPP_ASSUMPTION_FAILED: return "assumption-failed";
    case NLKPP_NO_WAVE: return "no-wave";
    case NLKPP_C_ZERO_UNSUPPORTED: return "c-zero-unsupported";
    case NLKPP_ITERATION_STALLED: return "iteration-stalled";
    case NLKPP_TAIL_UNDERRESOLVED: return "tail-underresolved";
    case NLKPP_FRONT_LEFT_DOMAIN: return "front-left-domain";
    case NLKPP_PARSE_ERROR: return "parse-error";
    case NLKPP_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* nlkpp_last_error(void) { return last_error.c_str(); }

void nlkpp_string_free(char* s) { std::free(s); }

nlkpp_status nlkpp_model_parse(const char* json, nlkpp_model** out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
      nlkpp::fail(nlkpp::ErrorCode::parse_error, e.what());
    }
    *out = new nlkpp_model{nlkpp::model_from_json(j)};
  });
}

nlkpp_status nlkpp_model_load(const char* path, nlkpp_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new nlkpp_model{nlkpp::model_from_file(path)};
  });
}

nlkpp_status nlkpp_model_with_params(const nlkpp_model* model, const nlkpp_params* params, nlkpp_model** out) {
  return guarded([&] {
    need(model, "model");
    need(params, "params");
    need(out, "out");
    nlkpp::ModelSpec spec = model->spec;
    spec.params = to_params(*params);
    spec.params.validate();
    *out = new nlkpp_model{spec};
  });
}

void nlkpp_model_free(nlkpp_model* model) { delete model; }

nlkpp_status nlkpp_model_params(const nlkpp_model* model, nlkpp_params* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    const auto& p = model->spec.params;
    *out = nlkpp_params{p.kappa_plus, p.m, p.kappa_local, p.kappa_nonlocal};
  });
}

nlkpp_status nlkpp_model_theta(const nlkpp_model* model, double* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = nlkpp::theta(model->spec.params);
  });
}

nlkpp_status nlkpp_model_json(const nlkpp_model* model, char** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    nlohmann::json j;
    j["params"] = nlkpp::to_json(model->spec.params);
    j["a_plus"] = nlkpp::to_json(model->spec.kernels.a_plus);
    j["a_minus"] = nlkpp::to_json(model->spec.kernels.a_minus);
    *out = copy_string(j.dump());
  });
}

nlkpp_status nlkpp_check(const nlkpp_model* model, char** report_json, char** blocking) {
  return guarded([&] {
    need(model, "model");
    need(report_json, "report_json");
    const auto rep = nlkpp::check_assumptions(model->spec.kernels, model->spec.params);
    char* r = copy_string(nlkpp::to_json(rep).dump());
    if (blocking) {
      try {
        *blocking = copy_string(rep.first_blocking());
      } catch (...) {
        std::free(r);
        throw;
      }
    }
    *report_json = r;
  });
}

nlkpp_status nlkpp_minimal_speed(const nlkpp_model* model, nlkpp_dispersion* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    const auto r = nlkpp::minimal_speed(model->spec.kernels.a_plus, model->spec.params);
    out->lambda_star = r.lambda_star;
    out->c_star = r.c_star;
    out->kernel_class = r.kernel_class == nlkpp::KernelClass::W ? NLKPP_CLASS_W : NLKPP_CLASS_V;
    out->sigma_plus = r.sigma_plus;
    out->t_at_sigma = r.T_at_sigma;
    out->interval_kind = r.interval_kind == nlkpp::IntervalKind::unbounded  ? NLKPP_INTERVAL_UNBOUNDED
                         : r.interval_kind == nlkpp::IntervalKind::open_end ? NLKPP_INTERVAL_OPEN
                                                                            : NLKPP_INTERVAL_CLOSED;
    out->m_xi = r.m_xi;
    out->critical_equality = r.critical_equality ? 1 : 0;
    out->tie_tolerance = r.tie_tolerance;
  });
}

nlkpp_status nlkpp_g_function(const nlkpp_model* model, double lambda, double* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = nlkpp::g_function(model->spec.kernels.a_plus, model->spec.params, lambda);
  });
}

nlkpp_status nlkpp_t_function(const nlkpp_model* model, double lambda, double* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = nlkpp::t_function(model->spec.kernels.a_plus, model->spec.params, lambda);
  });
}

nlkpp_status nlkpp_speed_to_abscissa(const nlkpp_model* model, double c, double* lambda, int* multiplicity) {
  return guarded([&] {
    need(model, "model");
    need(lambda, "lambda");
    const auto r = nlkpp::speed_to_abscissa(model->spec.kernels.a_plus, model->spec.params, c);
    *lambda = r.lambda_c;
    if (multiplicity) *multiplicity = r.multiplicity;
  });
}

nlkpp_status nlkpp_abscissa_to_speed(const nlkpp_model* model, double sigma, double* c) {
  return guarded([&] {
    need(model, "model");
    need(c, "c");
    *c = nlkpp::abscissa_to_speed(model->spec.kernels.a_plus, model->spec.params, sigma);
  });
}

nlkpp_status nlkpp_dispersion_csv(const nlkpp_model* model, double c, const double* lambdas, size_t count,
                                  char** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    if (count > 0) need(lambdas, "lambdas");
    std::ostringstream os;
    nlkpp::write_dispersion_csv(os, model->spec.kernels.a_plus, model->spec.params, c,
                                std::vector<double>(lambdas, lambdas + count));
    *out = copy_string(os.str());
  });
}

nlkpp_status nlkpp_mu_star_compute(double q, const nlkpp_params* params, nlkpp_mu_star* out) {
  return guarded([&] {
    need(params, "params");
    need(out, "out");
    const auto r = nlkpp::mu_star(q, to_params(*params));
    *out = nlkpp_mu_star{r.mu_star, r.alpha, r.bracket_lo, r.bracket_hi, r.inside_bracket ? 1 : 0};
  });
}

void nlkpp_profile_config_default(nlkpp_profile_config* cfg) {
  if (!cfg) return;
  const nlkpp::ProfileConfig d;
  *cfg = nlkpp_profile_config{d.grid_l, d.grid_h, d.anchor, d.tol, d.residual_tol, d.max_sweeps, d.sweep_tol,
                              d.max_newton, static_cast<int>(d.normalize)};
}

nlkpp_status nlkpp_profile_solve(const nlkpp_model* model, double c, const nlkpp_profile_config* cfg,
                                 nlkpp_profile** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    nlkpp::ProfileConfig pc;
    if (cfg) {
      if (cfg->normalize < 0 || cfg->normalize > 2) nlkpp::fail(nlkpp::ErrorCode::invalid_argument, "unknown shift mode");
      pc.grid_l = cfg->grid_l;
      pc.grid_h = cfg->grid_h;
      pc.anchor = cfg->anchor;
      pc.tol = cfg->tol;
      pc.residual_tol = cfg->residual_tol;
      pc.max_sweeps = cfg->max_sweeps;
      pc.sweep_tol = cfg->sweep_tol;
      pc.max_newton = cfg->max_newton;
      pc.normalize = static_cast<nlkpp::ShiftMode>(cfg->normalize);
    }
    *out = new nlkpp_profile{nlkpp::solve_profile(model->spec.kernels, model->spec.params, c, pc)};
  });
}

void nlkpp_profile_free(nlkpp_profile* profile) { delete profile; }

nlkpp_status nlkpp_profile_get_info(const nlkpp_profile* profile, nlkpp_profile_info* out) {
  return guarded([&] {
    need(profile, "profile");
    need(out, "out");
    const auto& w = profile->w;
    *out = nlkpp_profile_info{w.grid_start,      w.h,
                              w.size(),          w.theta,
                              w.speed,           w.speed_discrete,
                              w.lambda_c,        w.lambda_discrete,
                              w.multiplicity,    w.increasing ? 1 : 0,
                              w.residual_sup,    w.monotone_sweeps,
                              w.monotone_violations, w.monotone_max_increase,
                              w.newton_steps,    w.gmres_iterations};
  });
}

nlkpp_status nlkpp_profile_values(const nlkpp_profile* profile, const double** values, size_t* count) {
  return guarded([&] {
    need(profile, "profile");
    need(values, "values");
    need(count, "count");
    *values = profile->w.values.data();
    *count = profile->w.values.size();
  });
}

nlkpp_status nlkpp_profile_tail(const nlkpp_profile* profile, double lo_value, double hi_value, nlkpp_tail_fit* out) {
  return guarded([&] {
    need(profile, "profile");
    need(out, "out");
    const auto f = nlkpp::tail_asymptotics(profile->w, lo_value, hi_value);
    *out = nlkpp_tail_fit{f.rate, f.j_estimate, f.D_estimate, f.window_lo, f.window_hi, f.points, f.fit_residual};
  });
}

nlkpp_status nlkpp_profile_half_theta(const nlkpp_profile* profile, double* out) {
  return guarded([&] {
    need(profile, "profile");
    need(out, "out");
    *out = nlkpp::half_theta_crossing(profile->w);
  });
}

nlkpp_status nlkpp_profile_compare(const nlkpp_profile* p1, const nlkpp_profile* p2, double* distance,
                                   double* shift) {
  return guarded([&] {
    need(p1, "p1");
    need(p2, "p2");
    need(distance, "distance");
    const auto r = nlkpp::compare_up_to_shift(p1->w, p2->w);
    *distance = r.distance;
    if (shift) *shift = r.shift;
  });
}

void nlkpp_evolution_config_default(nlkpp_evolution_config* cfg) {
  if (!cfg) return;
  const nlkpp::EvolutionConfig d;
  *cfg = nlkpp_evolution_config{d.dt, d.t_end, d.h, d.x_min, d.x_max, d.snapshot_interval, d.keep_values ? 1 : 0,
                                d.widen ? 1 : 0};
}

nlkpp_status nlkpp_evolve(const nlkpp_model* model, const nlkpp_initial* u0, const nlkpp_evolution_config* cfg,
                          nlkpp_evolution** out) {
  return guarded([&] {
    need(model, "model");
    need(u0, "u0");
    need(cfg, "cfg");
    need(out, "out");
    nlkpp::InitialCondition ic;
    switch (u0->shape) {
      case NLKPP_U0_CONSTANT: ic.shape = nlkpp::InitialShape::constant; break;
      case NLKPP_U0_STEP: ic.shape = nlkpp::InitialShape::step; break;
      case NLKPP_U0_EXPONENTIAL_TAIL: ic.shape = nlkpp::InitialShape::exponential_tail; break;
      case NLKPP_U0_SAMPLES: ic.shape = nlkpp::InitialShape::samples; break;
      default: nlkpp::fail(nlkpp::ErrorCode::invalid_argument, "unknown initial shape");
    }
    ic.height = u0->height;
    ic.position = u0->position;
    ic.rate = u0->rate;
    ic.start = u0->start;
    ic.step = u0->step;
    if (u0->count > 0) {
      need(u0->values, "u0 values");
      ic.values.assign(u0->values, u0->values + u0->count);
    }
    nlkpp::EvolutionConfig ec;
    ec.dt = cfg->dt;
    ec.t_end = cfg->t_end;
    ec.h = cfg->h;
    ec.x_min = cfg->x_min;
    ec.x_max = cfg->x_max;
    ec.snapshot_interval = cfg->snapshot_interval;
    ec.keep_values = cfg->keep_values != 0;
    ec.widen = cfg->widen != 0;
    *out = new nlkpp_evolution{nlkpp::evolve(model->spec.kernels, model->spec.params, ic, ec)};
  });
}

void nlkpp_evolution_free(nlkpp_evolution* run) { delete run; }

nlkpp_status nlkpp_evolution_get_info(const nlkpp_evolution* run, nlkpp_evolution_info* out) {
  return guarded([&] {
    need(run, "run");
    need(out, "out");
    const auto& r = run->run;
    *out = nlkpp_evolution_info{r.h,         r.dt,        r.theta,     r.level, r.snapshots.size(),
                                r.max_value, r.min_value, r.widenings, r.steps};
  });
}

nlkpp_status nlkpp_evolution_front(const nlkpp_evolution* run, size_t k, double* t, double* right, double* left) {
  return guarded([&] {
    need(run, "run");
    const auto& r = run->run;
    if (k >= r.times.size()) nlkpp::fail(nlkpp::ErrorCode::invalid_argument, "snapshot index out of range");
    if (t) *t = r.times[k];
    if (right) *right = r.right_front[k];
    if (left) *left = r.left_front[k];
  });
}

nlkpp_status nlkpp_evolution_snapshot(const nlkpp_evolution* run, size_t k, double* t, double* grid_start,
                                      const double** values, size_t* count) {
  return guarded([&] {
    need(run, "run");
    need(values, "values");
    need(count, "count");
    const auto& r = run->run;
    if (k >= r.snapshots.size()) nlkpp::fail(nlkpp::ErrorCode::invalid_argument, "snapshot index out of range");
    const auto& s = r.snapshots[k];
    if (t) *t = s.t;
    if (grid_start) *grid_start = s.grid_start;
    *values = s.values.data();
    *count = s.values.size();
  });
}

nlkpp_status nlkpp_evolution_speed(const nlkpp_evolution* run, int side, double burn_in, double level,
                                   nlkpp_speed_fit* out) {
  return guarded([&] {
    need(run, "run");
    need(out, "out");
    if (side != NLKPP_FRONT_RIGHT && side != NLKPP_FRONT_LEFT)
      nlkpp::fail(nlkpp::ErrorCode::invalid_argument, "unknown front side");
    const auto f = nlkpp::front_speed(run->run, side == NLKPP_FRONT_LEFT ? nlkpp::FrontSide::left : nlkpp::FrontSide::right,
                                      burn_in, level);
    *out = nlkpp_speed_fit{f.speed, f.intercept, f.slope_stderr, f.t_from, f.t_to, f.points, f.burn_in, f.level};
  });
}

nlkpp_status nlkpp_theta_r(const nlkpp_params* params, double mass_plus, double mass_minus, double* out) {
  return guarded([&] {
    need(params, "params");
    need(out, "out");
    *out = nlkpp::theta_r(to_params(*params), mass_plus, mass_minus);
  });
}

nlkpp_status nlkpp_truncation_sweep(const nlkpp_model* model, const double* radii, size_t count, int workers,
                                    nlkpp_truncation** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    if (count > 0) need(radii, "radii");
    *out = new nlkpp_truncation{nlkpp::c_star_sequence(model->spec.kernels, model->spec.params,
                                                       std::vector<double>(radii, radii + count), workers)};
  });
}

void nlkpp_truncation_free(nlkpp_truncation* trace) { delete trace; }

nlkpp_status nlkpp_truncation_get_info(const nlkpp_truncation* trace, nlkpp_truncation_info* out) {
  return guarded([&] {
    need(trace, "trace");
    need(out, "out");
    const auto& t = trace->trace;
    *out = nlkpp_truncation_info{t.levels.size(),
                                 t.limit.lambda_star,
                                 t.limit.c_star,
                                 t.lambda1_bound,
                                 t.strictly_increasing ? 1 : 0,
                                 t.above_lambda1 ? 1 : 0,
                                 t.theta_bounded ? 1 : 0,
                                 t.dominated ? 1 : 0,
                                 t.domination_excess,
                                 t.domination_samples,
                                 t.final_gap};
  });
}

nlkpp_status nlkpp_truncation_get_level(const nlkpp_truncation* trace, size_t i, nlkpp_truncation_level* out) {
  return guarded([&] {
    need(trace, "trace");
    need(out, "out");
    const auto& levels = trace->trace.levels;
    if (i >= levels.size()) nlkpp::fail(nlkpp::ErrorCode::invalid_argument, "level index out of range");
    const auto& l = levels[i];
    *out = nlkpp_truncation_level{l.radius, l.mass_plus, l.mass_minus, l.theta_r, l.lambda_star, l.c_star, l.gap};
  });
}

}  // extern "C"
