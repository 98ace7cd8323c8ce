#include "nlkpp/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nlkpp/error.hpp"

namespace nlkpp {
namespace {

constexpr double kBisectRel = 1e-14;

double tie_tolerance(const ModelParams& p) { return 1e-9 * std::max(p.m, 1.0); }

double speed_tolerance(double c_star) { return 1e-10 * std::max(1.0, std::abs(c_star)); }

void check_lambda(double lambda, const char* who) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) fail(ErrorCode::invalid_argument, std::string(who) + ": lambda must be positive");
}

// Q1, Q3, Q5, Q6 on the dispersal kernel alone.
void require_kernel_ready(const Kernel& a, const ModelParams& p) {
  p.validate();
  (void)theta(p);
  if (!(a.abscissa() > 0.0)) fail(ErrorCode::assumption_failed, "Q3 fails: abscissa of a_plus is zero");
  if (!std::isfinite(a.sup_density())) fail(ErrorCode::assumption_failed, "Q5 fails: a_plus is unbounded");
  (void)directional_moment(a);
}

template <class F>
double bisect(F&& positive_above, double lo, double hi) {
  for (int it = 0; it < 400 && hi - lo > kBisectRel * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (positive_above(mid) ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

const char* to_string(KernelClass c) { return c == KernelClass::V ? "V" : "W"; }

const char* to_string(IntervalKind k) {
  switch (k) {
    case IntervalKind::unbounded: return "(0,inf)";
    case IntervalKind::open_end: return "(0,sigma)";
    case IntervalKind::closed_end: return "(0,sigma]";
  }
  return "unknown";
}

double g_function(const Kernel& a, const ModelParams& p, double lambda) {
  check_lambda(lambda, "g_function");
  const double A = a.exp_moment(0, lambda);
  if (std::isinf(A)) return kInf;
  return (p.kappa_plus * A - p.m) / lambda;
}

double t_function(const Kernel& a, const ModelParams& p, double lambda) {
  check_lambda(lambda, "t_function");
  const double sigma = a.abscissa();
  if (lambda > sigma) fail(ErrorCode::invalid_argument, "t_function: lambda beyond the abscissa");
  if (lambda == sigma && !a.moment_finite_at_abscissa(0))
    fail(ErrorCode::invalid_argument, "t_function: transform diverges at the abscissa");
  const double m0 = a.exp_moment(0, lambda);
  const double m1 = a.exp_moment(1, lambda);
  if (m1 == kInf) return -kInf;
  return p.kappa_plus * (m0 - lambda * m1);
}

double h_numerator(const Kernel& a, const ModelParams& p, double lambda) { return p.m - t_function(a, p, lambda); }

double g_derivative(const Kernel& a, const ModelParams& p, double lambda) {
  return h_numerator(a, p, lambda) / (lambda * lambda);
}

double characteristic(const Kernel& a, const ModelParams& p, double c, double lambda) {
  check_lambda(lambda, "characteristic");
  const double A = a.exp_moment(0, lambda);
  if (std::isinf(A)) return kInf;
  return p.kappa_plus * A - p.m - c * lambda;
}

std::complex<double> characteristic(const Kernel& a, const ModelParams& p, double c, std::complex<double> z) {
  check_lambda(z.real(), "characteristic");
  return p.kappa_plus * a.laplace_complex(z) - p.m - c * z;
}

DispersionReport minimal_speed(const Kernel& a, const ModelParams& p) {
  require_kernel_ready(a, p);
  DispersionReport rep;
  rep.sigma_plus = a.abscissa();
  rep.m_xi = directional_moment(a);
  rep.tie_tolerance = tie_tolerance(p);
  rep.T_at_sigma = std::nan("");
  const double sigma = rep.sigma_plus;
  if (std::isinf(sigma)) {
    rep.interval_kind = IntervalKind::unbounded;
  } else if (!a.moment_finite_at_abscissa(0)) {
    rep.interval_kind = IntervalKind::open_end;
  } else {
    rep.interval_kind = IntervalKind::closed_end;
    rep.T_at_sigma = t_function(a, p, sigma);
  }

  if (rep.interval_kind == IntervalKind::closed_end && rep.T_at_sigma >= p.m - rep.tie_tolerance) {
    rep.kernel_class = KernelClass::W;
    rep.critical_equality = std::abs(p.m - rep.T_at_sigma) <= rep.tie_tolerance;
    rep.lambda_star = sigma;
  } else {
    rep.kernel_class = KernelClass::V;
    auto H = [&](double l) { return h_numerator(a, p, l); };
    double lo = std::isfinite(sigma) ? std::min(1.0, 0.5 * sigma) : 1.0;
    while (H(lo) >= 0.0) {
      lo *= 0.5;
      if (lo < 1e-200) fail(ErrorCode::internal, "minimal_speed: cannot bracket the minimizer from below");
    }
    double hi = kInf;
    if (std::isinf(sigma)) {
      hi = lo;
      while (true) {
        hi *= 2.0;
        if (hi > 1e8) fail(ErrorCode::internal, "minimal_speed: cannot bracket the minimizer from above");
        if (H(hi) > 0.0) break;
        lo = hi;
      }
    } else {
      for (int k = 1; k <= 60; ++k) {
        const double x = sigma * (1.0 - std::ldexp(1.0, -k));
        if (x <= lo) continue;
        if (H(x) > 0.0) {
          hi = x;
          break;
        }
        lo = x;
      }
      if (std::isinf(hi)) {
        if (rep.interval_kind != IntervalKind::closed_end)
          fail(ErrorCode::internal, "minimal_speed: no sign change of G' below a divergent abscissa");
        hi = sigma;
      }
    }
    rep.lambda_star = bisect([&](double l) { return H(l) > 0.0; }, lo, hi);
  }
  rep.c_star = g_function(a, p, rep.lambda_star);
  if (!(rep.c_star > p.kappa_plus * rep.m_xi))
    fail(ErrorCode::internal, "minimal_speed: c* does not exceed kappa_plus m_xi");
  return rep;
}

KernelClass classify(const Kernel& a, const ModelParams& p) { return minimal_speed(a, p).kernel_class; }

int root_multiplicity(const Kernel& a, const DispersionReport& rep, double c) {
  const double tol = speed_tolerance(rep.c_star);
  if (c < rep.c_star - tol) fail(ErrorCode::no_wave, "no traveling wave for speeds below c*");
  if (c > rep.c_star + tol) return 1;
  if (rep.kernel_class == KernelClass::V) return 2;
  if (!rep.critical_equality) return 1;
  if (!a.moment_finite_at_abscissa(2))
    fail(ErrorCode::assumption_failed, "critical class-W case needs a finite second exponential moment at the abscissa");
  return 2;
}

int root_multiplicity(const Kernel& a, const ModelParams& p, double c) {
  return root_multiplicity(a, minimal_speed(a, p), c);
}

CharacteristicRoot speed_to_abscissa(const Kernel& a, const ModelParams& p, const DispersionReport& rep, double c) {
  CharacteristicRoot root;
  root.speed = c;
  root.multiplicity = root_multiplicity(a, rep, c);
  if (std::abs(c - rep.c_star) <= speed_tolerance(rep.c_star)) {
    root.lambda_c = rep.lambda_star;
    return root;
  }
  auto h = [&](double l) { return characteristic(a, p, c, l); };
  double lo = 0.5 * rep.lambda_star;
  while (h(lo) <= 0.0) {
    lo *= 0.5;
    if (lo < 1e-250) fail(ErrorCode::internal, "speed_to_abscissa: cannot bracket the root");
  }
  root.lambda_c = bisect([&](double l) { return h(l) <= 0.0; }, lo, rep.lambda_star);
  return root;
}

CharacteristicRoot speed_to_abscissa(const Kernel& a, const ModelParams& p, double c) {
  return speed_to_abscissa(a, p, minimal_speed(a, p), c);
}

double abscissa_to_speed(const Kernel& a, const ModelParams& p, double sigma) {
  const auto rep = minimal_speed(a, p);
  if (!(sigma > 0.0) || sigma > rep.lambda_star * (1.0 + 1e-12))
    fail(ErrorCode::invalid_argument, "abscissa_to_speed: sigma must lie in (0, lambda*]");
  return g_function(a, p, std::min(sigma, rep.lambda_star));
}

MuStarResult mu_star(double q, const ModelParams& p) {
  if (!(q > 2.0)) fail(ErrorCode::invalid_argument, "mu_star: q must exceed 2");
  p.validate();
  (void)theta(p);
  auto f = [&](double mu) {
    const Kernel k = Kernel::exp_poly(1.0, q, mu);
    return t_function(k, p, mu) - p.m;
  };
  double lo = 1e-3;
  while (f(lo) <= 0.0) {
    lo *= 0.5;
    if (lo < 1e-12) fail(ErrorCode::internal, "mu_star: T stays below m for small mu");
  }
  double hi = 2.0 * lo;
  while (f(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) fail(ErrorCode::internal, "mu_star: T stays above m");
  }
  MuStarResult r;
  r.mu_star = bisect([&](double mu) { return f(mu) < 0.0; }, lo, hi);
  r.alpha = Kernel::exp_poly(1.0, q, r.mu_star).parameter("alpha");
  const double pi = std::numbers::pi;
  const double corr = p.m * q / (p.kappa_plus * r.alpha * pi) * std::sin(2.0 * pi / q);
  r.bracket_lo = 2.0 * std::cos(pi / q) - corr;
  r.bracket_hi = (4.0 + std::exp(-1.0)) * std::cos(pi / q) - corr;
  r.inside_bracket = r.mu_star > r.bracket_lo && r.mu_star < r.bracket_hi;
  return r;
}

double lowest_speed_bound(const Kernel& a, const ModelParams& p, double lambda) {
  check_lambda(lambda, "lowest_speed_bound");
  const double A = a.exp_moment(0, lambda);
  if (std::isinf(A)) return kInf;
  return p.kappa_plus * (A - 1.0) / lambda;
}

ComplexScan scan_complex_roots(const Kernel& a, const ModelParams& p, double c, double lambda, double beta_lo,
                               double beta_hi, int samples) {
  require(samples >= 2 && beta_lo < beta_hi, "scan_complex_roots: bad beta range");
  ComplexScan out;
  out.min_modulus = kInf;
  for (int i = 0; i < samples; ++i) {
    const double beta = beta_lo + (beta_hi - beta_lo) * i / (samples - 1);
    const double v = std::abs(characteristic(a, p, c, std::complex<double>(lambda, beta)));
    if (v < out.min_modulus) {
      out.min_modulus = v;
      out.beta_at_min = beta;
    }
  }
  return out;
}

void write_dispersion_csv(std::ostream& os, const Kernel& a, const ModelParams& p, double c,
                          const std::vector<double>& lambdas) {
  const auto old = os.precision(17);
  const double sigma = a.abscissa();
  os << "lambda,G,T,h\n";
  for (double l : lambdas) {
    os << l << ',' << g_function(a, p, l) << ',';
    if (l < sigma || (l == sigma && a.moment_finite_at_abscissa(0))) {
      os << t_function(a, p, l);
    } else {
      os << "nan";
    }
    os << ',' << characteristic(a, p, c, l) << '\n';
  }
  os.precision(old);
}

}  // namespace nlkpp
