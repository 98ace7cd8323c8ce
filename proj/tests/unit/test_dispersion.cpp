#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "nlkpp/dispersion.hpp"
#include "nlkpp/error.hpp"
#include "nlkpp/quadrature.hpp"

using namespace nlkpp;

namespace {

const ModelParams kLK1{2.0, 1.0, 1.0, 0.0};

double lk1_g(double l) { return (2.0 / (1.0 - l * l) - 1.0) / l; }
double lk1_t(double l) { return 2.0 * (1.0 - 3.0 * l * l) / ((1.0 - l * l) * (1.0 - l * l)); }

// Brute-force minimization of G on a uniform grid over (0, hi].
std::pair<double, double> grid_min(const Kernel& k, const ModelParams& p, double hi, int n) {
  double best = kInf, arg = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double l = hi * i / n;
    const double g = (p.kappa_plus * k.exp_moment(0, l) - p.m) / l;
    if (g < best) {
      best = g;
      arg = l;
    }
  }
  return {arg, best};
}

// T by direct quadrature of kappa_plus (1 - lambda s) a(s) e^{lambda s}, given log a.
double t_oracle(const std::function<double(double)>& log_a, const ModelParams& p, double l) {
  auto f = [&](double s) { return (1.0 - l * s) * std::exp(log_a(s) + l * s); };
  // Finite panels plus the two tails mapped onto (0, 1] by s = +-100/u.
  double acc = 0.0;
  const double cuts[] = {-100.0, -10.0, -1.0, 0.0, 1.0, 10.0, 100.0};
  for (int i = 0; i + 1 < 7; ++i) acc += quad::integrate(f, cuts[i], cuts[i + 1], 1e-12);
  for (double sign : {-1.0, 1.0})
    acc += quad::integrate([&](double u) { return f(sign * 100.0 / u) * 100.0 / (u * u); }, 0.0, 1.0, 1e-12);
  return p.kappa_plus * acc;
}

}  // namespace

TEST_CASE("G and T for the two-sided exponential") {
  const auto k = Kernel::laplace(1.0);
  auto log_lk1 = [](double s) { return std::log(0.5) - std::abs(s); };
  CHECK(g_function(k, kLK1, 0.5) == doctest::Approx(10.0 / 3.0).epsilon(1e-12));
  CHECK(std::isinf(g_function(k, kLK1, 1.2)));
  CHECK(g_function(k, kLK1, 1e-8) > 1e7);
  CHECK_THROWS_AS(g_function(k, kLK1, 0.0), Error);
  for (double l : {0.1, 0.3, 0.6, 0.9}) {
    CHECK(g_function(k, kLK1, l) == doctest::Approx(lk1_g(l)).epsilon(1e-12));
    CHECK(t_function(k, kLK1, l) == doctest::Approx(lk1_t(l)).epsilon(1e-12));
    CHECK(t_function(k, kLK1, l) == doctest::Approx(t_oracle(log_lk1, kLK1, l)).epsilon(1e-8));
  }
  CHECK_THROWS_AS(t_function(k, kLK1, 1.0), Error);
  const double ls = std::sqrt(std::sqrt(5.0) - 2.0);
  CHECK(lk1_t(ls) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("T tends to kappa_plus at zero") {
  for (const auto& k : {Kernel::laplace(1.0), Kernel::gaussian(0.7).shifted(0.3), Kernel::uniform(0.0, 1.0)}) {
    const double mx = directional_moment(k);
    for (int j = 4; j <= 20; j += 4) {
      const double l = std::ldexp(1.0, -j);
      CHECK(std::abs(t_function(k, kLK1, l) - kLK1.kappa_plus) <= 4.0 * l * (1.0 + std::abs(mx)));
    }
  }
}

TEST_CASE("H and h identities") {
  const auto k = Kernel::gaussian(0.8).shifted(0.2);
  const ModelParams p{3.0, 1.0, 1.0, 0.5};
  for (double l : {0.1, 0.5, 1.3, 2.4}) {
    // H = lambda F' - F with F' = kappa_plus M1.
    const double F = p.kappa_plus * k.exp_moment(0, l) - p.m;
    const double Fp = p.kappa_plus * k.exp_moment(1, l);
    CHECK(h_numerator(k, p, l) == doctest::Approx(l * Fp - F).epsilon(1e-8));
    CHECK(h_numerator(k, p, l) == doctest::Approx(p.m - t_function(k, p, l)).epsilon(1e-12));
    for (double c : {0.5, 2.0, 7.0})
      CHECK(characteristic(k, p, c, l) == doctest::Approx(l * (g_function(k, p, l) - c)).epsilon(1e-10));
  }
}

TEST_CASE("minimal speed of the two-sided exponential") {
  const auto k = Kernel::laplace(1.0);
  const auto rep = minimal_speed(k, kLK1);
  const double exact = std::sqrt(std::sqrt(5.0) - 2.0);
  CHECK(rep.lambda_star == doctest::Approx(exact).epsilon(1e-10));
  CHECK(rep.lambda_star == doctest::Approx(0.4858683).epsilon(1e-7));
  const auto [arg, best] = grid_min(k, kLK1, 1.0 - 1e-6, 1000000);
  CHECK(std::abs(rep.lambda_star - arg) <= 2e-6);
  CHECK(rep.c_star == doctest::Approx(best).epsilon(1e-10));
  CHECK(rep.c_star == doctest::Approx(3.3301).epsilon(1e-4));
  CHECK(rep.c_star == doctest::Approx(kLK1.kappa_plus * k.exp_moment(1, rep.lambda_star)).epsilon(1e-9));
  CHECK(rep.kernel_class == KernelClass::V);
  CHECK(rep.interval_kind == IntervalKind::open_end);
  CHECK(std::isnan(rep.T_at_sigma));
  CHECK(std::abs(g_derivative(k, kLK1, rep.lambda_star)) < 1e-9);
  CHECK(rep.c_star > kLK1.kappa_plus * rep.m_xi);
}

TEST_CASE("uniform kernel on [0,1]") {
  const auto k = Kernel::uniform(0.0, 1.0);
  const auto rep = minimal_speed(k, kLK1);
  CHECK(rep.kernel_class == KernelClass::V);
  CHECK(rep.interval_kind == IntervalKind::unbounded);
  CHECK(rep.m_xi == doctest::Approx(0.5));
  CHECK(rep.c_star > 1.0);
  const auto [arg, best] = grid_min(k, kLK1, 2.0 * rep.lambda_star, 200000);
  CHECK(std::abs(rep.lambda_star - arg) <= 2.0 * rep.lambda_star / 200000);
  CHECK(rep.c_star == doctest::Approx(best).epsilon(1e-9));
  CHECK(std::abs(g_derivative(k, kLK1, rep.lambda_star)) < 1e-8);
}

TEST_CASE("class W for the algebraically damped exponential") {
  const auto k = Kernel::exp_poly(1.0, 3.0, 0.05);
  const double alpha = k.parameter("alpha");
  auto log_a = [&](double s) { return std::log(alpha) - 0.05 * std::abs(s) - std::log1p(std::pow(std::abs(s), 3)); };
  const auto rep = minimal_speed(k, kLK1);
  CHECK(rep.kernel_class == KernelClass::W);
  CHECK(rep.lambda_star == doctest::Approx(0.05));
  CHECK(rep.interval_kind == IntervalKind::closed_end);
  CHECK(rep.T_at_sigma >= kLK1.m);
  CHECK(rep.T_at_sigma < kLK1.kappa_plus);
  CHECK(!rep.critical_equality);
  CHECK(rep.T_at_sigma == doctest::Approx(t_oracle(log_a, kLK1, 0.05)).epsilon(1e-7));
  // G strictly decreasing on (0, sigma].
  double prev = kInf;
  for (int i = 1; i <= 200; ++i) {
    const double g = g_function(k, kLK1, 0.05 * i / 200);
    CHECK(g < prev);
    prev = g;
  }
  CHECK(rep.c_star == doctest::Approx(prev).epsilon(1e-12));
  CHECK(classify(k, kLK1) == KernelClass::W);
  CHECK(root_multiplicity(k, kLK1, rep.c_star) == 1);
  CHECK(root_multiplicity(k, kLK1, rep.c_star + 1.0) == 1);
  // Speed lower bound: c >= kappa_plus int s a e^{lambda s} on (0, lambda*].
  for (int i = 1; i <= 10; ++i) {
    const double l = 0.05 * i / 10;
    CHECK(rep.c_star >= kLK1.kappa_plus * k.exp_moment(1, l));
  }
}

TEST_CASE("classification of the standard examples") {
  CHECK(classify(Kernel::gaussian(1.0), kLK1) == KernelClass::V);
  CHECK(classify(Kernel::laplace(1.0), kLK1) == KernelClass::V);
  const auto heavy = Kernel::exp_poly(1.0, 1.5, 1.0);
  CHECK(t_function(heavy, kLK1, 1.0) == -kInf);
  const auto rep = minimal_speed(heavy, kLK1);
  CHECK(rep.kernel_class == KernelClass::V);
  CHECK(rep.T_at_sigma == -kInf);
  CHECK(rep.lambda_star < 1.0);
}

TEST_CASE("assumption gating") {
  CHECK_THROWS_AS(minimal_speed(Kernel::laplace(1.0), ModelParams{1.0, 2.0, 1.0, 0.0}), Error);
  CHECK_THROWS_AS(minimal_speed(Kernel::exp_poly(0.5, 3.0, 1.0), kLK1), Error);
}

TEST_CASE("speed to abscissa and back") {
  const auto k = Kernel::laplace(1.0);
  const auto rep = minimal_speed(k, kLK1);
  const auto r0 = speed_to_abscissa(k, kLK1, rep.c_star);
  CHECK(r0.lambda_c == rep.lambda_star);
  CHECK(r0.multiplicity == 2);
  // c = 4: root of 2/(1-l^2) - 1 - 4 l by plain bisection.
  double lo = 1e-9, hi = rep.lambda_star;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (2.0 / (1.0 - mid * mid) - 1.0 - 4.0 * mid > 0.0 ? lo : hi) = mid;
  }
  const auto r4 = speed_to_abscissa(k, kLK1, 4.0);
  CHECK(r4.lambda_c == doctest::Approx(lo).epsilon(1e-12));
  CHECK(r4.multiplicity == 1);
  CHECK(characteristic(k, kLK1, 4.0, r4.lambda_c * (1 - 1e-6)) > 0.0);
  CHECK(characteristic(k, kLK1, 4.0, r4.lambda_c * (1 + 1e-6)) < 0.0);
  for (double c : {rep.c_star, rep.c_star + 0.5, 2.0 * rep.c_star}) {
    const auto r = speed_to_abscissa(k, kLK1, c);
    CHECK(abscissa_to_speed(k, kLK1, r.lambda_c) == doctest::Approx(c).epsilon(1e-9));
  }
  CHECK(abscissa_to_speed(k, kLK1, 0.25) == doctest::Approx((2.0 / 0.9375 - 1.0) / 0.25).epsilon(1e-12));
  CHECK(abscissa_to_speed(k, kLK1, 0.25) == doctest::Approx(4.5333).epsilon(1e-4));
  CHECK(abscissa_to_speed(k, kLK1, rep.lambda_star) == doctest::Approx(rep.c_star));
  CHECK(abscissa_to_speed(k, kLK1, 0.1) > abscissa_to_speed(k, kLK1, 0.2));
  CHECK_THROWS_AS(abscissa_to_speed(k, kLK1, 0.6), Error);
  for (double s : {0.05, 0.2, 0.4}) {
    const double c = abscissa_to_speed(k, kLK1, s);
    CHECK(speed_to_abscissa(k, kLK1, c).lambda_c == doctest::Approx(s).epsilon(1e-9));
  }
  try {
    speed_to_abscissa(k, kLK1, rep.c_star - 0.1);
    FAIL("expected no-wave");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::no_wave);
  }
  CHECK(root_multiplicity(k, kLK1, rep.c_star + 1.0) == 1);
}

TEST_CASE("critical value of mu") {
  for (double q : {2.5, 3.0, 4.0}) {
    const auto r = mu_star(q, kLK1);
    CHECK(r.inside_bracket);
    CHECK(r.bracket_lo < r.mu_star);
    CHECK(r.mu_star < r.bracket_hi);
    const auto above = Kernel::exp_poly(1.0, q, r.mu_star * 1.01);
    const auto below = Kernel::exp_poly(1.0, q, r.mu_star * 0.99);
    CHECK(classify(above, kLK1) == KernelClass::V);
    CHECK(classify(below, kLK1) == KernelClass::W);
  }
  const auto tiny = mu_star(4.0, ModelParams{2.0, 1e-6, 1.0, 0.0});
  CHECK(tiny.bracket_lo == doctest::Approx(std::sqrt(2.0)).epsilon(1e-5));
  CHECK(tiny.mu_star >= tiny.bracket_lo);
  CHECK_THROWS_AS(mu_star(2.0, kLK1), Error);
}

TEST_CASE("T at the own endpoint decreases with mu") {
  double prev = kInf;
  for (double mu = 0.05; mu < 3.0; mu += 0.15) {
    const auto k = Kernel::exp_poly(1.0, 3.0, mu);
    const double t = t_function(k, kLK1, mu);
    CHECK(t < prev);
    prev = t;
  }
}

TEST_CASE("unimodality across kernels") {
  std::vector<Kernel> ks{Kernel::laplace(1.0),         Kernel::laplace(0.4),
                         Kernel::gaussian(1.0),        Kernel::gaussian(0.2).shifted(-0.3),
                         Kernel::uniform(0.0, 1.0),    Kernel::uniform(-2.0, 1.0),
                         Kernel::exp_poly(1.0, 3.0, 0.05), Kernel::exp_poly(1.0, 3.0, 0.3),
                         Kernel::exp_poly(1.0, 4.0, 0.5),  Kernel::exp_poly(1.0, 2.5, 0.1),
                         Kernel::exp_poly(1.0, 1.5, 1.0),  Kernel::exp_poly(2.0, 2.0, 1.0),
                         Kernel::radial_exponential(2, 1.0), Kernel::radial_exponential(3, 2.0),
                         Kernel::laplace(1.0).shifted(0.5),  Kernel::laplace(2.0).shifted(-0.2),
                         Kernel::gaussian(2.0).truncated(1.0), Kernel::exp_poly(1.0, 3.0, 0.05).truncated(20.0),
                         Kernel::uniform(-1.0, 1.0),   Kernel::exp_poly(1.0, 5.0, 0.2)};
  int w_count = 0;
  for (const auto& k : ks) {
    CAPTURE(k.family());
    const auto rep = minimal_speed(k, kLK1);
    if (rep.kernel_class == KernelClass::W) ++w_count;
    CHECK(rep.c_star > kLK1.kappa_plus * rep.m_xi);
    const double ls = rep.lambda_star;
    double prev = kInf;
    for (int i = 1; i <= 40; ++i) {
      const double l = ls * std::pow(2.0, -6.0 * (40 - i) / 39.0);
      const double g = g_function(k, kLK1, l);
      CHECK(g <= prev);
      prev = g;
      if (i < 40) CHECK(t_function(k, kLK1, l) > kLK1.m);
    }
    if (rep.kernel_class == KernelClass::V) {
      CHECK(t_function(k, kLK1, ls) == doctest::Approx(kLK1.m).epsilon(1e-8));
      const double top = std::isfinite(rep.sigma_plus) ? rep.sigma_plus : 4.0 * ls;
      prev = rep.c_star;
      for (int i = 1; i <= 20; ++i) {
        const double l = ls + (top - ls) * i / 21.0;
        const double g = g_function(k, kLK1, l);
        CHECK(g >= prev);
        prev = g;
      }
    } else {
      CHECK(rep.T_at_sigma >= kLK1.m - rep.tie_tolerance);
    }
  }
  CHECK(w_count >= 2);
}

TEST_CASE("complex roots stay off the line") {
  const auto k = Kernel::laplace(1.0);
  const auto rep = minimal_speed(k, kLK1);
  for (double c : {rep.c_star, 4.0, 6.0}) {
    const auto r = speed_to_abscissa(k, kLK1, rep, c);
    const auto scan = scan_complex_roots(k, kLK1, c, r.lambda_c);
    CHECK(scan.min_modulus > 1e-6);
  }
  const auto w = Kernel::exp_poly(1.0, 3.0, 0.05);
  const auto rw = minimal_speed(w, kLK1);
  CHECK(scan_complex_roots(w, kLK1, rw.c_star, rw.lambda_star, 0.01, 10.0, 200).min_modulus > 1e-6);
}

TEST_CASE("lowest speed diagnostic and csv") {
  const auto k = Kernel::laplace(1.0);
  CHECK(lowest_speed_bound(k, kLK1, 0.5) == doctest::Approx(2.0 * (4.0 / 3.0 - 1.0) / 0.5));
  std::ostringstream os;
  write_dispersion_csv(os, k, kLK1, 4.0, {0.25, 0.5, 1.5});
  CHECK(os.str().find("lambda,G,T,h") == 0);
  CHECK(os.str().find("inf,nan,inf") != std::string::npos);
}
