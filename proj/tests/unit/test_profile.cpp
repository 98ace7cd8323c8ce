#include <cmath>
#include <vector>

#include "doctest.h"
#include "nlkpp/error.hpp"
#include "nlkpp/laplace.hpp"
#include "nlkpp/profile.hpp"

using namespace nlkpp;

namespace {

const ModelParams kLK1{2.0, 1.0, 1.0, 0.0};

KernelPair lk1_pair() { return {Kernel::laplace(1.0), Kernel::laplace(1.0)}; }

// Largest rise between neighbours, and whether values in (1e-12, theta (1 - 1e-6)) strictly decrease.
struct Shape {
  double max_rise = 0.0;
  bool strict = true;
};

Shape shape_of(const WaveProfile& w) {
  Shape s;
  for (std::size_t i = 1; i < w.size(); ++i) {
    const double a = w.increasing ? w.values[w.size() - i] : w.values[i - 1];
    const double b = w.increasing ? w.values[w.size() - 1 - i] : w.values[i];
    s.max_rise = std::max(s.max_rise, b - a);
    const bool band = b > 1e-12 && a < w.theta * (1.0 - 1e-6);
    if (band && !(b < a)) s.strict = false;
  }
  return s;
}

WaveProfile synthetic(double start, double h, std::size_t n, double theta, double rate, double shift = 0.0) {
  WaveProfile w;
  w.grid_start = start;
  w.h = h;
  w.theta = theta;
  w.lambda_c = rate;
  w.lambda_discrete = rate;
  w.speed = w.speed_discrete = 4.0;
  for (std::size_t i = 0; i < n; ++i) w.values.push_back(std::min(theta, std::exp(-rate * (w.s(i) - shift))));
  return w;
}

}  // namespace

TEST_CASE("constant states zero the wave operator") {
  WaveProfile w = synthetic(-20.0, 0.01, 4001, 1.0, 1.0);
  w.lambda_discrete = 0.0;  // constant closure on both sides
  std::fill(w.values.begin(), w.values.end(), 1.0);
  CHECK(residual(w, lk1_pair(), kLK1) <= 1e-12);
  std::fill(w.values.begin(), w.values.end(), 0.0);
  CHECK(residual(w, lk1_pair(), kLK1) == 0.0);

  // Nonlocal competition: theta = (3 - 1) / (0.5 + 0.5).
  const ModelParams nl{3.0, 1.0, 0.5, 0.5};
  const KernelPair pair{Kernel::gaussian(1.0).shifted(0.3), Kernel::gaussian(0.5)};
  WaveProfile c = synthetic(-20.0, 0.01, 4001, 2.0, 0.0);
  std::fill(c.values.begin(), c.values.end(), 2.0);
  CHECK(residual(c, pair, nl) <= 1e-12);
}

TEST_CASE("pure exponential tail matches the characteristic function") {
  // Away from the theta side, a*e^{-l s} = A(l) e^{-l s}; the residual of e^{-l s} over e^{-l s} is h_c(l)
  // up to the O(h^2) centered-difference error.
  const double l = 0.3, c = 4.0;
  WaveProfile w = synthetic(-60.0, 0.01, 12001, std::exp(0.3 * 60.0), l);
  w.speed_discrete = c;
  const ModelParams lin{2.0, 1.0, 1e-300, 0.0};
  const auto F = residual_vector(w, lk1_pair(), lin);
  const double hc = 2.0 / (1.0 - l * l) - 1.0 - c * l;
  double worst = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w.s(i) > -20.0) worst = std::max(worst, std::abs(F[i] / w.values[i] - hc));
  CHECK(worst <= 1e-6);
}

TEST_CASE("LK1 profiles at c*, 1.1 c* and 2 c*") {
  const auto rep = minimal_speed(Kernel::laplace(1.0), kLK1);
  for (double f : {1.0, 1.1, 2.0}) {
    CAPTURE(f);
    const double c = f * rep.c_star;
    const auto w = solve_profile(lk1_pair(), kLK1, c);
    const auto root = speed_to_abscissa(Kernel::laplace(1.0), kLK1, c);
    CHECK(w.residual_sup <= 1e-6);
    CHECK(residual(w, lk1_pair(), kLK1) == doctest::Approx(w.residual_sup));
    CHECK(w.lambda_c == doctest::Approx(root.lambda_c).epsilon(1e-12));
    CHECK(w.multiplicity == root.multiplicity);
    CHECK(std::abs(w.values.front() - 1.0) <= 1e-4);
    CHECK(w.values.back() <= 1e-4);
    const auto sh = shape_of(w);
    CHECK(sh.max_rise <= 1e-12);
    CHECK(sh.strict);
    CHECK(profile_value(w, 0.0) == doctest::Approx(0.5).epsilon(1e-6));
    const auto fit = tail_asymptotics(w);
    CHECK(std::abs(fit.rate - w.lambda_c) <= 0.02 * w.lambda_c);
    CHECK(std::abs(fit.j_estimate - root.multiplicity) <= 0.15);
    CHECK(fit.points >= 50);
    CHECK(fit.window_hi <= w.s(w.size() - w.size() / 10));
  }
}

TEST_CASE("spec example: c = c* + 1") {
  const auto rep = minimal_speed(Kernel::laplace(1.0), kLK1);
  const auto w = solve_profile(lk1_pair(), kLK1, rep.c_star + 1.0);
  CHECK(w.residual_sup <= 1e-6);
  CHECK(std::abs(w.values.front() - 1.0) <= 1e-4);
  CHECK(w.values.back() <= 1e-4);
  CHECK(w.monotone_sweeps > 0);
}

TEST_CASE("speed preconditions") {
  CHECK_THROWS_WITH_AS(solve_profile(lk1_pair(), kLK1, 0.0), doctest::Contains("c = 0"), Error);
  try {
    solve_profile(lk1_pair(), kLK1, 3.0);
    FAIL("expected no_wave");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::no_wave);
  }
  try {
    solve_profile(lk1_pair(), kLK1, 0.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::c_zero_unsupported);
  }
  // Q2 fails: nonlocal competition kernel heavier-tailed than a_plus.
  try {
    solve_profile({Kernel::gaussian(1.0), Kernel::laplace(2.0)}, ModelParams{3.0, 1.0, 0.5, 0.5}, 8.0);
    FAIL("expected assumption_failed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::assumption_failed);
  }
}

TEST_CASE("a bump at the front is detected by the residual") {
  auto w = solve_profile(lk1_pair(), kLK1, 4.0);
  REQUIRE(w.residual_sup <= 1e-6);
  for (std::size_t i = 0; i < w.size(); ++i) w.values[i] += 0.01 * std::exp(-w.s(i) * w.s(i));
  CHECK(residual(w, lk1_pair(), kLK1) > 1e-3);
}

TEST_CASE("reflected kernel with reflected speed gives the reflected profile") {
  const KernelPair pair{Kernel::laplace(1.0).shifted(0.5), Kernel::laplace(1.0)};
  const KernelPair refl{pair.a_plus.reflected(), pair.a_minus.reflected()};
  const double c = 1.2 * minimal_speed(pair.a_plus, kLK1).c_star;
  const auto w1 = solve_profile(pair, kLK1, c);
  const auto w2 = solve_profile(refl, kLK1, -c);
  CHECK_FALSE(w1.increasing);
  CHECK(w2.increasing);
  CHECK(w2.residual_sup <= 1e-6);
  CHECK(w2.lambda_c == doctest::Approx(w1.lambda_c).epsilon(1e-12));
  double worst = 0.0;
  for (std::size_t i = 0; i < w1.size(); ++i)
    if (std::abs(w1.s(i)) < 30.0) worst = std::max(worst, std::abs(w1.values[i] - profile_value(w2, -w1.s(i))));
  CHECK(worst <= 1e-6);
  const auto fit = tail_asymptotics(w2);
  CHECK(fit.rate == doctest::Approx(w2.lambda_c).epsilon(0.02));
  CHECK(shape_of(w2).strict);
  // Speeds between -c*(reflected) and c* admit no wave.
  CHECK_THROWS_AS(solve_profile(pair, kLK1, 0.5), Error);
}

TEST_CASE("nonlocal competition at c* and above") {
  const ModelParams nl{3.0, 1.0, 0.5, 0.5};
  const KernelPair pair{Kernel::gaussian(1.0).shifted(0.3), Kernel::gaussian(0.5)};
  const auto rep = minimal_speed(pair.a_plus, nl);
  for (double f : {1.0, 1.3}) {
    CAPTURE(f);
    const auto w = solve_profile(pair, nl, f * rep.c_star);
    CHECK(w.residual_sup <= 1e-6);
    CHECK(std::abs(w.values.front() - 2.0) <= 1e-4);
    CHECK(shape_of(w).max_rise <= 1e-8);
    CHECK(shape_of(w).strict);
    const auto fit = tail_asymptotics(w);
    CHECK(fit.rate == doctest::Approx(w.lambda_c).epsilon(0.02));
    CHECK(std::abs(fit.j_estimate - w.multiplicity) <= 0.15);
  }
}

TEST_CASE("W-class kernel above c*") {
  const KernelPair pair{Kernel::exp_poly(1.0, 3.0, 0.05), Kernel::laplace(1.0)};
  const auto rep = minimal_speed(pair.a_plus, kLK1);
  REQUIRE(rep.kernel_class == KernelClass::W);
  const auto w = solve_profile(pair, kLK1, 1.1 * rep.c_star);
  CHECK(w.residual_sup <= 1e-6);
  CHECK(w.multiplicity == 1);
  const auto fit = tail_asymptotics(w);
  CHECK(fit.rate == doctest::Approx(w.lambda_c).epsilon(0.02));
  CHECK(std::abs(fit.j_estimate - 1.0) <= 0.15);
}

TEST_CASE("tail fit of an exact exponential") {
  const auto w = synthetic(-10.0, 0.01, 6001, 1.0, 1.0);
  const auto fit = tail_asymptotics(w);
  CHECK(fit.rate == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fit.j_estimate == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fit.D_estimate == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fit.fit_residual <= 1e-9);
  CHECK(fit.window_hi <= 40.0);

  // s e^{-s}: slope 1 against log s, prefactor 1.
  WaveProfile p = w;
  for (std::size_t i = 0; i < p.size(); ++i) p.values[i] = p.s(i) > 0.0 ? std::min(1.0, p.s(i) * std::exp(-p.s(i))) : 1.0;
  p.values[0] = 1.0;
  const auto f2 = tail_asymptotics(p);
  CHECK(f2.j_estimate == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(f2.D_estimate == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(f2.rate == doctest::Approx(1.0).epsilon(1e-9));

  auto short_tail = synthetic(-1.0, 0.5, 40, 1.0, 1.0);
  try {
    tail_asymptotics(short_tail);
    FAIL("expected tail_underresolved");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::tail_underresolved);
  }
}

TEST_CASE("shift normalization") {
  const auto base = synthetic(-10.0, 0.01, 6001, 1.0, 1.0);
  // min(1, e^{-(s - q)}) crosses 1/2 at q + log 2; unit-D puts the prefactor at 1, i.e. q = 0.
  for (double q : {-1.3, 0.0, 1.7}) {
    CAPTURE(q);
    auto w = synthetic(-10.0, 0.01, 6001, 1.0, 1.0, q);
    CHECK(half_theta_crossing(w) == doctest::Approx(q + std::log(2.0)).epsilon(1e-4));
    const auto a = normalize_shift(w, ShiftMode::half_theta);
    CHECK(std::abs(profile_value(a, 0.0) - 0.5) <= 1e-4);
    CHECK(a.shift_mode == ShiftMode::half_theta);
    const auto b = normalize_shift(w, ShiftMode::unit_d);
    CHECK(tail_asymptotics(b).D_estimate == doctest::Approx(1.0).epsilon(1e-8));
    // Normalizing the base profile or its shift gives the same function.
    const auto nb = normalize_shift(base, ShiftMode::unit_d);
    for (double s : {-2.0, 0.0, 0.5, 3.0}) CHECK(profile_value(b, s) == doctest::Approx(profile_value(nb, s)).epsilon(1e-6));
    const auto c = normalize_shift(a, ShiftMode::half_theta);
    CHECK(std::abs(c.grid_start - a.grid_start) <= w.h * w.h);
  }
  // A unit shift multiplies D by e^{lambda}.
  const auto w0 = synthetic(-10.0, 0.01, 6001, 1.0, 1.0, 0.5);
  const auto w1 = synthetic(-10.0, 0.01, 6001, 1.0, 1.0, 1.5);
  CHECK(tail_asymptotics(w1).D_estimate / tail_asymptotics(w0).D_estimate == doctest::Approx(std::exp(1.0)).epsilon(1e-8));

  WaveProfile flat = base;
  std::fill(flat.values.begin(), flat.values.end(), 0.2);
  CHECK_THROWS_AS(normalize_shift(flat, ShiftMode::half_theta), Error);
  CHECK(std::string(to_string(ShiftMode::unit_d)) == "unit-D");
}

TEST_CASE("compare_up_to_shift") {
  auto p1 = solve_profile(lk1_pair(), kLK1, 4.0);
  auto p2 = p1;
  p2.grid_start += 1.7;
  const auto cmp = compare_up_to_shift(p1, p2);
  CHECK(cmp.distance <= 1e-8);
  CHECK(cmp.shift == doctest::Approx(1.7).epsilon(1e-6));

  auto p5 = solve_profile(lk1_pair(), kLK1, 5.0);
  CHECK_THROWS_AS(compare_up_to_shift(p1, p5), Error);
}

TEST_CASE("uniqueness: anchors 0 and 5 agree up to shift") {
  ProfileConfig a;
  a.normalize = ShiftMode::none;
  ProfileConfig b = a;
  b.anchor = 5.0;
  const auto w1 = solve_profile(lk1_pair(), kLK1, 4.0, a);
  const auto w2 = solve_profile(lk1_pair(), kLK1, 4.0, b);
  CHECK(std::abs(half_theta_crossing(w2) - half_theta_crossing(w1)) > 1.0);
  const auto cmp = compare_up_to_shift(w1, w2);
  CHECK(cmp.distance <= 1e-5);
  // Shift equivariance after normalization.
  const auto n1 = normalize_shift(w1, ShiftMode::half_theta);
  const auto n2 = normalize_shift(w2, ShiftMode::half_theta);
  double worst = 0.0;
  for (std::size_t i = 0; i < n1.size(); ++i)
    if (std::abs(n1.s(i)) < 30.0) worst = std::max(worst, std::abs(n1.values[i] - profile_value(n2, n1.s(i))));
  CHECK(worst <= 1e-5);
}

TEST_CASE("profile lies below the decay envelope") {
  const auto w = solve_profile(lk1_pair(), kLK1, 4.0);
  const auto f = LaplaceFunction::from_samples(w.grid_start, w.h, w.values, w.lambda_discrete);
  for (double frac : {0.3, 0.6, 0.9}) {
    const double l = frac * w.lambda_c;
    const double C = decay_envelope(f, l);
    for (std::size_t i = 0; i < w.size(); i += 7) CHECK_LE(w.values[i], C * std::exp(-l * w.s(i)) * (1.0 + 1e-9));
  }
}
