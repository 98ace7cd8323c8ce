#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "nlkpp/error.hpp"
#include "nlkpp/truncation.hpp"

using namespace nlkpp;

namespace {

const ModelParams kLK1{2.0, 1.0, 1.0, 0.0};

// int_{-inf}^{R} e^{-|s|}/2 e^{lambda s} ds for R >= 0 and lambda != 1.
double truncated_laplace_transform(double lambda, double r) {
  return 0.5 / (1.0 + lambda) + 0.5 * (std::exp((lambda - 1.0) * r) - 1.0) / (lambda - 1.0);
}

// Grid scan then Brent refinement of G on the truncated transform.
std::pair<double, double> oracle_min(double r) {
  auto g = [r](double l) { return (2.0 * truncated_laplace_transform(l, r) - 1.0) / l; };
  double best = 0.01;
  for (double l = 0.01; l < 5.0; l += 0.001)
    if (std::abs(l - 1.0) > 1e-6 && g(l) < g(best)) best = l;
  auto [lam, val] = boost::math::tools::brent_find_minima(g, best - 0.002, best + 0.002, 52);
  return {lam, val};
}

}  // namespace

TEST_CASE("truncated kernel masses") {
  const Kernel k = Kernel::laplace(1.0);
  CHECK(truncate(k, 0.0).mass() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(truncate(k, 50.0).mass() == doctest::Approx(1.0 - 0.5 * std::exp(-50.0)).epsilon(1e-14));
  CHECK(std::isfinite(truncate(k, 3.0).exp_moment(0, 10.0)));
  CHECK(truncate(k, 3.0).exp_moment(0, 10.0) == doctest::Approx(truncated_laplace_transform(10.0, 3.0)).epsilon(1e-10));
  CHECK_THROWS_AS(truncate(k, kInf), Error);
}

TEST_CASE("theta_R") {
  CHECK(theta_r(kLK1, 1.0, 1.0) == doctest::Approx(1.0));
  CHECK(theta_r(kLK1, 0.9, 1.0) == doctest::Approx(0.8));
  CHECK_THROWS_AS(theta_r(kLK1, 0.4, 1.0), Error);
  CHECK_THROWS_AS(theta_r(kLK1, 0.5, 1.0), Error);
  const ModelParams nl{3.0, 1.0, 0.5, 0.5};
  CHECK(theta_r(nl, 0.9, 0.8) == doctest::Approx((2.7 - 1.0) / (0.4 + 0.5)));
}

TEST_CASE("LK1 truncated speeds increase to c*") {
  const KernelPair pair{Kernel::laplace(1.0), Kernel::laplace(1.0)};
  const std::vector<double> radii{2.0, 5.0, 10.0, 20.0, 40.0};
  const TruncationTrace tr = c_star_sequence(pair, kLK1, radii, 3);
  REQUIRE(tr.levels.size() == radii.size());
  CHECK(tr.strictly_increasing);
  CHECK(tr.final_gap <= 1e-6);
  CHECK(tr.dominated);
  CHECK(tr.domination_samples == 200);
  CHECK(tr.above_lambda1);
  CHECK(tr.theta_bounded);
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const auto [lam, c] = oracle_min(radii[i]);
    CHECK(tr.levels[i].c_star == doctest::Approx(c).epsilon(1e-9));
    CHECK(tr.levels[i].lambda_star == doctest::Approx(lam).epsilon(1e-6));
    CHECK(tr.levels[i].c_star <= tr.limit.c_star);
  }
  // lambda_1 = (2 A(2) - 1) / (2 * 1 + c*).
  const double a2 = 1.0 - 0.5 * std::exp(-2.0);
  CHECK(tr.lambda1_bound == doctest::Approx((2.0 * a2 - 1.0) / (2.0 + tr.limit.c_star)));

  // Same trace with one worker.
  const TruncationTrace serial = c_star_sequence(pair, kLK1, radii, 1);
  for (std::size_t i = 0; i < radii.size(); ++i) CHECK(serial.levels[i].c_star == tr.levels[i].c_star);
}

TEST_CASE("truncations of a class W kernel are class V") {
  const Kernel w = Kernel::exp_poly(1.0, 3.0, 0.05);
  const KernelPair pair{w, w};
  const std::vector<double> radii{5.0, 20.0, 80.0, 320.0, 1280.0};
  const TruncationTrace tr = c_star_sequence(pair, kLK1, radii, 2);
  CHECK(tr.limit.kernel_class == KernelClass::W);
  CHECK(tr.strictly_increasing);
  CHECK(tr.dominated);
  for (const auto& lv : tr.levels) {
    CHECK(classify(truncate(w, lv.radius), kLK1) == KernelClass::V);
    CHECK(lv.c_star < tr.limit.c_star);
  }
}

TEST_CASE("truncation preconditions and CSV") {
  const KernelPair pair{Kernel::laplace(1.0), Kernel::laplace(1.0)};
  CHECK_THROWS_AS(c_star_sequence(pair, kLK1, {0.0, 5.0}), Error);
  CHECK_THROWS_AS(c_star_sequence(pair, kLK1, {5.0, 2.0}), Error);
  std::ostringstream os;
  write_truncation_csv(os, c_star_sequence(pair, kLK1, {2.0, 5.0}));
  const std::string csv = os.str();
  CHECK(csv.substr(0, csv.find('\n')) == "R,A_plus,theta_R,lambda_star,c_star,gap");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
