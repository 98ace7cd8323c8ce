#include "nlkpp/truncation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "nlkpp/error.hpp"

namespace nlkpp {

Kernel truncate(const Kernel& kernel, double radius) {
  require(std::isfinite(radius), "truncate: radius must be finite");
  return kernel.truncated(radius);
}

double theta_r(const ModelParams& params, double mass_plus, double mass_minus) {
  if (!(params.kappa_plus * mass_plus > params.m)) {
    std::ostringstream os;
    os << "theta_R needs kappa_plus A_plus > m, got " << params.kappa_plus * mass_plus << " <= " << params.m;
    fail(ErrorCode::invalid_argument, os.str());
  }
  return (params.kappa_plus * mass_plus - params.m) / (params.kappa_nonlocal * mass_minus + params.kappa_local);
}

double lambda1_bound(const Kernel& a_plus, const ModelParams& params, double first_mass_plus) {
  const DispersionReport rep = minimal_speed(a_plus, params);
  return (params.kappa_plus * first_mass_plus - params.m) /
         (params.kappa_plus * a_plus.first_abs_moment() + std::abs(rep.c_star));
}

TruncationTrace c_star_sequence(const KernelPair& pair, const ModelParams& params, const std::vector<double>& radii,
                                int workers, int domination_samples) {
  params.validate();
  require(!radii.empty(), "c_star_sequence: no radii");
  for (std::size_t i = 1; i < radii.size(); ++i)
    require(radii[i] > radii[i - 1], "c_star_sequence: radii must increase strictly");

  TruncationTrace tr;
  tr.limit = minimal_speed(pair.a_plus, params);
  const double th = theta(params);
  const std::size_t n = radii.size();
  tr.levels.resize(n);
  std::vector<Kernel> cut;
  for (std::size_t i = 0; i < n; ++i) {
    auto& lv = tr.levels[i];
    cut.push_back(truncate(pair.a_plus, radii[i]));
    lv.radius = radii[i];
    lv.mass_plus = cut.back().mass();
    lv.mass_minus = truncate(pair.a_minus, radii[i]).mass();
    lv.theta_r = theta_r(params, lv.mass_plus, lv.mass_minus);
  }

  // Levels are independent; each worker takes the next unclaimed index.
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto work = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        const DispersionReport r = minimal_speed(cut[i], params);
        tr.levels[i].lambda_star = r.lambda_star;
        tr.levels[i].c_star = r.c_star;
        tr.levels[i].gap = tr.limit.c_star - r.c_star;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::clamp(workers, 1, static_cast<int>(n)));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  tr.lambda1_bound = lambda1_bound(pair.a_plus, params, tr.levels.front().mass_plus);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& lv = tr.levels[i];
    if (i > 0 && !(lv.c_star > tr.levels[i - 1].c_star)) tr.strictly_increasing = false;
    if (!(lv.lambda_star > tr.lambda1_bound)) tr.above_lambda1 = false;
    if (lv.theta_r > th) tr.theta_bounded = false;
  }
  tr.final_gap = std::abs(tr.levels.back().gap);

  // Sample lambda on (0, 3 lambda*], capped at the abscissa of the limit kernel.
  double top = 3.0 * tr.limit.lambda_star;
  if (std::isfinite(tr.limit.sigma_plus)) top = std::min(top, tr.limit.sigma_plus);
  for (int k = 1; k <= domination_samples; ++k) {
    const double lam = top * k / domination_samples;
    double prev = g_function(cut[0], params, lam);
    auto check = [&](double next_g) {
      const double excess = prev - next_g;
      if (excess > 1e-12 * std::max(1.0, std::abs(next_g))) {
        tr.dominated = false;
        tr.domination_excess = std::max(tr.domination_excess, excess);
      }
      prev = next_g;
    };
    for (std::size_t i = 1; i < n; ++i) check(g_function(cut[i], params, lam));
    check(g_function(pair.a_plus, params, lam));
    ++tr.domination_samples;
  }
  return tr;
}

void write_truncation_csv(std::ostream& os, const TruncationTrace& trace) {
  const auto old = os.precision(17);
  os << "R,A_plus,theta_R,lambda_star,c_star,gap\n";
  for (const auto& lv : trace.levels)
    os << lv.radius << ',' << lv.mass_plus << ',' << lv.theta_r << ',' << lv.lambda_star << ',' << lv.c_star << ','
       << lv.gap << '\n';
  os.precision(old);
}

}  // namespace nlkpp
