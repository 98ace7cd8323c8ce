#pragma once

#include <ostream>
#include <vector>

#include "nlkpp/dispersion.hpp"
#include "nlkpp/kernel.hpp"

namespace nlkpp {

/// The kernel times the indicator of (-inf, R), not renormalized.
Kernel truncate(const Kernel& kernel, double radius);

/// (kappa_plus A_plus - m) / (kappa_nonlocal A_minus + kappa_local). Requires kappa_plus A_plus > m.
double theta_r(const ModelParams& params, double mass_plus, double mass_minus);

struct TruncationLevel {
  double radius = 0.0;
  double mass_plus = 0.0;
  double mass_minus = 0.0;
  double theta_r = 0.0;
  double lambda_star = 0.0;
  double c_star = 0.0;
  double gap = 0.0;  // c* of the untruncated kernel minus c* of this level
};

struct TruncationTrace {
  std::vector<TruncationLevel> levels;
  DispersionReport limit;      // untruncated kernel
  double lambda1_bound = 0.0;  // lower bound for every truncated lambda*
  bool strictly_increasing = true;
  bool above_lambda1 = true;
  bool theta_bounded = true;   // theta_R <= theta at every level
  // Domination G_n <= G_{n+1} <= G on the sampled lambdas; largest excess found (0 if none).
  bool dominated = true;
  double domination_excess = 0.0;
  std::size_t domination_samples = 0;
  double final_gap = 0.0;
};

/// (kappa_plus A_plus(R_1) - m) / (kappa_plus int |s| a_plus + |G(lambda*)|).
double lambda1_bound(const Kernel& a_plus, const ModelParams& params, double first_mass_plus);

/// Minimal speeds of the kernels truncated at each radius. Radii must increase strictly and
/// satisfy kappa_plus A_plus(R) > m. Levels run on up to `workers` threads.
TruncationTrace c_star_sequence(const KernelPair& pair, const ModelParams& params, const std::vector<double>& radii,
                                int workers = 1, int domination_samples = 200);

/// CSV "R,A_plus,theta_R,lambda_star,c_star,gap".
void write_truncation_csv(std::ostream& os, const TruncationTrace& trace);

}  // namespace nlkpp
