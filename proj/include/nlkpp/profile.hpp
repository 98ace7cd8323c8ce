#pragma once

#include <string>
#include <vector>

#include "nlkpp/dispersion.hpp"
#include "nlkpp/kernel.hpp"

namespace nlkpp {

enum class ShiftMode { none, half_theta, unit_d };

const char* to_string(ShiftMode mode);

struct WaveProfile {
  double grid_start = 0.0;  // s_i = grid_start + i h
  double h = 0.0;
  std::vector<double> values;
  double theta = 0.0;
  double speed = 0.0;           // requested speed
  double speed_discrete = 0.0;  // speed of the discrete problem actually solved
  double lambda_c = 0.0;        // abscissa from the dispersion relation
  double lambda_discrete = 0.0; // decay rate of the discrete tail closure
  int multiplicity = 1;
  bool increasing = false;      // profile rises from 0 to theta (speeds on the reflected side)
  double residual_sup = 0.0;
  ShiftMode shift_mode = ShiftMode::none;

  // Solver diagnostics.
  int monotone_sweeps = 0;
  double monotone_last_change = 0.0;
  int monotone_violations = 0;  // sweeps that would have increased some value by more than 1e-12
  double monotone_max_increase = 0.0;  // largest such increase relative to the value (clamped)
  int newton_steps = 0;
  int gmres_iterations = 0;

  std::size_t size() const { return values.size(); }
  double s(std::size_t i) const { return grid_start + h * static_cast<double>(i); }
  double s_end() const { return s(values.size() - 1); }
};

struct ProfileConfig {
  double grid_l = 0.0;       // half-width; 0 means 40 / lambda_c
  double grid_h = 0.0;       // step; 0 means min(0.01, 1/(20 lambda_c))
  double anchor = 0.0;       // s0 of the initial supersolution
  double tol = 1e-10;        // Newton: relative residual target
  double residual_tol = 1e-6;  // accepted residual_sup
  int max_sweeps = 3000;     // monotone iteration cap before Newton takes over
  double sweep_tol = 1e-9;   // monotone iteration stops below this sup change
  int max_newton = 40;
  ShiftMode normalize = ShiftMode::half_theta;
};

/// Solves c psi' + kappa_plus (a_plus * psi) - m psi - kappa_nonlocal psi (a_minus * psi) - kappa_local psi^2 = 0.
/// c >= c* gives a decreasing profile; c <= -c*(reflected kernel) gives an increasing one.
WaveProfile solve_profile(const KernelPair& pair, const ModelParams& params, double c, const ProfileConfig& config = {});

/// Sup over the grid of the discrete wave operator, at speed_discrete.
double residual(const WaveProfile& profile, const KernelPair& pair, const ModelParams& params);

/// Pointwise discrete wave operator (same discretization as the solver).
std::vector<double> residual_vector(const WaveProfile& profile, const KernelPair& pair, const ModelParams& params);

struct TailFit {
  double rate = 0.0;
  double j_estimate = 1.0;
  double D_estimate = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::size_t points = 0;
  double fit_residual = 0.0;
};

/// Regression of log psi + lambda_c s on log s over the tail window, then a rate fit of
/// log psi - (j - 1) log s on s. Coordinates are the profile's own (tail direction).
TailFit tail_asymptotics(const WaveProfile& profile, double lo_value = 1e-12, double hi_value = 1e-3);

/// Translates the profile: half_theta puts psi(0) = theta/2, unit_d makes the tail prefactor 1.
WaveProfile normalize_shift(const WaveProfile& profile, ShiftMode mode);

/// Location of the theta/2 crossing by linear interpolation.
double half_theta_crossing(const WaveProfile& profile);

/// Cubic-spline value of the profile at s, with the boundary values beyond the grid.
double profile_value(const WaveProfile& profile, double s);
std::vector<double> profile_values(const WaveProfile& profile, const std::vector<double>& s);

struct ShiftComparison {
  double distance = 0.0;
  double shift = 0.0;  // p2(s + shift) ~ p1(s)
};

/// min over q of sup |p1(s) - p2(s + q)| on the common interior. Rejects different speeds.
ShiftComparison compare_up_to_shift(const WaveProfile& p1, const WaveProfile& p2);

}  // namespace nlkpp
