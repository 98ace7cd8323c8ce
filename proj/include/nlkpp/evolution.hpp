#pragma once

#include <vector>

#include "nlkpp/kernel.hpp"
#include "nlkpp/profile.hpp"

namespace nlkpp {

enum class InitialShape { constant, step, exponential_tail, samples };

const char* to_string(InitialShape shape);

/// u0 on the line. step: height for s < position, 0 after. exponential_tail:
/// height * min(1, e^{-rate (s - position)}). samples: piecewise linear with constant continuation.
struct InitialCondition {
  InitialShape shape = InitialShape::step;
  double height = 0.0;  // 0 means theta
  double position = 0.0;
  double rate = 1.0;
  double start = 0.0;
  double step = 0.0;
  std::vector<double> values;

  static InitialCondition from_profile(const WaveProfile& profile);
  double operator()(double s, double theta) const;
};

struct EvolutionConfig {
  double dt = 0.01;
  double t_end = 1.0;
  double h = 0.05;
  double x_min = -50.0;
  double x_max = 50.0;
  double snapshot_interval = 0.0;  // 0 means t_end / 200
  bool keep_values = true;         // store u at every snapshot
  bool widen = true;               // grow the grid when a front nears an edge
};

struct Snapshot {
  double t = 0.0;
  double grid_start = 0.0;
  std::vector<double> values;  // empty when keep_values is off
};

struct EvolutionRun {
  double h = 0.0;
  double dt = 0.0;
  double theta = 0.0;
  double level = 0.0;  // theta / 2
  std::vector<Snapshot> snapshots;
  std::vector<double> times;
  std::vector<double> right_front;  // rightmost crossing of level, NaN if none
  std::vector<double> left_front;   // leftmost crossing of level, NaN if none
  double max_value = 0.0;
  double min_value = 0.0;
  int widenings = 0;
  int steps = 0;
};

/// Explicit Euler for u_t = kappa_plus a_plus*u - m u - kappa_local u^2 - kappa_nonlocal u (a_minus*u).
/// Requires dt (kappa_plus + m + 2 kappa_local theta + kappa_nonlocal theta) <= 0.5 and u0 in [0, theta].
EvolutionRun evolve(const KernelPair& pair, const ModelParams& params, const InitialCondition& u0,
                    const EvolutionConfig& config);

/// u(s, t) of a stored snapshot by linear interpolation (constant beyond the grid).
double snapshot_value(const Snapshot& snap, double h, double s);

enum class FrontSide { right, left };

struct SpeedFit {
  double speed = 0.0;  // signed slope of the crossing position
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double t_from = 0.0;
  double t_to = 0.0;
  std::size_t points = 0;
  double burn_in = 0.3;
  double level = 0.0;
};

/// Least-squares slope of the level crossing over the snapshots after the burn-in fraction.
/// level <= 0 means theta / 2 (the recorded crossings); other levels need stored values.
SpeedFit front_speed(const EvolutionRun& run, FrontSide side = FrontSide::right, double burn_in = 0.3,
                     double level = 0.0);

/// Crossing of `level` on a grid: rightmost (right) or leftmost (left), linear interpolation.
double level_crossing(const std::vector<double>& values, double grid_start, double h, double level, FrontSide side);

}  // namespace nlkpp
