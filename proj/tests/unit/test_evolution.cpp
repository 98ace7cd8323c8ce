#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "nlkpp/dispersion.hpp"
#include "nlkpp/error.hpp"
#include "nlkpp/evolution.hpp"

using namespace nlkpp;

namespace {

const ModelParams kLK1{2.0, 1.0, 1.0, 0.0};

KernelPair lk1_pair() { return {Kernel::laplace(1.0), Kernel::laplace(1.0)}; }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::internal;
}

InitialCondition step_at(double position, double height = 0.0) {
  InitialCondition ic;
  ic.shape = InitialShape::step;
  ic.position = position;
  ic.height = height;
  return ic;
}

}  // namespace

TEST_CASE("constant states are fixed points") {
  EvolutionConfig cfg;
  cfg.t_end = 2.0;
  InitialCondition top;
  top.shape = InitialShape::constant;
  top.height = 1.0;
  const EvolutionRun a = evolve(lk1_pair(), kLK1, top, cfg);
  for (const auto& s : a.snapshots)
    for (double v : s.values) REQUIRE(std::abs(v - 1.0) <= 1e-12);

  InitialCondition zero = top;
  zero.height = 0.0;
  const EvolutionRun b = evolve(lk1_pair(), kLK1, zero, cfg);
  CHECK(b.max_value == 0.0);
  CHECK(b.min_value == 0.0);
}

TEST_CASE("a travelling wave is transported at its speed") {
  const WaveProfile w = solve_profile(lk1_pair(), kLK1, 4.0);
  EvolutionConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 2.0;
  cfg.h = w.h;
  cfg.x_min = w.grid_start;
  cfg.x_max = w.s_end();
  cfg.snapshot_interval = 0.05;
  const EvolutionRun run = evolve(lk1_pair(), kLK1, InitialCondition::from_profile(w), cfg);
  double err = 0.0;
  for (const auto& s : run.snapshots) {
    std::vector<double> x(s.values.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = s.grid_start + w.h * static_cast<double>(i) - 4.0 * s.t;
    const std::vector<double> ref = profile_values(w, x);
    for (std::size_t i = 0; i < x.size(); ++i) err = std::max(err, std::abs(s.values[i] - ref[i]));
  }
  CHECK(err <= 1e-3);
  const SpeedFit fit = front_speed(run);
  CHECK(std::abs(fit.speed - 4.0) <= 0.02 * 4.0);
  CHECK(fit.points >= 10);
  CHECK(fit.t_from >= 0.3 * 2.0 - 1e-12);
}

TEST_CASE("step data spread at the minimal speed") {
  const double cs = minimal_speed(Kernel::laplace(1.0), kLK1).c_star;
  EvolutionConfig cfg;
  cfg.t_end = 100.0;
  cfg.x_max = 100.0;
  cfg.keep_values = false;
  const EvolutionRun run = evolve(lk1_pair(), kLK1, step_at(0.0), cfg);
  const SpeedFit fit = front_speed(run);
  CHECK(std::abs(fit.speed - cs) <= 0.03 * cs);
  CHECK(fit.speed >= 0.97 * cs);
  CHECK(run.widenings > 0);
  CHECK(run.max_value <= 1.0 + 1e-6);
  for (std::size_t k = 1; k < run.right_front.size(); ++k) CHECK(run.right_front[k] >= run.right_front[k - 1]);
}

TEST_CASE("a symmetric kernel spreads a bump symmetrically") {
  InitialCondition bump;
  bump.shape = InitialShape::samples;
  bump.start = -5.0;
  bump.step = 0.05;
  bump.values.assign(201, 1.0);
  bump.values.front() = bump.values.back() = 0.0;
  EvolutionConfig cfg;
  cfg.t_end = 20.0;
  cfg.keep_values = false;
  const EvolutionRun run = evolve(lk1_pair(), kLK1, bump, cfg);
  const double right = front_speed(run, FrontSide::right).speed;
  const double left = front_speed(run, FrontSide::left).speed;
  CHECK(right > 0.0);
  CHECK(left < 0.0);
  CHECK(std::abs(right + left) <= 1e-6 * right);
}

TEST_CASE("ordered data stay ordered") {
  EvolutionConfig cfg;
  cfg.t_end = 10.0;
  cfg.x_max = 100.0;
  cfg.widen = false;
  cfg.snapshot_interval = 0.5;
  const EvolutionRun lo = evolve(lk1_pair(), kLK1, step_at(-2.0, 0.6), cfg);
  const EvolutionRun hi = evolve(lk1_pair(), kLK1, step_at(0.0), cfg);
  REQUIRE(lo.snapshots.size() == hi.snapshots.size());
  double worst = -1.0;
  for (std::size_t k = 0; k < lo.snapshots.size(); ++k)
    for (std::size_t i = 0; i < lo.snapshots[k].values.size(); ++i)
      worst = std::max(worst, lo.snapshots[k].values[i] - hi.snapshots[k].values[i]);
  CHECK(worst <= 1e-8);
}

TEST_CASE("data near theta stay below theta") {
  InitialCondition ic;
  ic.shape = InitialShape::samples;
  ic.start = -50.0;
  ic.step = 0.5;
  for (int i = 0; i <= 200; ++i) ic.values.push_back(0.75 + 0.25 * std::abs(std::sin(0.37 * i)));
  EvolutionConfig cfg;
  cfg.t_end = 5.0;
  const EvolutionRun run = evolve(lk1_pair(), kLK1, ic, cfg);
  CHECK(run.max_value <= 1.0 + 1e-6);
  CHECK(run.min_value >= 0.75 - 1e-12);
}

TEST_CASE("evolution input checks") {
  EvolutionConfig cfg;
  cfg.dt = 0.2;  // dt (2 + 1 + 2) = 1 > 0.5
  CHECK(code_of([&] { evolve(lk1_pair(), kLK1, step_at(0.0), cfg); }) == ErrorCode::invalid_argument);
  cfg.dt = 0.1;  // exactly at the guard
  cfg.t_end = 0.2;
  CHECK_NOTHROW(evolve(lk1_pair(), kLK1, step_at(0.0), cfg));
  CHECK(code_of([&] { evolve(lk1_pair(), kLK1, step_at(0.0, 1.5), cfg); }) == ErrorCode::invalid_argument);

  EvolutionConfig small;
  small.t_end = 30.0;
  small.x_max = 20.0;
  small.widen = false;
  small.keep_values = false;
  const EvolutionRun run = evolve(lk1_pair(), kLK1, step_at(0.0), small);
  CHECK(code_of([&] { front_speed(run); }) == ErrorCode::front_left_domain);

  EvolutionConfig few;
  few.t_end = 1.0;
  few.snapshot_interval = 0.5;
  const EvolutionRun short_run = evolve(lk1_pair(), kLK1, step_at(0.0), few);
  CHECK(code_of([&] { front_speed(short_run); }) == ErrorCode::invalid_argument);
}
