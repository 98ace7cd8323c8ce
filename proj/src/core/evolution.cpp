#include "nlkpp/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "nlkpp/dispersion.hpp"
#include "nlkpp/error.hpp"
#include "nlkpp/grid.hpp"

namespace nlkpp {
namespace {

constexpr std::size_t kMaxGrid = 5'000'000;

// Geometric continuation factor at an edge: the edge ratio when the edge sits on the
// low side of the front, 1 (constant continuation) otherwise.
double edge_ratio(double edge, double inner, double level) {
  if (edge >= level) return 1.0;
  if (!(inner > 0.0)) return 0.0;
  return std::clamp(edge / inner, 0.0, 1.0);
}

// Convolution of u continued beyond both ends by edge_ratio. The zero state is unstable,
// so FFT round-off ahead of a front would grow; beyond each front the convolution is taken
// of the tilted copy u e^{+-tilt (s - front)} instead, which keeps the tail's relative accuracy.
class Convolution {
 public:
  Convolution(const Kernel& k, double h, std::size_t n, double tilt_r, double tilt_l)
      : tilt_r_(tilt_r), tilt_l_(tilt_l), h_(h) {
    auto [lo, hi] = k.support(1e-15);
    const double width = hi - lo;
    if (tilt_r > 0.0) hi = std::min(std::max(hi, kernel_window(k, tilt_r).second), hi + 3.0 * width);
    if (tilt_l > 0.0) lo = std::max(std::min(lo, kernel_window(k, -tilt_l).first), lo - 3.0 * width);
    w_ = kernel_weights(k, h, lo, hi);
    pad_l_ = static_cast<std::size_t>(std::max(w_.kmax(), 0L)) + 1;
    pad_r_ = static_cast<std::size_t>(std::max(-w_.kmin, 0L)) + 1;
    plain_ = std::make_unique<GridConvolver>(w_, n, pad_l_, pad_r_);
    if (tilt_r > 0.0) right_ = std::make_unique<GridConvolver>(w_.tilted(tilt_r), n, pad_l_, pad_r_);
    if (tilt_l > 0.0) left_ = std::make_unique<GridConvolver>(w_.tilted(-tilt_l), n, pad_l_, pad_r_);
    ext_.resize(n + pad_l_ + pad_r_);
    buf_.resize(ext_.size());
    tmp_.resize(n);
  }

  // right_split / left_split: grid indices of the fronts, or -1 when there is none.
  void apply(const std::vector<double>& u, std::vector<double>& out, double level, long right_split,
             long left_split) {
    const std::size_t n = u.size();
    const double rl = edge_ratio(u[0], u[1], level);
    const double rr = edge_ratio(u[n - 1], u[n - 2], level);
    double v = u[0];
    for (std::size_t i = pad_l_; i-- > 0;) ext_[i] = v *= rl;
    std::copy(u.begin(), u.end(), ext_.begin() + static_cast<long>(pad_l_));
    v = u[n - 1];
    for (std::size_t i = pad_l_ + n; i < ext_.size(); ++i) ext_[i] = v *= rr;
    plain_->apply(ext_.data(), out.data());
    if (right_ && right_split >= 0) tilted(*right_, tilt_r_ * h_, right_split, out, true);
    if (left_ && left_split >= 0) tilted(*left_, -tilt_l_ * h_, left_split, out, false);
  }

 private:
  void tilted(GridConvolver& conv, double c, long split, std::vector<double>& out, bool right) {
    const long pl = static_cast<long>(pad_l_);
    for (std::size_t j = 0; j < buf_.size(); ++j) {
      const double e = c * static_cast<double>(static_cast<long>(j) - pl - split);
      buf_[j] = ext_[j] == 0.0 ? 0.0 : ext_[j] * std::exp(std::min(e, 700.0));
    }
    conv.apply(buf_.data(), tmp_.data());
    const auto n = static_cast<long>(out.size());
    const long from = right ? split : 0, to = right ? n : std::min(split + 1, n);
    for (long i = from; i < to; ++i)
      out[static_cast<std::size_t>(i)] = tmp_[static_cast<std::size_t>(i)] * std::exp(-c * static_cast<double>(i - split));
  }

  double tilt_r_, tilt_l_, h_;
  KernelWeights w_;
  std::size_t pad_l_ = 0, pad_r_ = 0;
  std::unique_ptr<GridConvolver> plain_, right_, left_;
  std::vector<double> ext_, buf_, tmp_;
};

// Tilt for the tail beyond a front: 0.9 lambda* of the dispersion relation on that side.
double tail_tilt(const Kernel& a_plus, const ModelParams& params) {
  try {
    const double ls = minimal_speed(a_plus, params).lambda_star;
    return std::isfinite(ls) && ls > 0.0 ? 0.9 * ls : 0.0;
  } catch (const Error&) {
    return 0.0;
  }
}

}  // namespace

const char* to_string(InitialShape shape) {
  switch (shape) {
    case InitialShape::constant: return "constant";
    case InitialShape::step: return "step";
    case InitialShape::exponential_tail: return "exponential-tail";
    case InitialShape::samples: return "samples";
  }
  return "unknown";
}

InitialCondition InitialCondition::from_profile(const WaveProfile& profile) {
  InitialCondition ic;
  ic.shape = InitialShape::samples;
  ic.start = profile.grid_start;
  ic.step = profile.h;
  ic.values = profile.values;
  return ic;
}

double InitialCondition::operator()(double s, double theta) const {
  const double top = height > 0.0 ? height : theta;
  switch (shape) {
    case InitialShape::constant: return height;
    case InitialShape::step: return s < position ? top : 0.0;
    case InitialShape::exponential_tail: return top * std::min(1.0, std::exp(-rate * (s - position)));
    case InitialShape::samples: {
      require(!values.empty() && step > 0.0, "initial samples need values and a positive step");
      const double x = (s - start) / step;
      if (x <= 0.0) return values.front();
      const auto last = static_cast<double>(values.size() - 1);
      if (x >= last) return values.back();
      const auto i = static_cast<std::size_t>(x);
      const double f = x - static_cast<double>(i);
      return (1.0 - f) * values[i] + f * values[i + 1];
    }
  }
  return 0.0;
}

double level_crossing(const std::vector<double>& u, double grid_start, double h, double level, FrontSide side) {
  const std::size_t n = u.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  if (side == FrontSide::right) {
    for (std::size_t i = n - 1; i-- > 0;) {
      if (u[i] >= level && u[i + 1] < level)
        return grid_start + h * (static_cast<double>(i) + (u[i] - level) / (u[i] - u[i + 1]));
    }
  } else {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (u[i] < level && u[i + 1] >= level)
        return grid_start + h * (static_cast<double>(i) + (level - u[i]) / (u[i + 1] - u[i]));
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double snapshot_value(const Snapshot& snap, double h, double s) {
  require(!snap.values.empty(), "snapshot has no stored values");
  const double x = (s - snap.grid_start) / h;
  if (x <= 0.0) return snap.values.front();
  const auto last = static_cast<double>(snap.values.size() - 1);
  if (x >= last) return snap.values.back();
  const auto i = static_cast<std::size_t>(x);
  const double f = x - static_cast<double>(i);
  return (1.0 - f) * snap.values[i] + f * snap.values[i + 1];
}

EvolutionRun evolve(const KernelPair& pair, const ModelParams& params, const InitialCondition& u0,
                    const EvolutionConfig& cfg) {
  params.validate();
  const double th = theta(params);
  require(cfg.h > 0.0 && cfg.x_max - cfg.x_min > 10.0 * cfg.h, "evolve: need x_max - x_min > 10 h > 0");
  require(cfg.dt > 0.0 && cfg.t_end >= 0.0, "evolve: need dt > 0 and t_end >= 0");
  const double rate = params.kappa_plus + params.m + 2.0 * params.kappa_local * th + params.kappa_nonlocal * th;
  if (cfg.dt * rate > 0.5) {
    std::ostringstream os;
    os << "evolve: dt = " << cfg.dt << " is unstable; need dt <= " << 0.5 / rate;
    fail(ErrorCode::invalid_argument, os.str());
  }
  const bool nonlocal = params.kappa_nonlocal > 0.0;

  EvolutionRun run;
  run.h = cfg.h;
  run.dt = cfg.dt;
  run.theta = th;
  run.level = 0.5 * th;
  double start = cfg.x_min;
  auto n = static_cast<std::size_t>(std::llround((cfg.x_max - cfg.x_min) / cfg.h)) + 1;
  if (n > kMaxGrid) fail(ErrorCode::invalid_argument, "evolve: grid too large");
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = u0(start + cfg.h * static_cast<double>(i), th);
    if (!(u[i] >= -1e-12 * th && u[i] <= th * (1.0 + 1e-12))) {
      std::ostringstream os;
      os << "evolve: u0(" << start + cfg.h * static_cast<double>(i) << ") = " << u[i] << " lies outside [0, theta]";
      fail(ErrorCode::invalid_argument, os.str());
    }
    u[i] = std::clamp(u[i], 0.0, th);
  }
  run.max_value = *std::max_element(u.begin(), u.end());
  run.min_value = *std::min_element(u.begin(), u.end());

  const double tilt_r = tail_tilt(pair.a_plus, params);
  const double tilt_l = tail_tilt(pair.a_plus.reflected(), params);
  std::unique_ptr<Convolution> cp, cm;
  auto rebuild = [&] {
    cp = std::make_unique<Convolution>(pair.a_plus, cfg.h, u.size(), tilt_r, tilt_l);
    if (nonlocal) cm = std::make_unique<Convolution>(pair.a_minus, cfg.h, u.size(), 0.0, 0.0);
  };
  rebuild();
  std::vector<double> A(n), B(n, 0.0);

  auto split_index = [&](double x) {
    return std::isfinite(x) ? static_cast<long>(std::floor((x - start) / cfg.h)) : -1L;
  };
  const auto steps = static_cast<long>(std::llround(cfg.t_end / cfg.dt));
  const double interval = cfg.snapshot_interval > 0.0 ? cfg.snapshot_interval : cfg.t_end / 200.0;
  const long every = std::max(1L, static_cast<long>(std::llround(interval / cfg.dt)));
  auto record = [&](long k) {
    const double t = static_cast<double>(k) * cfg.dt;
    run.times.push_back(t);
    run.right_front.push_back(level_crossing(u, start, cfg.h, run.level, FrontSide::right));
    run.left_front.push_back(level_crossing(u, start, cfg.h, run.level, FrontSide::left));
    Snapshot s;
    s.t = t;
    s.grid_start = start;
    if (cfg.keep_values) s.values = u;
    run.snapshots.push_back(std::move(s));
  };
  record(0);

  for (long k = 1; k <= steps; ++k) {
    const long rs = split_index(level_crossing(u, start, cfg.h, run.level, FrontSide::right));
    const long ls = split_index(level_crossing(u, start, cfg.h, run.level, FrontSide::left));
    cp->apply(u, A, run.level, rs, ls);
    if (nonlocal) cm->apply(u, B, run.level, -1, -1);
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double x = u[i];
      u[i] = x + cfg.dt * (params.kappa_plus * A[i] - params.m * x - params.kappa_local * x * x -
                           params.kappa_nonlocal * x * B[i]);
      run.max_value = std::max(run.max_value, u[i]);
      run.min_value = std::min(run.min_value, u[i]);
    }
    run.steps = static_cast<int>(k);
    if (k % every == 0 || k == steps) record(k);

    if (!cfg.widen) continue;
    // Grow the grid when a front enters the outer 20% on either side.
    const double span = cfg.h * static_cast<double>(u.size() - 1);
    const double rf = level_crossing(u, start, cfg.h, run.level, FrontSide::right);
    const double lf = level_crossing(u, start, cfg.h, run.level, FrontSide::left);
    const bool grow_right = std::isfinite(rf) && rf > start + 0.8 * span;
    const bool grow_left = std::isfinite(lf) && lf < start + 0.2 * span;
    if (!grow_right && !grow_left) continue;
    const std::size_t add = u.size() / 2;
    if (u.size() + add > kMaxGrid) fail(ErrorCode::front_left_domain, "evolve: grid growth limit reached");
    if (grow_right) {
      const double r = edge_ratio(u[u.size() - 1], u[u.size() - 2], run.level);
      double v = u.back();
      for (std::size_t i = 0; i < add; ++i) u.push_back(v *= r);
    }
    if (grow_left) {
      const double r = edge_ratio(u[0], u[1], run.level);
      std::vector<double> pre(add);
      double v = u.front();
      for (std::size_t i = add; i-- > 0;) pre[i] = v *= r;
      u.insert(u.begin(), pre.begin(), pre.end());
      start -= cfg.h * static_cast<double>(add);
    }
    A.assign(u.size(), 0.0);
    B.assign(u.size(), 0.0);
    rebuild();
    ++run.widenings;
  }
  return run;
}

SpeedFit front_speed(const EvolutionRun& run, FrontSide side, double burn_in, double level) {
  require(burn_in >= 0.0 && burn_in < 1.0, "front_speed: burn-in fraction must lie in [0, 1)");
  require(!run.times.empty(), "front_speed: run has no snapshots");
  SpeedFit fit;
  fit.burn_in = burn_in;
  fit.level = level > 0.0 ? level : run.level;
  require(fit.level > 0.0 && fit.level < run.theta, "front_speed: level must lie in (0, theta)");
  const double t0 = burn_in * run.times.back();
  std::vector<double> ts, xs;
  for (std::size_t k = 0; k < run.times.size(); ++k) {
    if (run.times[k] < t0) continue;
    double x;
    if (level <= 0.0) {
      x = side == FrontSide::right ? run.right_front[k] : run.left_front[k];
    } else {
      const auto& s = run.snapshots[k];
      require(!s.values.empty(), "front_speed: custom levels need stored snapshot values");
      x = level_crossing(s.values, s.grid_start, run.h, fit.level, side);
    }
    if (!std::isfinite(x)) {
      std::ostringstream os;
      os << "front crossing left the grid at t = " << run.times[k];
      fail(ErrorCode::front_left_domain, os.str());
    }
    ts.push_back(run.times[k]);
    xs.push_back(x);
  }
  if (ts.size() < 10) fail(ErrorCode::invalid_argument, "front_speed: fewer than 10 snapshots after burn-in");
  const double m = static_cast<double>(ts.size());
  double st = 0, sx = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    st += ts[i];
    sx += xs[i];
  }
  const double tm = st / m, xm = sx / m;
  double stt = 0, stx = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    stt += (ts[i] - tm) * (ts[i] - tm);
    stx += (ts[i] - tm) * (xs[i] - xm);
  }
  fit.speed = stx / stt;
  fit.intercept = xm - fit.speed * tm;
  double ss = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) ss += std::pow(xs[i] - fit.intercept - fit.speed * ts[i], 2);
  fit.slope_stderr = ts.size() > 2 ? std::sqrt(ss / (m - 2.0) / stt) : 0.0;
  fit.t_from = ts.front();
  fit.t_to = ts.back();
  fit.points = ts.size();
  return fit;
}

}  // namespace nlkpp
