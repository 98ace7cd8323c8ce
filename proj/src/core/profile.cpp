#include "nlkpp/profile.hpp"

#include <algorithm>
#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <memory>
#include <sstream>

#include "gmres.hpp"
#include "nlkpp/error.hpp"
#include "nlkpp/grid.hpp"

extern "C" {
void dgttrf_(const int* n, double* dl, double* d, double* du, double* du2, int* ipiv, int* info);
void dgttrs_(const char* trans, const int* n, const int* nrhs, const double* dl, const double* d, const double* du,
             const double* du2, const int* ipiv, double* b, const int* ldb, int* info);
}

namespace nlkpp {
namespace {

using detail::Vec;

// Convolution on the grid that switches to an exponentially tilted copy on the
// tail side of `split`, so that tiny tail values keep their relative accuracy.
class DualConvolution {
 public:
  DualConvolution(const KernelWeights& w, std::size_t n, std::size_t pad_l, std::size_t pad_r, double tilt,
                  std::size_t split, int tau, double h)
      : plain_(w, n, pad_l, pad_r), tilt_(tilt), split_(split), tau_(tau), h_(h), n_(n), pad_l_(pad_l) {
    if (tilt != 0.0) tilted_ = std::make_unique<GridConvolver>(w.tilted(tau * tilt), n, pad_l, pad_r);
    buf_.resize(plain_.padded_size());
    tmp_.resize(n);
  }

  void apply(const Vec& ext, Vec& out) {
    plain_.apply(ext.data(), out.data());
    if (!tilted_) return;
    const double c = tau_ * tilt_ * h_;
    const long sp = static_cast<long>(split_);
    for (std::size_t j = 0; j < buf_.size(); ++j) {
      const double e = c * (static_cast<long>(j) - static_cast<long>(pad_l_) - sp);
      buf_[j] = ext[j] == 0.0 ? 0.0 : ext[j] * std::exp(std::min(e, 700.0));
    }
    tilted_->apply(buf_.data(), tmp_.data());
    for (std::size_t i = 0; i < n_; ++i) {
      const bool tail = tau_ > 0 ? i >= split_ : i <= split_;
      if (tail) out[i] = tmp_[i] * std::exp(-c * (static_cast<long>(i) - sp));
    }
  }

 private:
  GridConvolver plain_;
  std::unique_ptr<GridConvolver> tilted_;
  double tilt_;
  std::size_t split_;
  int tau_;
  double h_;
  std::size_t n_, pad_l_;
  Vec buf_, tmp_;
};

struct DiscreteSetup {
  std::size_t n = 0;
  double h = 0.0;
  double start = 0.0;
  double c = 0.0;  // discrete speed
  double theta = 0.0;
  int tau = 1;     // +1: tail on the right
  double lambda = 0.0;
  int j = 1;
  std::size_t split = 0;
};

// Discrete wave operator with boundary closures: theta on one side, the
// characteristic tail (lambda, j) on the other.
class WaveOperator {
 public:
  WaveOperator(const KernelPair& pair, const ModelParams& p, const DiscreteSetup& d) : p_(p), d_(d) {
    wp_ = weights(pair.a_plus);
    has_minus_ = p.kappa_nonlocal > 0.0;
    long kmax = wp_.kmax(), kmin = wp_.kmin;
    if (has_minus_) {
      wm_ = weights(pair.a_minus);
      kmax = std::max(kmax, wm_.kmax());
      kmin = std::min(kmin, wm_.kmin);
    }
    pad_l_ = static_cast<std::size_t>(std::max(kmax, 0L)) + 1;
    pad_r_ = static_cast<std::size_t>(std::max(-kmin, 0L)) + 1;
    if (d.n + pad_l_ + pad_r_ > 40'000'000) fail(ErrorCode::invalid_argument, "grid plus kernel stencil too large");
    cp_ = std::make_unique<DualConvolution>(wp_, d.n, pad_l_, pad_r_, d.lambda, d.split, d.tau, d.h);
    if (has_minus_) cm_ = std::make_unique<DualConvolution>(wm_, d.n, pad_l_, pad_r_, d.lambda, d.split, d.tau, d.h);
    ext_.resize(d.n + pad_l_ + pad_r_);
    A_.resize(d.n);
    B_.assign(d.n, 0.0);
  }

  // Beyond one grid span on the amplified side the input is the constant theta, so the
  // lumped end weight there is exact.
  KernelWeights weights(const Kernel& k) const {
    const double tilt = d_.tau * d_.lambda;
    auto [lo, hi] = kernel_window(k, tilt);
    const auto [plo, phi] = k.support(1e-15);
    const double span = static_cast<double>(d_.n + 2) * d_.h;
    if (d_.tau > 0) hi = std::min(hi, std::max(phi, span));
    else lo = std::max(lo, std::min(plo, -span));
    return kernel_weights(k, d_.h, lo, hi);
  }

  const DiscreteSetup& setup() const { return d_; }
  const KernelWeights& weights_plus() const { return wp_; }
  const KernelWeights& weights_minus() const { return wm_; }
  bool has_minus() const { return has_minus_; }
  void set_tail(double lambda, int j) {
    tail_r_ = std::exp(-lambda * d_.h);
    tail_j_ = j;
  }

  // Constant continuation by the boundary value on the theta side (so both constant
  // states are exact), the characteristic tail on the other.
  void extend(const Vec& x, Vec& ext) const {
    const std::size_t n = d_.n;
    const double side_value = d_.tau > 0 ? x[0] : x[n - 1];
    std::copy(x.begin(), x.end(), ext.begin() + static_cast<long>(pad_l_));
    const double r = tail_r_;
    auto tail = [&](double x0, double x1, std::size_t k) {
      const double rk = std::pow(r, static_cast<double>(k));
      if (tail_j_ == 2) return rk * ((1.0 + k) * x0 - k * r * x1);
      return rk * x0;
    };
    if (d_.tau > 0) {
      std::fill(ext.begin(), ext.begin() + static_cast<long>(pad_l_), side_value);
      for (std::size_t k = 1; k <= pad_r_; ++k) ext[pad_l_ + n - 1 + k] = tail(x[n - 1], x[n - 2], k);
    } else {
      std::fill(ext.begin() + static_cast<long>(pad_l_ + n), ext.end(), side_value);
      for (std::size_t k = 1; k <= pad_l_; ++k) ext[pad_l_ - k] = tail(x[0], x[1], k);
    }
  }

  // Convolutions of x with a_plus into A_ and (if present) a_minus into B_.
  void convolve_state(const Vec& x) {
    extend(x, ext_);
    cp_->apply(ext_, A_);
    if (has_minus_) cm_->apply(ext_, B_);
  }

  void residual(const Vec& x, Vec& F) {
    convolve_state(x);
    const double c2h = d_.c / (2.0 * d_.h);
    for (std::size_t i = 0; i < d_.n; ++i) {
      const double dx = ext_[pad_l_ + i + 1] - ext_[pad_l_ + i - 1];
      F[i] = c2h * dx + p_.kappa_plus * A_[i] - p_.m * x[i] - p_.kappa_nonlocal * x[i] * B_[i] -
             p_.kappa_local * x[i] * x[i];
    }
  }

  // Order-preserving right-hand side rho x + (wave operator without the derivative).
  void monotone_rhs(const Vec& x, double rho, Vec& f) {
    convolve_state(x);
    for (std::size_t i = 0; i < d_.n; ++i)
      f[i] = rho * x[i] + p_.kappa_plus * A_[i] - p_.m * x[i] - p_.kappa_nonlocal * x[i] * B_[i] -
             p_.kappa_local * x[i] * x[i];
  }

  // J(x) delta, using B_ from the last convolve_state(x).
  void jacobian_apply(const Vec& x, const Vec& delta, Vec& out) {
    extend(delta, dext_);
    if (dA_.size() != d_.n) {
      dA_.resize(d_.n);
      dB_.assign(d_.n, 0.0);
    }
    cp_->apply(dext_, dA_);
    if (has_minus_) cm_->apply(dext_, dB_);
    const double c2h = d_.c / (2.0 * d_.h);
    for (std::size_t i = 0; i < d_.n; ++i) {
      const double dx = dext_[pad_l_ + i + 1] - dext_[pad_l_ + i - 1];
      out[i] = c2h * dx + p_.kappa_plus * dA_[i] -
               (p_.m + 2.0 * p_.kappa_local * x[i] + p_.kappa_nonlocal * B_[i]) * delta[i] -
               p_.kappa_nonlocal * x[i] * dB_[i];
    }
  }

  // Tridiagonal part of J(x): sub (i, i-1), diag, super (i, i+1).
  void tridiagonal(const Vec& x, Vec& sub, Vec& diag, Vec& sup) const {
    const double c2h = d_.c / (2.0 * d_.h);
    const double kp = p_.kappa_plus, kn = p_.kappa_nonlocal;
    for (std::size_t i = 0; i < d_.n; ++i) {
      diag[i] = kp * wp_.at(0) - p_.m - 2.0 * p_.kappa_local * x[i] - kn * B_[i] - kn * x[i] * wm_.at(0);
      sub[i] = -c2h + kp * wp_.at(1) - kn * x[i] * wm_.at(1);
      sup[i] = c2h + kp * wp_.at(-1) - kn * x[i] * wm_.at(-1);
    }
  }

 private:
  ModelParams p_;
  DiscreteSetup d_;
  KernelWeights wp_, wm_;
  bool has_minus_ = false;
  std::size_t pad_l_ = 0, pad_r_ = 0;
  std::unique_ptr<DualConvolution> cp_, cm_;
  double tail_r_ = 1.0;
  int tail_j_ = 1;
  Vec ext_, dext_ = Vec(), A_, B_, dA_, dB_;

 public:
  void reserve_delta() { dext_.resize(ext_.size()); }
};

struct Orientation {
  int tau = 1;
  Kernel tail_kernel;  // a_plus, or its reflection for increasing profiles
  DispersionReport rep;
  CharacteristicRoot root;
};

Orientation orient(const KernelPair& pair, const ModelParams& p, double c) {
  if (c == 0.0) fail(ErrorCode::c_zero_unsupported, "speed c = 0 is not supported");
  const auto rep = minimal_speed(pair.a_plus, p);
  if (c >= rep.c_star - 1e-10 * std::max(1.0, std::abs(rep.c_star))) {
    return Orientation{1, pair.a_plus, rep, speed_to_abscissa(pair.a_plus, p, rep, c)};
  }
  if (!pair.a_plus.is_truncated()) {
    const Kernel r = pair.a_plus.reflected();
    const auto rrep = minimal_speed(r, p);
    if (-c >= rrep.c_star - 1e-10 * std::max(1.0, std::abs(rrep.c_star)))
      return Orientation{-1, r, rrep, speed_to_abscissa(r, p, rrep, -c)};
  }
  std::ostringstream os;
  os.precision(17);
  os << "no traveling wave for c = " << c << " (c* = " << rep.c_star << ")";
  fail(ErrorCode::no_wave, os.str());
}

struct DiscreteRoot {
  double c_eff;   // speed in the tail frame (tau c)
  double lambda;
  int j;
};

// Tail root of kappa_plus A_h(lambda) - m - c sinh(lambda h)/h for the discrete weights:
// the smallest one, or the minimum of the discrete G when the root is double or missing.
DiscreteRoot discrete_root(const KernelWeights& w, const ModelParams& p, int tau, double c_eff, int j_cont,
                           double lambda_star) {
  const double h = w.h;
  auto A = [&](double l) { return w.transform(tau * l); };
  auto G = [&](double l) { return (p.kappa_plus * A(l) - p.m) / (std::sinh(l * h) / h); };
  auto minimum = [&](double around) {
    auto [lmin, gmin] = boost::math::tools::brent_find_minima(G, 0.5 * around, 1.5 * around, 52);
    return DiscreteRoot{gmin, lmin, 2};
  };
  if (j_cont == 2) return minimum(lambda_star);
  auto hfun = [&](double l) { return p.kappa_plus * A(l) - p.m - c_eff * std::sinh(l * h) / h; };
  const int steps = 1000;
  const double top = 1.5 * lambda_star;
  double a = 0.0, b = 0.0;
  for (int k = 1; k <= steps; ++k) {
    const double l = top * k / steps;
    if (hfun(l) <= 0.0) {
      b = l;
      break;
    }
    a = l;
  }
  if (b == 0.0) return minimum(lambda_star);
  if (a == 0.0) a = 1e-3 * b;
  while (hfun(a) <= 0.0) a *= 0.5;
  for (int it = 0; it < 200 && b - a > 1e-15 * b; ++it) {
    const double mid = 0.5 * (a + b);
    (hfun(mid) > 0.0 ? a : b) = mid;
  }
  return DiscreteRoot{c_eff, 0.5 * (a + b), 1};
}

void tridiag_factor(Vec& dl, Vec& d, Vec& du, Vec& du2, std::vector<int>& ipiv) {
  const int n = static_cast<int>(d.size());
  du2.resize(d.size());
  ipiv.resize(d.size());
  int info = 0;
  dgttrf_(&n, dl.data(), d.data(), du.data(), du2.data(), ipiv.data(), &info);
  if (info != 0) fail(ErrorCode::iteration_stalled, "singular tridiagonal preconditioner");
}

void tridiag_solve(const Vec& dl, const Vec& d, const Vec& du, const Vec& du2, const std::vector<int>& ipiv, Vec& b) {
  const int n = static_cast<int>(d.size()), one = 1;
  int info = 0;
  dgttrs_("N", &n, &one, dl.data(), d.data(), du.data(), du2.data(), ipiv.data(), b.data(), &n, &info);
}

std::size_t crossing_index(const Vec& x, double level) {
  std::size_t best = 0;
  double dist = kInf;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = std::abs(x[i] - level);
    if (v < dist) {
      dist = v;
      best = i;
    }
  }
  return best;
}

DiscreteSetup setup_from_profile(const WaveProfile& w) {
  DiscreteSetup d;
  d.n = w.values.size();
  d.h = w.h;
  d.start = w.grid_start;
  d.c = w.speed_discrete;
  d.theta = w.theta;
  d.tau = w.increasing ? -1 : 1;
  d.lambda = w.lambda_discrete;
  d.j = w.multiplicity;
  d.split = crossing_index(w.values, 0.5 * w.theta);
  return d;
}

class Interpolant {
 public:
  explicit Interpolant(const WaveProfile& w)
      : spline_(w.values.data(), w.values.size(), w.grid_start, w.h), lo_(w.grid_start), hi_(w.s_end()),
        left_(w.values.front()), right_(w.values.back()) {}
  double operator()(double s) const {
    if (s <= lo_) return left_;
    if (s >= hi_) return right_;
    return spline_(s);
  }

 private:
  boost::math::interpolators::cardinal_cubic_b_spline<double> spline_;
  double lo_, hi_, left_, right_;
};

// Downward monotone iteration; each sweep solves c psi' - rho psi = -N[psi] exactly for
// piecewise-linear N, integrating from the side the characteristics come from.
void monotone_iteration(WaveOperator& op, Vec& x, const ModelParams& params, const ProfileConfig& cfg,
                        WaveProfile& diag) {
  const DiscreteSetup& d = op.setup();
  const std::size_t n = d.n;
  const double th = d.theta;
  op.set_tail(d.lambda, 1);
  Vec f(n), xn(n);
  const double rho = params.m + 2.0 * params.kappa_local * th + params.kappa_nonlocal * th;
  const double ac = std::abs(d.c);
  const double kap = rho / ac;
  const double E = std::exp(-kap * d.h);
  const double a1 = (1.0 / ac) * (1.0 / kap - (1.0 - E) / (kap * kap * d.h));
  const double a0 = (1.0 / ac) * (1.0 - E) / kap - a1;
  const bool forward = d.c < 0.0;
  const std::size_t first = forward ? 0 : n - 1;
  const bool start_on_theta_side = (forward && d.tau > 0) || (!forward && d.tau < 0);
  double last_change = kInf;
  int stalled = 0;
  for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    op.monotone_rhs(x, rho, f);
    xn[first] = start_on_theta_side ? f[first] / rho : f[first] / (rho + ac * d.lambda);
    if (forward) {
      for (std::size_t i = 1; i < n; ++i) xn[i] = E * xn[i - 1] + a0 * f[i - 1] + a1 * f[i];
    } else {
      for (std::size_t i = n - 1; i-- > 0;) xn[i] = E * xn[i + 1] + a0 * f[i + 1] + a1 * f[i];
    }
    double change = 0.0;
    bool violated = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (xn[i] > x[i]) {
        // The sweep and the centered scheme differ at O((lambda h)^2); keep the iterates nonincreasing.
        const double inc = xn[i] - x[i];
        if (inc > 1e-12) violated = true;
        diag.monotone_max_increase = std::max(diag.monotone_max_increase, inc / x[i]);
        xn[i] = x[i];
      }
      change = std::max(change, x[i] - xn[i]);
    }
    diag.monotone_violations += violated ? 1 : 0;
    x.swap(xn);
    diag.monotone_sweeps = sweep + 1;
    diag.monotone_last_change = change;
    if (change <= cfg.sweep_tol * th) break;
    // Contraction has stalled (translation mode); Newton finishes from here.
    stalled = change > 0.99 * last_change ? stalled + 1 : 0;
    last_change = change;
    if (stalled >= 20) break;
    const std::size_t ci = crossing_index(x, 0.5 * th);
    if (ci < n / 10 || ci > n - n / 10) break;
  }
}

// Newton-GMRES on the centered-difference equations in log variables, phase pinned at the
// theta/2 node. Returns the final scaled residual.
double newton(WaveOperator& op, Vec& x, const ProfileConfig& cfg, WaveProfile& diag) {
  const DiscreteSetup& d = op.setup();
  const std::size_t n = d.n;
  op.set_tail(d.lambda, d.j);
  const std::size_t pin = crossing_index(x, 0.5 * d.theta);
  x[pin] = 0.5 * d.theta;
  for (double& v : x) v = std::max(v, 1e-300);
  const std::size_t nr = n - 1;
  auto full = [pin](std::size_t q) { return q < pin ? q : q + 1; };
  Vec F(n), Fs(nr), Fnew(n), xt(n);
  auto scaled_norm = [&](const Vec& xx, const Vec& FF) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (i != pin) s = std::max(s, std::abs(FF[i]) / xx[i]);
    return s;
  };
  op.residual(x, F);
  double norm = scaled_norm(x, F);
  Vec dfull(n), jfull(n), dl(nr), dd(nr), du(nr), du2, sub(n), dg(n), sup(n);
  std::vector<int> ipiv;
  for (int it = 0; it < cfg.max_newton && norm > cfg.tol; ++it) {
    // op holds the convolutions of x from the last residual call.
    op.tridiagonal(x, sub, dg, sup);
    for (std::size_t q = 0; q < nr; ++q) {
      const std::size_t i = full(q);
      dd[q] = dg[i];
      if (q + 1 < nr) {
        const std::size_t i1 = full(q + 1);
        const bool adj = i1 == i + 1;
        du[q] = adj ? sup[i] * x[i1] / x[i] : 0.0;
        dl[q] = adj ? sub[i1] * x[i] / x[i1] : 0.0;
      }
    }
    tridiag_factor(dl, dd, du, du2, ipiv);
    for (std::size_t q = 0; q < nr; ++q) Fs[q] = -F[full(q)] / x[full(q)];
    detail::LinearMap A = [&](const Vec& v, Vec& r) {
      std::fill(dfull.begin(), dfull.end(), 0.0);
      for (std::size_t q = 0; q < nr; ++q) dfull[full(q)] = v[q] * x[full(q)];
      op.jacobian_apply(x, dfull, jfull);
      r.resize(nr);
      for (std::size_t q = 0; q < nr; ++q) r[q] = jfull[full(q)] / x[full(q)];
    };
    detail::LinearMap M = [&](const Vec& v, Vec& r) {
      r = v;
      tridiag_solve(dl, dd, du, du2, ipiv, r);
    };
    Vec v(nr, 0.0);
    const auto g = detail::gmres(A, M, Fs, v, 1e-4, 80, 800);
    diag.gmres_iterations += g.iterations;
    ++diag.newton_steps;
    double alpha = 1.0;
    double new_norm = kInf;
    for (int ls = 0; ls < 12; ++ls, alpha *= 0.5) {
      xt = x;
      for (std::size_t q = 0; q < nr; ++q) xt[full(q)] = x[full(q)] * std::exp(std::clamp(alpha * v[q], -50.0, 50.0));
      op.residual(xt, Fnew);
      new_norm = scaled_norm(xt, Fnew);
      if (new_norm < (1.0 - 1e-4 * alpha) * norm) break;
    }
    if (!(new_norm < norm)) break;
    x.swap(xt);
    norm = new_norm;
    op.residual(x, F);
  }
  return norm;
}

Vec supersolution(const DiscreteSetup& d, double anchor) {
  Vec x(d.n);
  for (std::size_t i = 0; i < d.n; ++i) {
    const double s = d.start + d.h * static_cast<double>(i);
    x[i] = d.theta * std::min(1.0, std::exp(-d.lambda * d.tau * (s - anchor)));
  }
  return x;
}

}  // namespace

const char* to_string(ShiftMode mode) {
  switch (mode) {
    case ShiftMode::none: return "none";
    case ShiftMode::half_theta: return "half-theta";
    case ShiftMode::unit_d: return "unit-D";
  }
  return "unknown";
}

WaveProfile solve_profile(const KernelPair& pair, const ModelParams& params, double c, const ProfileConfig& cfg) {
  params.validate();
  const auto report = check_assumptions(pair, params);
  for (const char* id : {"Q1", "Q3", "Q4", "Q5"})
    if (!report.holds(id)) fail(ErrorCode::assumption_failed, std::string(id) + " fails: " + report.get(id).detail);
  if (params.kappa_nonlocal > 0.0 && !report.holds("Q2"))
    fail(ErrorCode::assumption_failed, "Q2 fails: " + report.get("Q2").detail);
  const Orientation o = orient(pair, params, c);
  const double th = theta(params);
  const double lc = o.root.lambda_c;

  WaveProfile out;
  out.theta = th;
  out.speed = c;
  out.lambda_c = lc;
  out.increasing = o.tau < 0;
  const double L = cfg.grid_l > 0.0 ? cfg.grid_l : 40.0 / lc;
  const double h = cfg.grid_h > 0.0 ? cfg.grid_h : std::min(0.01, 1.0 / (20.0 * lc));
  require(L > 0.0 && h > 0.0 && L > 20.0 * h, "profile grid: need L > 20 h > 0");
  const auto n = static_cast<std::size_t>(std::llround(2.0 * L / h)) + 1;
  if (n > 20'000'000) fail(ErrorCode::invalid_argument, "profile grid too large");
  require(std::abs(cfg.anchor) < 0.5 * L, "anchor must lie in the middle half of the grid");

  DiscreteSetup d;
  d.n = n;
  d.h = h;
  d.start = -L;
  d.theta = th;
  d.tau = o.tau;
  d.lambda = lc;
  d.split = static_cast<std::size_t>(std::llround((cfg.anchor + L) / h));

  // The discrete weights fix the discrete tail root and speed.
  const KernelWeights wts = WaveOperator(pair, params, d).weights_plus();
  auto stage = [&](double c_eff, int j_cont) {
    const DiscreteRoot dr = discrete_root(wts, params, o.tau, c_eff, j_cont, o.rep.lambda_star);
    DiscreteSetup s = d;
    s.c = o.tau * dr.c_eff;
    s.lambda = dr.lambda;
    s.j = dr.j;
    return s;
  };
  const DiscreteSetup target = stage(o.tau * c, o.root.multiplicity);
  out.speed_discrete = target.c;
  out.lambda_discrete = target.lambda;
  out.multiplicity = target.j;
  out.grid_start = -L;
  out.h = h;

  Vec x = supersolution(target, cfg.anchor);
  WaveOperator op(pair, params, target);
  op.reserve_delta();
  monotone_iteration(op, x, params, cfg, out);
  double norm = newton(op, x, cfg, out);
  if (norm > cfg.tol) {
    // Continuation from faster speeds, where the monotone start is reliable.
    const double ce = o.tau * target.c;
    const double delta = 0.2 * std::max(std::abs(ce), 1e-3);
    DiscreteSetup s = stage(ce + delta, 1);
    x = supersolution(s, cfg.anchor);
    {
      WaveOperator op0(pair, params, s);
      op0.reserve_delta();
      monotone_iteration(op0, x, params, cfg, out);
      newton(op0, x, cfg, out);
    }
    for (double step = 0.5 * delta; step > 1e-4 * delta; step *= 0.5) {
      s = stage(ce + step, 1);
      WaveOperator opk(pair, params, s);
      opk.reserve_delta();
      newton(opk, x, cfg, out);
    }
    norm = newton(op, x, cfg, out);
  }

  out.values = x;
  out.residual_sup = residual(out, pair, params);
  if (out.residual_sup > cfg.residual_tol || !std::isfinite(out.residual_sup)) {
    std::ostringstream os;
    os.precision(6);
    os << "profile solver stalled: residual_sup " << out.residual_sup << " > " << cfg.residual_tol
       << " (scaled residual " << norm << ", " << out.newton_steps << " Newton steps, " << out.monotone_sweeps
       << " monotone sweeps)";
    fail(ErrorCode::iteration_stalled, os.str());
  }
  return normalize_shift(out, cfg.normalize);
}

std::vector<double> residual_vector(const WaveProfile& w, const KernelPair& pair, const ModelParams& params) {
  require(w.values.size() >= 3 && w.h > 0.0, "residual: profile needs at least three grid points");
  DiscreteSetup d = setup_from_profile(w);
  WaveOperator op(pair, params, d);
  op.set_tail(d.lambda, d.j);
  Vec F(d.n);
  op.residual(w.values, F);
  return F;
}

double residual(const WaveProfile& w, const KernelPair& pair, const ModelParams& params) {
  double s = 0.0;
  for (double v : residual_vector(w, pair, params)) s = std::max(s, std::abs(v));
  return s;
}

double half_theta_crossing(const WaveProfile& w) {
  const double level = 0.5 * w.theta;
  for (std::size_t i = 0; i + 1 < w.values.size(); ++i) {
    const double a = w.values[i] - level, b = w.values[i + 1] - level;
    if (a == 0.0) return w.s(i);
    if ((a > 0.0) != (b > 0.0) || b == 0.0) return w.s(i) + w.h * a / (a - b);
  }
  fail(ErrorCode::invalid_argument, "profile does not cross theta/2");
}

TailFit tail_asymptotics(const WaveProfile& w, double lo_value, double hi_value) {
  const std::size_t n = w.values.size();
  const int tau = w.increasing ? -1 : 1;
  const std::size_t cut = n / 10;  // boundary-contaminated end
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k + cut < n; ++k) {
    const std::size_t i = tau > 0 ? k : n - 1 - k;
    const double v = w.values[i];
    if (v < lo_value || v > hi_value * w.theta) continue;
    const double x = tau * w.s(i);
    if (x <= 0.0) fail(ErrorCode::invalid_argument, "tail window must lie at positive distance; normalize the shift first");
    xs.push_back(x);
    ys.push_back(std::log(v));
  }
  if (xs.size() < 50) fail(ErrorCode::tail_underresolved, "tail window has fewer than 50 usable points");
  auto linfit = [](const std::vector<double>& t, const std::vector<double>& y) {
    const double m = static_cast<double>(t.size());
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      st += t[i];
      sy += y[i];
      stt += t[i] * t[i];
      sty += t[i] * y[i];
    }
    const double slope = (m * sty - st * sy) / (m * stt - st * st);
    return std::pair<double, double>{slope, (sy - slope * st) / m};
  };
  std::vector<double> lt(xs.size()), y1(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    lt[i] = std::log(xs[i]);
    y1[i] = ys[i] + w.lambda_c * xs[i];
  }
  const auto [beta, logd] = linfit(lt, y1);
  std::vector<double> y2(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) y2[i] = ys[i] - beta * lt[i];
  const auto [slope, icpt] = linfit(xs, y2);
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) ss += std::pow(y2[i] - (icpt + slope * xs[i]), 2);
  TailFit fit;
  fit.rate = -slope;
  fit.j_estimate = 1.0 + beta;
  fit.D_estimate = std::exp(logd);
  fit.points = xs.size();
  fit.window_lo = tau * std::min(xs.front(), xs.back());
  fit.window_hi = tau * std::max(xs.front(), xs.back());
  if (fit.window_lo > fit.window_hi) std::swap(fit.window_lo, fit.window_hi);
  fit.fit_residual = std::sqrt(ss / static_cast<double>(xs.size()));
  return fit;
}

WaveProfile normalize_shift(const WaveProfile& w, ShiftMode mode) {
  WaveProfile out = w;
  if (mode == ShiftMode::none) {
    out.shift_mode = ShiftMode::none;
    return out;
  }
  out.grid_start -= half_theta_crossing(w);
  out.shift_mode = ShiftMode::half_theta;
  if (mode == ShiftMode::half_theta) return out;
  require(w.lambda_c > 0.0, "unit-D normalization needs a positive lambda_c");
  const TailFit fit = tail_asymptotics(out);
  const double q = (w.increasing ? -1.0 : 1.0) * std::log(fit.D_estimate) / w.lambda_c;
  out.grid_start -= q;
  out.shift_mode = ShiftMode::unit_d;
  return out;
}

double profile_value(const WaveProfile& w, double s) { return Interpolant(w)(s); }

std::vector<double> profile_values(const WaveProfile& w, const std::vector<double>& s) {
  const Interpolant f(w);
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = f(s[i]);
  return out;
}

ShiftComparison compare_up_to_shift(const WaveProfile& p1, const WaveProfile& p2) {
  if (std::abs(p1.speed - p2.speed) > 1e-9 * std::max(1.0, std::abs(p1.speed)) || p1.increasing != p2.increasing)
    fail(ErrorCode::invalid_argument, "compare_up_to_shift: profiles have different speeds");
  const Interpolant f2(p2);
  const double hh = std::max(p1.h, p2.h);
  auto dist = [&](double q) {
    const double lo = std::max(p1.grid_start, p2.grid_start - q) + 2.0 * hh;
    const double hi = std::min(p1.s_end(), p2.s_end() - q) - 2.0 * hh;
    double m = 0.0;
    for (std::size_t i = 0; i < p1.values.size(); ++i) {
      const double s = p1.s(i);
      if (s < lo || s > hi) continue;
      m = std::max(m, std::abs(p1.values[i] - f2(s + q)));
    }
    return m;
  };
  const double q0 = half_theta_crossing(p2) - half_theta_crossing(p1);
  auto [q, d] = boost::math::tools::brent_find_minima(dist, q0 - 3.0 * hh, q0 + 3.0 * hh, 40);
  return ShiftComparison{d, q};
}

}  // namespace nlkpp
