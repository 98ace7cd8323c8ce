#include "nlkpp/laplace.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

#include "nlkpp/error.hpp"
#include "nlkpp/quadrature.hpp"

namespace nlkpp {
namespace {

// Relative band around the probed tail rate inside which partial sums decide.
constexpr double kRateBand = 1e-9;
constexpr double kGrowthGuard = 1e12;

struct Samples {
  double start;
  double step;
  std::vector<double> values;
  double rate;
  double power;
  double end() const { return start + step * static_cast<double>(values.size() - 1); }
};

}  // namespace

const char* to_string(Convergence c) {
  switch (c) {
    case Convergence::converged: return "converged";
    case Convergence::diverged: return "diverged";
    case Convergence::borderline: return "borderline";
  }
  return "unknown";
}

LaplaceFunction LaplaceFunction::from_kernel(Kernel kernel) {
  LaplaceFunction f;
  f.hi_ = kernel.is_truncated() ? kernel.cutoff() : kInf;
  f.breakpoints_ = kernel.breakpoints();
  f.f_ = [kernel](double s) { return kernel.density(s); };
  f.kernel_ = std::move(kernel);
  return f;
}

LaplaceFunction LaplaceFunction::from_callable(Fn fn, Fn log_f, double lo, double hi, std::vector<double> breakpoints) {
  require(static_cast<bool>(fn), "function descriptor needs a callable");
  require(lo < hi, "function support must be a nonempty interval");
  LaplaceFunction f;
  f.f_ = std::move(fn);
  f.log_f_ = std::move(log_f);
  f.lo_ = lo;
  f.hi_ = hi;
  std::sort(breakpoints.begin(), breakpoints.end());
  f.breakpoints_ = std::move(breakpoints);
  return f;
}

LaplaceFunction LaplaceFunction::from_samples(double start, double step, std::vector<double> values, double tail_rate,
                                              double tail_power) {
  require(step > 0.0 && values.size() >= 2, "samples need a positive step and at least two values");
  require(tail_rate > 0.0, "sample tail rate must be positive");
  auto data = std::make_shared<Samples>(Samples{start, step, std::move(values), tail_rate, tail_power});
  require(tail_power == 0.0 || data->end() > 0.0, "algebraic tail factor needs a grid ending at s > 0");
  LaplaceFunction f;
  f.f_ = [data](double s) {
    const auto& d = *data;
    if (s <= d.start) return d.values.front();
    const double x = (s - d.start) / d.step;
    const double n = static_cast<double>(d.values.size() - 1);
    if (x >= n) {
      const double pf = d.power == 0.0 ? 1.0 : std::pow(s / d.end(), d.power);
      return d.values.back() * pf * std::exp(-d.rate * (s - d.end()));
    }
    const auto i = static_cast<std::size_t>(x);
    const double t = x - static_cast<double>(i);
    return (1.0 - t) * d.values[i] + t * d.values[i + 1];
  };
  f.log_f_ = [data, fn = f.f_](double s) {
    const auto& d = *data;
    if (s > d.end() && d.values.back() > 0.0) {
      const double lp = d.power == 0.0 ? 0.0 : d.power * std::log(s / d.end());
      return std::log(d.values.back()) + lp - d.rate * (s - d.end());
    }
    return std::log(fn(s));
  };
  f.breakpoints_.resize(data->values.size());
  for (std::size_t i = 0; i < data->values.size(); ++i)
    f.breakpoints_[i] = data->start + data->step * static_cast<double>(i);
  return f;
}

double LaplaceFunction::operator()(double s) const {
  if (s < lo_ || s > hi_) return 0.0;
  return f_(s);
}

double LaplaceFunction::log_value(double s) const {
  if (s < lo_ || s > hi_) return -kInf;
  if (log_f_) return log_f_(s);
  return std::log(f_(s));
}

namespace {

// Exponential decay rate of the right tail, read off log f at geometric probes.
// +inf for compact support or super-exponential decay.
double probe_tail_rate(const LaplaceFunction& f) {
  if (std::isfinite(f.upper())) return kInf;
  double s0 = 0.0;
  if (!f.breakpoints().empty()) s0 = std::max(s0, f.breakpoints().back());
  if (std::isfinite(f.lower())) s0 = std::max(s0, f.lower());
  std::vector<std::pair<double, double>> pts;
  for (int k = 0; k <= 80; ++k) {
    const double s = s0 + std::ldexp(1.0, k);
    const double g = f.log_value(s);
    if (!std::isfinite(g)) {
      if (pts.empty()) return kInf;
      // Zero after moderate values means compact support; after tiny ones, underflow.
      if (pts.back().second > -600.0) return kInf;
      break;
    }
    pts.emplace_back(s, g);
  }
  if (pts.size() < 3) return kInf;
  auto rate = [&](std::size_t i) {
    return -(pts[i].second - pts[i - 1].second) / (pts[i].first - pts[i - 1].first);
  };
  const double last = rate(pts.size() - 1);
  const double prev = rate(pts.size() - 2);
  if (last > 1.5 * prev && last > 0.0) return kInf;
  return std::max(last, 0.0);
}

double integrate_pieces(const LaplaceFunction& f, double lambda, double lo, double hi) {
  std::vector<double> nodes{lo, hi};
  for (double b : f.breakpoints())
    if (b > lo && b < hi) nodes.push_back(b);
  if (lo < 0.0 && hi > 0.0) nodes.push_back(0.0);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  auto g = [&](double s) {
    const double lv = f.log_value(s);
    return std::isfinite(lv) ? std::exp(lv + lambda * s) : 0.0;
  };
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) acc += quad::integrate(g, nodes[i], nodes[i + 1], 1e-12);
  return acc;
}

LaplaceEval generic_laplace(const LaplaceFunction& f, double lambda, int depth) {
  LaplaceEval out;
  out.lambda = lambda;
  const double rate = probe_tail_rate(f);
  if (lambda > rate * (1.0 + kRateBand)) {
    out.status = Convergence::diverged;
    out.value = kInf;
    return out;
  }
  if (lambda < rate * (1.0 - kRateBand)) {
    out.value = integrate_pieces(f, lambda, f.lower(), f.upper());
    return out;
  }
  // Borderline: accumulate doubling panels and watch the partial sums.
  double s = 1.0;
  if (!f.breakpoints().empty()) s = std::max(s, f.breakpoints().back() + 1.0);
  double total = integrate_pieces(f, lambda, f.lower(), s);
  const double reference = depth < 2 ? generic_laplace(f, 0.5 * lambda, depth + 1).value : 1.0;
  double panel = 0.0;
  for (int k = 0; k < 60; ++k) {
    panel = integrate_pieces(f, lambda, s, 2.0 * s);
    total += panel;
    s *= 2.0;
    if (total > kGrowthGuard * std::max(reference, 1e-300)) break;
  }
  if (total > kGrowthGuard * std::max(reference, 1e-300) || panel > 1e-3 * total) {
    out.status = Convergence::diverged;
    out.value = kInf;
  } else {
    out.status = Convergence::borderline;
    out.value = total;
  }
  return out;
}

}  // namespace

LaplaceEval bilateral_laplace(const LaplaceFunction& f, double lambda) {
  require(std::isfinite(lambda) && lambda > 0.0, "bilateral_laplace: lambda must be positive");
  if (f.kernel()) {
    LaplaceEval out;
    out.lambda = lambda;
    out.value = f.kernel()->exp_moment(0, lambda);
    if (std::isinf(out.value)) out.status = Convergence::diverged;
    return out;
  }
  return generic_laplace(f, lambda, 0);
}

AbscissaEstimate abscissa(const LaplaceFunction& f) {
  AbscissaEstimate est;
  if (f.kernel()) {
    est.value = f.kernel()->abscissa();
    est.kind = f.kernel()->abscissa_kind();
    est.bracket_lo = est.bracket_hi = est.value;
    return est;
  }
  if (std::isfinite(f.upper())) {
    est.value = kInf;
    est.kind = AbscissaKind::closed_form;
    est.bracket_lo = kInf;
    return est;
  }
  est.kind = AbscissaKind::bracketed_numeric;
  const double rate = probe_tail_rate(f);
  auto diverges = [&](double l) {
    if (l > rate * (1.0 + kRateBand)) return true;
    if (l < rate * (1.0 - kRateBand)) return false;
    return generic_laplace(f, l, 1).status == Convergence::diverged;
  };
  double lo = 0.0;
  double hi = 1.0;
  while (!diverges(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) {
      est.value = kInf;
      est.bracket_lo = lo;
      est.bracket_hi = kInf;
      return est;
    }
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (diverges(mid) ? hi : lo) = mid;
  }
  est.bracket_lo = lo;
  est.bracket_hi = hi;
  est.value = 0.5 * (lo + hi);
  return est;
}

double decay_envelope(const LaplaceFunction& f, double lambda) {
  const double sigma = abscissa(f).value;
  require(lambda > 0.0 && lambda < sigma, "decay_envelope: lambda must lie in (0, sigma(f))");
  const auto l = bilateral_laplace(f, lambda);
  require(l.status != Convergence::diverged, "decay_envelope: transform diverges at lambda");
  return lambda * std::exp(lambda) / std::expm1(lambda) * l.value;
}

void write_laplace_csv(std::ostream& os, const LaplaceFunction& f, const std::vector<double>& lambdas) {
  const auto old = os.precision(17);
  os << "lambda,value,status\n";
  for (double l : lambdas) {
    const auto e = bilateral_laplace(f, l);
    os << l << ',';
    if (std::isinf(e.value)) {
      os << "inf";
    } else {
      os << e.value;
    }
    os << ',' << to_string(e.status) << '\n';
  }
  os.precision(old);
}

}  // namespace nlkpp
