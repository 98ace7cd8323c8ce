#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "nlkpp/kernel.hpp"

namespace nlkpp {

enum class Convergence { converged, diverged, borderline };

const char* to_string(Convergence c);

/// Value of the bilateral transform (Lf)(lambda) = int f(s) e^{lambda s} ds.
struct LaplaceEval {
  double value = 0.0;  // +inf when diverged
  double lambda = 0.0;
  Convergence status = Convergence::converged;
};

struct AbscissaEstimate {
  double value = kInf;
  AbscissaKind kind = AbscissaKind::closed_form;
  double bracket_lo = 0.0;  // numeric estimates: convergent below, divergent above
  double bracket_hi = kInf;
};

/// Nonnegative bounded function on the line, described either by a kernel
/// (closed-form transforms), by a callable, or by grid samples with analytic tails.
class LaplaceFunction {
 public:
  using Fn = std::function<double(double)>;

  static LaplaceFunction from_kernel(Kernel kernel);
  /// `log_f` (optional) evaluates log f without underflow, which lets the tail
  /// probe reach far beyond the double range of f itself. f must vanish below
  /// `lo` and above `hi`; `breakpoints` mark kinks or jumps.
  static LaplaceFunction from_callable(Fn f, Fn log_f = {}, double lo = -kInf, double hi = kInf,
                                       std::vector<double> breakpoints = {});
  /// Piecewise-linear samples on start + i*step, extended by values.front() on the
  /// left and by values.back() * (s/s_N)^{power} e^{-rate (s - s_N)} on the right.
  static LaplaceFunction from_samples(double start, double step, std::vector<double> values, double tail_rate,
                                      double tail_power = 0.0);

  double operator()(double s) const;
  double log_value(double s) const;
  const std::optional<Kernel>& kernel() const { return kernel_; }
  double lower() const { return lo_; }
  double upper() const { return hi_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }

 private:
  std::optional<Kernel> kernel_;
  Fn f_;
  Fn log_f_;
  double lo_ = -kInf;
  double hi_ = kInf;
  std::vector<double> breakpoints_;
};

/// (Lf)(lambda) for lambda > 0, with divergence detection for non-kernel inputs.
LaplaceEval bilateral_laplace(const LaplaceFunction& f, double lambda);

/// Right abscissa: closed form for kernels, otherwise bisection on the
/// convergence/divergence classification. Super-exponential decay gives +inf.
AbscissaEstimate abscissa(const LaplaceFunction& f);

/// C(lambda) = lambda e^lambda / (e^lambda - 1) (Lf)(lambda); for decreasing f,
/// f(s) <= C(lambda) e^{-lambda s}. Requires 0 < lambda < sigma(f).
double decay_envelope(const LaplaceFunction& f, double lambda);

/// CSV table "lambda,value,status" for plotting.
void write_laplace_csv(std::ostream& os, const LaplaceFunction& f, const std::vector<double>& lambdas);

}  // namespace nlkpp
