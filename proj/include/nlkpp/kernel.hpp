#pragma once

#include <complex>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace nlkpp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Reaction and dispersal rates of the doubly nonlocal Fisher-KPP equation.
struct ModelParams {
  double kappa_plus = 0.0;      // dispersal rate
  double m = 0.0;               // mortality
  double kappa_local = 0.0;     // local competition
  double kappa_nonlocal = 0.0;  // nonlocal competition

  double kappa() const { return kappa_local + kappa_nonlocal; }

  /// Rejects non-positive rates and a vanishing total competition.
  void validate() const;
};

/// Positive constant stationary state (kappa_plus - m) / (kappa_local + kappa_nonlocal).
/// Throws assumption_failed when kappa_plus <= m.
double theta(const ModelParams& params);

enum class AbscissaKind { closed_form, bracketed_numeric, table_truncated };

const char* to_string(AbscissaKind kind);

namespace detail {
class KernelShape;
}

/// One-dimensional probability density (projection of a dispersal kernel onto a direction).
///
/// Kernels are immutable values backed by shared, read-only shape objects, so
/// copies are cheap and safe to share between threads. Every kernel is an
/// analytic family or a table, optionally shifted by a constant and
/// optionally cut off above some point (`truncated`), which leaves a
/// sub-probability density.
class Kernel {
 public:
  static Kernel laplace(double rate);
  static Kernel gaussian(double variance);
  static Kernel uniform(double lo, double hi);
  /// alpha * exp(-mu |s|^p) / (1 + |s|^q) with alpha fixed by unit mass.
  static Kernel exp_poly(double p, double q, double mu);
  /// Piecewise-linear density through `values` on start + i*step; zero outside.
  /// The table must integrate to one within 1e-6 unless `normalize` is set.
  static Kernel tabulated(double start, double step, std::vector<double> values, bool normalize = false);
  /// Projection of the radially symmetric density proportional to exp(-rate |x|) in `dim` = 1, 2, 3.
  static Kernel radial_exponential(int dim, double rate);

  Kernel shifted(double delta) const;
  /// Multiplies the density by the indicator of (-inf, upper); mass is not renormalized.
  Kernel truncated(double upper) const;
  /// s -> -s. Not available for truncated kernels.
  Kernel reflected() const;

  double density(double s) const;
  double mass() const;
  double mass_below(double s) const;

  /// Right abscissa sigma(a): sup of lambda with finite transform at lambda.
  double abscissa() const;
  AbscissaKind abscissa_kind() const;
  /// Abscissa of s -> a(-s); bounds the transform for negative arguments.
  double left_abscissa() const;

  /// int s^order a(s) e^{lambda s} ds for order 0, 1, 2. Returns +inf (or -inf for
  /// an odd order diverging on the left) when the integral diverges.
  double exp_moment(int order, double lambda) const;
  /// Whether exp_moment(order, abscissa()) is finite (abscissa must be finite).
  bool moment_finite_at_abscissa(int order) const;

  std::complex<double> laplace_complex(std::complex<double> z) const;

  double sup_density() const;
  double first_abs_moment() const;
  /// Interval outside of which the kernel carries at most `tail_mass`.
  std::pair<double, double> support(double tail_mass) const;
  /// Points where the density is not smooth (quadrature split points).
  std::vector<double> breakpoints() const;

  std::string family() const;
  double shift() const { return shift_; }
  double cutoff() const { return cutoff_; }
  bool is_truncated() const { return cutoff_ < kInf; }
  bool is_symmetric() const;
  /// Family parameters by name ("rate", "variance", "lo", "hi", "p", "q", "mu", "alpha",
  /// "dim", "grid_start", "grid_step"); NaN when absent.
  double parameter(const std::string& name) const;
  const std::vector<double>* table_values() const;

 private:
  Kernel(std::shared_ptr<const detail::KernelShape> shape, double shift, double cutoff);

  std::shared_ptr<const detail::KernelShape> shape_;
  double shift_ = 0.0;
  double cutoff_ = kInf;
};

struct KernelPair {
  Kernel a_plus;
  Kernel a_minus;
};

/// d-dimensional dispersal density descriptors supported by project_to_direction.
struct KernelND {
  enum class Form { gaussian, radial_exponential, product, grid2d };
  Form form = Form::gaussian;
  int dim = 1;
  std::vector<double> variances;   // gaussian: per-axis variances
  std::vector<double> means;       // gaussian: per-axis means (optional)
  double rate = 1.0;               // radial_exponential
  std::vector<Kernel> factors;     // product: one-dimensional factor per axis
  double grid_start_x = 0.0, grid_start_y = 0.0, grid_step = 0.0;  // grid2d
  std::size_t grid_nx = 0, grid_ny = 0;
  std::vector<double> grid_values;  // grid2d, row-major in x
};

/// One-dimensional marginal of `kernel` along the unit vector `xi`.
Kernel project_to_direction(const KernelND& kernel, const std::vector<double>& xi);

/// First directional moment m_xi = int s a(s) ds; rejects a divergent first absolute moment.
double directional_moment(const Kernel& kernel);

/// J_theta(s) = kappa_plus a_plus(s) - theta kappa_nonlocal a_minus(s).
class JTheta {
 public:
  JTheta(const KernelPair& pair, const ModelParams& params);

  double operator()(double s) const;
  double theta() const { return theta_; }

  struct Scan {
    double min_value = 0.0;
    double argmin = 0.0;
    bool nonnegative = true;
    // Positivity near the origin: J >= rho on [-delta, delta], when found.
    bool positive_near_origin = false;
    double rho = 0.0;
    double delta = 0.0;
  };
  /// Evaluates J on a uniform grid covering both kernels' numerical supports.
  Scan scan(double step = 1e-3) const;

 private:
  KernelPair pair_;
  ModelParams params_;
  double theta_;
};

enum class AssumptionStatus { holds, fails, undecidable };

const char* to_string(AssumptionStatus status);

struct AssumptionEntry {
  std::string id;        // "Q1".."Q7"
  std::string label;     // short description
  AssumptionStatus status = AssumptionStatus::holds;
  double diagnostic = 0.0;
  std::string detail;
};

/// Q1 kappa_plus > m; Q2 J_theta >= 0; Q3 positive abscissa; Q4 non-degeneracy;
/// Q5 bounded density; Q6 finite first absolute moment; Q7 J_theta >= rho near 0.
struct AssumptionReport {
  std::vector<AssumptionEntry> entries;

  const AssumptionEntry& get(const std::string& id) const;
  bool holds(const std::string& id) const;
  /// Q1..Q6 all hold (required for dispersion and profile work).
  bool dispersion_ready() const;
  /// First failing id among Q1..Q6, or empty.
  std::string first_blocking() const;
};

AssumptionReport check_assumptions(const KernelPair& pair, const ModelParams& params);

/// Throws assumption_failed naming the first failing entry among Q1..Q6.
void require_dispersion_assumptions(const KernelPair& pair, const ModelParams& params);

}  // namespace nlkpp
