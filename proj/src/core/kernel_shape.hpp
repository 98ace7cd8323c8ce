#pragma once

#include <complex>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "nlkpp/kernel.hpp"

namespace nlkpp::detail {

/// int_a^b s^n e^{k s} ds. Infinite bounds are allowed when the integral converges.
double poly_exp_integral(int n, double k, double a, double b);

/// Unshifted, untruncated density. `upper` arguments cut the integration range at (-inf, upper].
class KernelShape {
 public:
  virtual ~KernelShape() = default;

  virtual std::string family() const = 0;
  virtual double density(double s) const = 0;
  /// int_{-inf}^{upper} s^n a(s) e^{lambda s} ds; +inf (or -inf for odd n on the left) when divergent.
  virtual double moment(int n, double lambda, double upper) const = 0;
  virtual double cdf(double s) const { return moment(0, 0.0, s); }
  virtual double sigma_right() const = 0;
  virtual double sigma_left() const = 0;
  virtual AbscissaKind abscissa_kind() const { return AbscissaKind::closed_form; }
  /// Finiteness of int s^n a(s) e^{sigma s} ds at the finite right abscissa.
  virtual bool finite_at_sigma(int n) const = 0;
  virtual std::complex<double> transform(std::complex<double> z, double upper) const;
  virtual double sup() const = 0;
  virtual std::pair<double, double> support(double tail_mass) const = 0;
  virtual std::vector<double> breakpoints() const { return {0.0}; }
  virtual std::shared_ptr<const KernelShape> reflect() const = 0;
  virtual bool symmetric() const = 0;
  virtual double parameter(const std::string& name) const;
  virtual const std::vector<double>* table() const { return nullptr; }

 protected:
  /// Quadrature of a(s) e^{z s} over (-inf, upper] on panels short enough for the oscillation.
  std::complex<double> numeric_transform(std::complex<double> z, double upper) const;
};

using ShapePtr = std::shared_ptr<const KernelShape>;

ShapePtr make_laplace(double rate);
ShapePtr make_gaussian(double variance);
ShapePtr make_uniform(double lo, double hi);
ShapePtr make_exp_poly(double p, double q, double mu);
ShapePtr make_tabulated(double start, double step, std::vector<double> values, bool normalize);
ShapePtr make_radial_exponential(int dim, double rate);

}  // namespace nlkpp::detail
