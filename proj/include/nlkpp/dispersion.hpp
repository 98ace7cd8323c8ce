#pragma once

#include <complex>
#include <ostream>
#include <vector>

#include "nlkpp/kernel.hpp"

namespace nlkpp {

enum class KernelClass { V, W };

/// Which form the interval I of admissible abscissas takes.
enum class IntervalKind {
  unbounded,    // (0, inf): sigma = inf
  open_end,     // (0, sigma): transform diverges at sigma
  closed_end,   // (0, sigma]: transform finite at sigma
};

const char* to_string(KernelClass c);
const char* to_string(IntervalKind k);

struct DispersionReport {
  double lambda_star = 0.0;
  double c_star = 0.0;
  KernelClass kernel_class = KernelClass::V;
  double sigma_plus = kInf;
  double T_at_sigma = 0.0;  // NaN unless interval_kind == closed_end
  IntervalKind interval_kind = IntervalKind::unbounded;
  double m_xi = 0.0;
  bool critical_equality = false;
  double tie_tolerance = 0.0;
};

struct CharacteristicRoot {
  double lambda_c = 0.0;
  double speed = 0.0;
  int multiplicity = 1;
};

/// G(lambda) = (kappa_plus A(lambda) - m) / lambda; +inf beyond the abscissa.
double g_function(const Kernel& a_plus, const ModelParams& params, double lambda);

/// G'(lambda) = (m - T(lambda)) / lambda^2 inside the strip.
double g_derivative(const Kernel& a_plus, const ModelParams& params, double lambda);

/// T(lambda) = kappa_plus int (1 - lambda s) a(s) e^{lambda s} ds on (0, sigma].
/// At the endpoint the value may be -inf; rejects the endpoint when A(sigma) = inf.
double t_function(const Kernel& a_plus, const ModelParams& params, double lambda);

/// H(lambda) = lambda F'(lambda) - F(lambda) with F = kappa_plus A - m.
double h_numerator(const Kernel& a_plus, const ModelParams& params, double lambda);

/// h_c(lambda) = kappa_plus A(lambda) - m - c lambda; +inf beyond the abscissa.
double characteristic(const Kernel& a_plus, const ModelParams& params, double c, double lambda);
std::complex<double> characteristic(const Kernel& a_plus, const ModelParams& params, double c,
                                    std::complex<double> z);

KernelClass classify(const Kernel& a_plus, const ModelParams& params);

DispersionReport minimal_speed(const Kernel& a_plus, const ModelParams& params);

/// Smallest positive root of h_c for c >= c*. Throws no_wave for c < c*.
CharacteristicRoot speed_to_abscissa(const Kernel& a_plus, const ModelParams& params, double c);
CharacteristicRoot speed_to_abscissa(const Kernel& a_plus, const ModelParams& params, const DispersionReport& rep,
                                     double c);

/// G(sigma) for sigma in (0, lambda*].
double abscissa_to_speed(const Kernel& a_plus, const ModelParams& params, double sigma);

int root_multiplicity(const Kernel& a_plus, const ModelParams& params, double c);
int root_multiplicity(const Kernel& a_plus, const DispersionReport& rep, double c);

struct MuStarResult {
  double mu_star = 0.0;
  double alpha = 0.0;  // normalization of the kernel at mu_star
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  bool inside_bracket = false;
};

/// Critical mu for alpha e^{-mu|s|}/(1+|s|^q): below it the kernel is class W.
MuStarResult mu_star(double q, const ModelParams& params);

/// (kappa_plus A(lambda) - kappa_plus) / lambda, a lower bound for admissible speeds.
double lowest_speed_bound(const Kernel& a_plus, const ModelParams& params, double lambda);

struct ComplexScan {
  double min_modulus = 0.0;
  double beta_at_min = 0.0;
};

/// min over beta in [beta_lo, beta_hi] of |h_c(lambda + i beta)|.
ComplexScan scan_complex_roots(const Kernel& a_plus, const ModelParams& params, double c, double lambda,
                               double beta_lo = 0.01, double beta_hi = 10.0, int samples = 2000);

/// CSV "lambda,G,T,h" on the given grid; h uses speed c.
void write_dispersion_csv(std::ostream& os, const Kernel& a_plus, const ModelParams& params, double c,
                          const std::vector<double>& lambdas);

}  // namespace nlkpp
