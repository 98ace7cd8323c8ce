#pragma once

#include <functional>
#include <utility>

namespace nlkpp::quad {

using Integrand = std::function<double(double)>;

/// Relative tolerance used by every kernel-moment integral unless a caller asks otherwise.
inline constexpr double default_rel_tol = 1e-12;

/// Adaptive integral of f over [a, b]; either bound may be infinite.
///
/// Finite intervals use adaptive Gauss-Kronrod (61 points), half-lines use the
/// exp-sinh double-exponential map (robust against algebraically decaying
/// tails), and the full line is split at zero.
double integrate(const Integrand& f, double a, double b, double rel_tol = default_rel_tol);

/// Same as integrate(), but the integrand may have integrable endpoint singularities.
double integrate_singular(const Integrand& f, double a, double b, double rel_tol = default_rel_tol);

/// Fixed 8-point Gauss-Legendre rule on [a, b].
double gauss8(const Integrand& f, double a, double b);

/// Fourier-type integrals over [0, inf): returns {int f(t) cos(w t) dt, int f(t) sin(w t) dt}.
/// f must decay (possibly slowly); w > 0.
std::pair<double, double> fourier_half_line(const Integrand& f, double w);

}  // namespace nlkpp::quad
