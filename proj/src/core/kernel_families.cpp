#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "kernel_shape.hpp"
#include "nlkpp/error.hpp"
#include "nlkpp/quadrature.hpp"

namespace nlkpp::detail {
namespace {

using cplx = std::complex<double>;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kPi = std::numbers::pi;

double diverged(int n, bool left) { return (left && (n % 2 == 1)) ? -kInf : kInf; }

double std_normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi); }
double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

double poly_exp_integral(int n, double k, double a, double b) {
  if (!(a < b)) return 0.0;
  if (std::isinf(a) && k <= 0.0) return diverged(n, true);
  if (std::isinf(b) && k >= 0.0) return kInf;
  if (std::isfinite(a) && std::isfinite(b) && std::abs(k) * (b - a) < 1.0) {
    return quad::integrate([&](double s) { return std::pow(s, n) * std::exp(k * s); }, a, b);
  }
  // Antiderivative e^{ks} sum_j (-1)^j n!/(n-j)! s^{n-j} / k^{j+1}; vanishes at the infinite end.
  auto anti = [&](double s) {
    if (std::isinf(s)) return 0.0;
    double sum = 0.0;
    double falling = 1.0;
    double kp = k;
    for (int j = 0; j <= n; ++j) {
      const double sign = (j % 2 == 0) ? 1.0 : -1.0;
      sum += sign * falling * std::pow(s, n - j) / kp;
      falling *= (n - j);
      kp *= k;
    }
    return std::exp(k * s) * sum;
  };
  return anti(b) - anti(a);
}

double KernelShape::parameter(const std::string&) const { return kNaN; }

std::complex<double> KernelShape::transform(std::complex<double> z, double upper) const {
  return numeric_transform(z, upper);
}

std::complex<double> KernelShape::numeric_transform(std::complex<double> z, double upper) const {
  const double x = z.real();
  const double y = z.imag();
  auto [lo, hi] = support(1e-17);
  auto weighted = [&](double s) { return density(s) * std::exp(x * s) * (1.0 + std::abs(s)); };
  while (hi < upper && hi < 1e6 && weighted(hi) > 1e-18) hi += std::max(1.0, 0.5 * std::abs(hi));
  while (lo > -1e6 && weighted(lo) > 1e-18) lo -= std::max(1.0, 0.5 * std::abs(lo));
  hi = std::min(hi, upper);
  if (!(lo < hi)) return {0.0, 0.0};

  std::vector<double> nodes{lo, hi};
  for (double b : breakpoints())
    if (b > lo && b < hi) nodes.push_back(b);
  std::sort(nodes.begin(), nodes.end());
  const double width = (y != 0.0) ? std::min(2.0, kPi / std::abs(y)) : kInf;

  cplx total{0.0, 0.0};
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double a = nodes[i];
    const double b = nodes[i + 1];
    const int panels = std::isinf(width) ? 1 : std::max(1, static_cast<int>(std::ceil((b - a) / width)));
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
      const double pa = a + p * h;
      const double pb = (p + 1 == panels) ? b : pa + h;
      const double re = quad::integrate(
          [&](double s) { return density(s) * std::exp(x * s) * std::cos(y * s); }, pa, pb, 1e-10);
      const double im = (y == 0.0) ? 0.0
                                   : quad::integrate(
                                         [&](double s) { return density(s) * std::exp(x * s) * std::sin(y * s); },
                                         pa, pb, 1e-10);
      total += cplx(re, im);
    }
  }
  return total;
}

namespace {

class LaplaceShape final : public KernelShape {
 public:
  explicit LaplaceShape(double rate) : mu_(rate) {}

  std::string family() const override { return "laplace"; }
  double density(double s) const override { return 0.5 * mu_ * std::exp(-mu_ * std::abs(s)); }

  double moment(int n, double lambda, double upper) const override {
    if (lambda <= -mu_) return diverged(n, true);
    double v = 0.5 * mu_ * poly_exp_integral(n, mu_ + lambda, -kInf, std::min(upper, 0.0));
    if (upper > 0.0) {
      if (std::isinf(upper) && lambda >= mu_) return kInf;
      v += 0.5 * mu_ * poly_exp_integral(n, lambda - mu_, 0.0, upper);
    }
    return v;
  }

  double cdf(double s) const override {
    return s < 0.0 ? 0.5 * std::exp(mu_ * s) : 1.0 - 0.5 * std::exp(-mu_ * s);
  }

  double sigma_right() const override { return mu_; }
  double sigma_left() const override { return mu_; }
  bool finite_at_sigma(int) const override { return false; }

  std::complex<double> transform(std::complex<double> z, double upper) const override {
    const double u0 = std::min(upper, 0.0);
    cplx v = 0.5 * mu_ / (mu_ + z) * std::exp((mu_ + z) * u0);
    if (upper > 0.0) {
      const cplx k = z - mu_;
      if (std::isinf(upper)) {
        v += -0.5 * mu_ / k;
      } else if (std::abs(k) * upper < 1e-8) {
        v += 0.5 * mu_ * upper * (1.0 + 0.5 * k * upper);
      } else {
        v += 0.5 * mu_ * (std::exp(k * upper) - 1.0) / k;
      }
    }
    return v;
  }

  double sup() const override { return 0.5 * mu_; }
  std::pair<double, double> support(double tail_mass) const override {
    const double x = std::log(1.0 / tail_mass) / mu_;
    return {-x, x};
  }
  ShapePtr reflect() const override { return std::make_shared<LaplaceShape>(mu_); }
  bool symmetric() const override { return true; }
  double parameter(const std::string& name) const override { return name == "rate" ? mu_ : kNaN; }

 private:
  double mu_;
};

class GaussianShape final : public KernelShape {
 public:
  explicit GaussianShape(double variance) : v_(variance), sd_(std::sqrt(variance)) {}

  std::string family() const override { return "gaussian"; }
  double density(double s) const override { return std_normal_pdf(s / sd_) / sd_; }

  double moment(int n, double lambda, double upper) const override {
    // a(s) e^{lambda s} = e^{lambda^2 v / 2} N(lambda v, v)(s); partial moments of a normal.
    const double shift = lambda * v_;
    const double scale = std::exp(0.5 * lambda * lambda * v_);
    const double z = (upper - shift) / sd_;
    const double phi = std::isinf(z) ? 0.0 : std_normal_pdf(z);
    const double p0 = std_normal_cdf(z);
    const double p1 = -sd_ * phi;
    const double p2 = v_ * (p0 - (std::isinf(z) ? 0.0 : z * phi));
    double v = 0.0;
    switch (n) {
      case 0: v = p0; break;
      case 1: v = p1 + shift * p0; break;
      case 2: v = p2 + 2.0 * shift * p1 + shift * shift * p0; break;
      default: fail(ErrorCode::invalid_argument, "moment order must be 0, 1 or 2");
    }
    return scale * v;
  }

  double cdf(double s) const override { return std_normal_cdf(s / sd_); }
  double sigma_right() const override { return kInf; }
  double sigma_left() const override { return kInf; }
  bool finite_at_sigma(int) const override { return true; }

  std::complex<double> transform(std::complex<double> z, double upper) const override {
    if (std::isinf(upper)) return std::exp(0.5 * v_ * z * z);
    return numeric_transform(z, upper);
  }

  double sup() const override { return 1.0 / (sd_ * std::sqrt(2.0 * kPi)); }
  std::pair<double, double> support(double tail_mass) const override {
    const double x = std::numbers::sqrt2 * boost::math::erfc_inv(std::min(tail_mass, 1.0)) * sd_;
    return {-x, x};
  }
  ShapePtr reflect() const override { return std::make_shared<GaussianShape>(v_); }
  bool symmetric() const override { return true; }
  double parameter(const std::string& name) const override { return name == "variance" ? v_ : kNaN; }

 private:
  double v_;
  double sd_;
};

class UniformShape final : public KernelShape {
 public:
  UniformShape(double lo, double hi) : lo_(lo), hi_(hi), height_(1.0 / (hi - lo)) {}

  std::string family() const override { return "uniform"; }
  double density(double s) const override { return (s >= lo_ && s <= hi_) ? height_ : 0.0; }

  double moment(int n, double lambda, double upper) const override {
    return height_ * poly_exp_integral(n, lambda, lo_, std::min(hi_, upper));
  }
  double cdf(double s) const override { return std::clamp((s - lo_) * height_, 0.0, 1.0); }

  double sigma_right() const override { return kInf; }
  double sigma_left() const override { return kInf; }
  bool finite_at_sigma(int) const override { return true; }

  std::complex<double> transform(std::complex<double> z, double upper) const override {
    const double b = std::min(hi_, upper);
    if (!(lo_ < b)) return {0.0, 0.0};
    const double w = b - lo_;
    if (std::abs(z) * w < 1e-4) {
      const cplx zw = z * w;
      return height_ * w * std::exp(z * lo_) * (1.0 + zw / 2.0 + zw * zw / 6.0);
    }
    return height_ * (std::exp(z * b) - std::exp(z * lo_)) / z;
  }

  double sup() const override { return height_; }
  std::pair<double, double> support(double) const override { return {lo_, hi_}; }
  std::vector<double> breakpoints() const override { return {lo_, hi_}; }
  ShapePtr reflect() const override { return std::make_shared<UniformShape>(-hi_, -lo_); }
  bool symmetric() const override { return lo_ == -hi_; }
  double parameter(const std::string& name) const override {
    if (name == "lo") return lo_;
    if (name == "hi") return hi_;
    return kNaN;
  }

 private:
  double lo_;
  double hi_;
  double height_;
};

// alpha exp(-mu |s|^p) / (1 + |s|^q)
class ExpPolyShape final : public KernelShape {
 public:
  ExpPolyShape(double p, double q, double mu) : p_(p), q_(q), mu_(mu) {
    const double half = side_integral(0, 0.0, 0.0, kInf, 1.0);
    alpha_ = 0.5 / half;
  }

  std::string family() const override { return "exp_poly"; }
  double density(double s) const override {
    const double u = std::abs(s);
    return alpha_ * std::exp(-mu_ * std::pow(u, p_)) / (1.0 + std::pow(u, q_));
  }

  double moment(int n, double lambda, double upper) const override {
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    if (upper >= 0.0) {
      const double neg = side_integral(n, -lambda, 0.0, kInf, alpha_);
      if (std::isinf(neg)) return diverged(n, true);
      const double pos = side_integral(n, lambda, 0.0, upper, alpha_);
      if (std::isinf(pos)) return kInf;
      return pos + sign * neg;
    }
    const double neg = side_integral(n, -lambda, -upper, kInf, alpha_);
    if (std::isinf(neg)) return diverged(n, true);
    return sign * neg;
  }

  double sigma_right() const override {
    if (mu_ == 0.0 || p_ < 1.0) return 0.0;
    if (p_ == 1.0) return mu_;
    return kInf;
  }
  double sigma_left() const override { return sigma_right(); }

  bool finite_at_sigma(int n) const override { return q_ > n + 1.0 || (sigma_right() == 0.0 && mu_ > 0.0 && p_ > 0.0); }

  std::complex<double> transform(std::complex<double> z, double upper) const override {
    if (z.imag() == 0.0) return moment(0, z.real(), upper);
    if (std::isfinite(upper)) return numeric_transform(z, upper);
    const double x = z.real();
    const double w = std::abs(z.imag());
    const double sgn = z.imag() > 0.0 ? 1.0 : -1.0;
    auto f_pos = [&](double u) { return std::exp(log_integrand(0, x, u)) * alpha_; };
    auto f_neg = [&](double u) { return std::exp(log_integrand(0, -x, u)) * alpha_; };
    const auto [cp, sp] = quad::fourier_half_line(f_pos, w);
    const auto [cn, sn] = quad::fourier_half_line(f_neg, w);
    return {cp + cn, sgn * (sp - sn)};
  }

  double sup() const override { return density(0.0); }

  std::pair<double, double> support(double tail_mass) const override {
    double x = 1.0;
    while (x < 1e12 && 2.0 * side_integral(0, 0.0, x, kInf, alpha_) > tail_mass) x *= 2.0;
    return {-x, x};
  }

  ShapePtr reflect() const override { return std::make_shared<ExpPolyShape>(*this); }
  bool symmetric() const override { return true; }
  double parameter(const std::string& name) const override {
    if (name == "p") return p_;
    if (name == "q") return q_;
    if (name == "mu") return mu_;
    if (name == "alpha") return alpha_;
    return kNaN;
  }

 private:
  double log_integrand(int n, double k, double u) const {
    if (u == 0.0) return (n == 0) ? -mu_ * std::pow(0.0, p_) : -kInf;
    const double uq = std::pow(u, q_);
    const double log_den = (q_ * std::log(u) > 30.0) ? q_ * std::log(u) + std::log1p(1.0 / uq) : std::log1p(uq);
    return n * std::log(u) + k * u - mu_ * std::pow(u, p_) - log_den;
  }

  bool side_diverges(int n, double k) const {
    const bool decays = mu_ > 0.0 && p_ > 0.0;
    if (decays && p_ > 1.0) return false;
    if (decays && p_ == 1.0) {
      if (k < mu_) return false;
      if (k > mu_) return true;
      return !(q_ > n + 1.0);
    }
    if (k > 0.0) return true;
    if (k < 0.0) return false;
    return !(decays || q_ > n + 1.0);
  }

  // scale * int_lo^hi u^n e^{k u - mu u^p} / (1 + u^q) du
  double side_integral(int n, double k, double lo, double hi, double scale) const {
    if (!(lo < hi)) return 0.0;
    if (std::isinf(hi) && side_diverges(n, k)) return kInf;
    const bool edge = std::isinf(hi) && lo == 0.0 && q_ > n + 1.0 &&
                      ((p_ == 1.0 && k == mu_) || ((p_ == 0.0 || mu_ == 0.0) && k == 0.0));
    if (edge) {
      const double c = (p_ == 0.0) ? std::exp(-mu_) : 1.0;
      return scale * c * (kPi / q_) / std::sin(kPi * (n + 1.0) / q_);
    }
    auto f = [&](double u) { return std::exp(log_integrand(n, k, u)); };
    double v = 0.0;
    if (lo < 1.0 && hi > 1.0) {
      v = quad::integrate(f, lo, 1.0) + quad::integrate(f, 1.0, hi);
    } else {
      v = quad::integrate(f, lo, hi);
    }
    return scale * v;
  }

  double p_;
  double q_;
  double mu_;
  double alpha_ = 1.0;
};

class TabulatedShape final : public KernelShape {
 public:
  TabulatedShape(double start, double step, std::vector<double> values)
      : start_(start), step_(step), values_(std::move(values)) {
    cumulative_.assign(values_.size(), 0.0);
    for (std::size_t i = 1; i < values_.size(); ++i)
      cumulative_[i] = cumulative_[i - 1] + 0.5 * step_ * (values_[i - 1] + values_[i]);
  }

  std::string family() const override { return "tabulated"; }
  double end() const { return start_ + step_ * static_cast<double>(values_.size() - 1); }

  double density(double s) const override {
    const double x = (s - start_) / step_;
    if (x < 0.0 || x > static_cast<double>(values_.size() - 1)) return 0.0;
    const auto i = std::min(static_cast<std::size_t>(x), values_.size() - 2);
    const double t = x - static_cast<double>(i);
    return (1.0 - t) * values_[i] + t * values_[i + 1];
  }

  double moment(int n, double lambda, double upper) const override {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
      const double a = start_ + step_ * static_cast<double>(i);
      if (a >= upper) break;
      const double b = std::min(a + step_, upper);
      const double va = values_[i];
      const double slope = (values_[i + 1] - va) / step_;
      if (va == 0.0 && values_[i + 1] == 0.0) continue;
      total += quad::gauss8(
          [&](double s) { return std::pow(s, n) * (va + slope * (s - a)) * std::exp(lambda * s); }, a, b);
    }
    return total;
  }

  double cdf(double s) const override {
    const double x = (s - start_) / step_;
    if (x <= 0.0) return 0.0;
    if (x >= static_cast<double>(values_.size() - 1)) return cumulative_.back();
    const auto i = static_cast<std::size_t>(x);
    const double t = (x - static_cast<double>(i)) * step_;
    const double slope = (values_[i + 1] - values_[i]) / step_;
    return cumulative_[i] + values_[i] * t + 0.5 * slope * t * t;
  }

  double sigma_right() const override { return kInf; }
  double sigma_left() const override { return kInf; }
  AbscissaKind abscissa_kind() const override { return AbscissaKind::table_truncated; }
  bool finite_at_sigma(int) const override { return true; }

  std::complex<double> transform(std::complex<double> z, double upper) const override {
    cplx total{0.0, 0.0};
    for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
      const double a = start_ + step_ * static_cast<double>(i);
      if (a >= upper) break;
      const double b = std::min(a + step_, upper);
      const double va = values_[i];
      const double slope = (values_[i + 1] - va) / step_;
      auto lin = [&](double s) { return va + slope * (s - a); };
      const double re =
          quad::gauss8([&](double s) { return lin(s) * std::exp(z.real() * s) * std::cos(z.imag() * s); }, a, b);
      const double im =
          quad::gauss8([&](double s) { return lin(s) * std::exp(z.real() * s) * std::sin(z.imag() * s); }, a, b);
      total += cplx(re, im);
    }
    return total;
  }

  double sup() const override { return *std::max_element(values_.begin(), values_.end()); }
  std::pair<double, double> support(double) const override { return {start_, end()}; }
  std::vector<double> breakpoints() const override {
    std::vector<double> nodes(values_.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i] = start_ + step_ * static_cast<double>(i);
    return nodes;
  }
  ShapePtr reflect() const override {
    std::vector<double> rev(values_.rbegin(), values_.rend());
    return std::make_shared<TabulatedShape>(-end(), step_, std::move(rev));
  }
  bool symmetric() const override {
    if (std::abs(start_ + end()) > 1e-12 * std::max(1.0, std::abs(start_))) return false;
    return std::equal(values_.begin(), values_.end(), values_.rbegin());
  }
  double parameter(const std::string& name) const override {
    if (name == "grid_start") return start_;
    if (name == "grid_step") return step_;
    return kNaN;
  }
  const std::vector<double>* table() const override { return &values_; }

 private:
  double start_;
  double step_;
  std::vector<double> values_;
  std::vector<double> cumulative_;
};

// Marginal of C e^{-beta |x|} on R^3: (beta/4)(1 + beta|s|) e^{-beta|s|}.
class Radial3Shape final : public KernelShape {
 public:
  explicit Radial3Shape(double rate) : b_(rate) {}

  std::string family() const override { return "radial_exponential"; }
  double density(double s) const override {
    const double u = std::abs(s);
    return 0.25 * b_ * (1.0 + b_ * u) * std::exp(-b_ * u);
  }

  double moment(int n, double lambda, double upper) const override {
    if (lambda <= -b_) return diverged(n, true);
    const double u0 = std::min(upper, 0.0);
    double v = poly_exp_integral(n, b_ + lambda, -kInf, u0) - b_ * poly_exp_integral(n + 1, b_ + lambda, -kInf, u0);
    if (upper > 0.0) {
      if (std::isinf(upper) && lambda >= b_) return kInf;
      v += poly_exp_integral(n, lambda - b_, 0.0, upper) + b_ * poly_exp_integral(n + 1, lambda - b_, 0.0, upper);
    }
    return 0.25 * b_ * v;
  }

  double cdf(double s) const override {
    const double u = std::abs(s);
    const double left = 0.25 * (2.0 + b_ * u) * std::exp(-b_ * u);
    return s < 0.0 ? left : 1.0 - left;
  }

  double sigma_right() const override { return b_; }
  double sigma_left() const override { return b_; }
  bool finite_at_sigma(int) const override { return false; }

  std::complex<double> transform(std::complex<double> z, double upper) const override {
    if (std::isfinite(upper)) return numeric_transform(z, upper);
    const cplx l = b_ + z;
    const cplx r = b_ - z;
    return 0.25 * b_ * (1.0 / l + b_ / (l * l) + 1.0 / r + b_ / (r * r));
  }

  double sup() const override { return 0.25 * b_; }
  std::pair<double, double> support(double tail_mass) const override {
    double x = 1.0 / b_;
    while (cdf(-x) > 0.5 * tail_mass) x *= 1.25;
    return {-x, x};
  }
  ShapePtr reflect() const override { return std::make_shared<Radial3Shape>(b_); }
  bool symmetric() const override { return true; }
  double parameter(const std::string& name) const override {
    if (name == "rate") return b_;
    if (name == "dim") return 3.0;
    return kNaN;
  }

 private:
  double b_;
};

// Marginal of C e^{-beta |x|} on R^2: beta^2 |s| K_1(beta |s|) / pi.
class Radial2Shape final : public KernelShape {
 public:
  explicit Radial2Shape(double rate) : b_(rate) {}

  std::string family() const override { return "radial_exponential"; }
  double density(double s) const override {
    const double x = b_ * std::abs(s);
    if (x == 0.0) return b_ / kPi;
    if (x > 700.0) return 0.0;
    return b_ * x * std::cyl_bessel_k(1.0, x) / kPi;
  }

  double moment(int n, double lambda, double upper) const override {
    if (lambda <= -b_) return diverged(n, true);
    if (std::isinf(upper)) {
      if (lambda >= b_) return kInf;
      const double d = b_ * b_ - lambda * lambda;
      const double b3 = b_ * b_ * b_;
      switch (n) {
        case 0: return b3 * std::pow(d, -1.5);
        case 1: return 3.0 * b3 * lambda * std::pow(d, -2.5);
        case 2: return 3.0 * b3 * std::pow(d, -2.5) + 15.0 * b3 * lambda * lambda * std::pow(d, -3.5);
        default: fail(ErrorCode::invalid_argument, "moment order must be 0, 1 or 2");
      }
    }
    auto f = [&](double s) { return std::pow(s, n) * density(s) * std::exp(lambda * s); };
    if (upper <= 0.0) return quad::integrate(f, -kInf, upper);
    return quad::integrate(f, -kInf, 0.0) + quad::integrate(f, 0.0, upper);
  }

  double cdf(double s) const override {
    if (s <= 0.0) return quad::integrate([&](double t) { return density(t); }, -kInf, s);
    return 1.0 - quad::integrate([&](double t) { return density(t); }, s, kInf);
  }

  double sigma_right() const override { return b_; }
  double sigma_left() const override { return b_; }
  bool finite_at_sigma(int) const override { return false; }

  std::complex<double> transform(std::complex<double> z, double upper) const override {
    if (std::isfinite(upper)) return numeric_transform(z, upper);
    return b_ * b_ * b_ * std::pow(b_ * b_ - z * z, -1.5);
  }

  double sup() const override { return b_ / kPi; }
  std::pair<double, double> support(double tail_mass) const override {
    double x = 1.0 / b_;
    while (cdf(-x) > 0.5 * tail_mass && x < 1e6) x *= 1.25;
    return {-x, x};
  }
  ShapePtr reflect() const override { return std::make_shared<Radial2Shape>(b_); }
  bool symmetric() const override { return true; }
  double parameter(const std::string& name) const override {
    if (name == "rate") return b_;
    if (name == "dim") return 2.0;
    return kNaN;
  }

 private:
  double b_;
};

}  // namespace

ShapePtr make_laplace(double rate) {
  require(std::isfinite(rate) && rate > 0.0, "laplace: rate must be positive");
  return std::make_shared<LaplaceShape>(rate);
}

ShapePtr make_gaussian(double variance) {
  require(std::isfinite(variance) && variance > 0.0, "gaussian: variance must be positive");
  return std::make_shared<GaussianShape>(variance);
}

ShapePtr make_uniform(double lo, double hi) {
  require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, "uniform: need finite lo < hi");
  return std::make_shared<UniformShape>(lo, hi);
}

ShapePtr make_exp_poly(double p, double q, double mu) {
  require(std::isfinite(p) && p >= 0.0, "exp_poly: p must be >= 0");
  require(std::isfinite(q) && q >= 0.0, "exp_poly: q must be >= 0");
  require(std::isfinite(mu) && mu >= 0.0, "exp_poly: mu must be >= 0");
  require((p > 0.0 && mu > 0.0) || q > 1.0, "exp_poly: density is not integrable (need p, mu > 0 or q > 1)");
  return std::make_shared<ExpPolyShape>(p, q, mu);
}

ShapePtr make_tabulated(double start, double step, std::vector<double> values, bool normalize) {
  require(std::isfinite(start), "tabulated: grid_start must be finite");
  require(std::isfinite(step) && step > 0.0, "tabulated: grid_step must be positive");
  require(values.size() >= 2, "tabulated: need at least two samples");
  for (double v : values) require(std::isfinite(v) && v >= 0.0, "tabulated: samples must be finite and >= 0");
  double mass = 0.0;
  for (std::size_t i = 1; i < values.size(); ++i) mass += 0.5 * step * (values[i - 1] + values[i]);
  require(mass > 0.0, "tabulated: samples have zero mass");
  if (normalize) {
    for (double& v : values) v /= mass;
  } else if (std::abs(mass - 1.0) > 1e-6) {
    fail(ErrorCode::invalid_argument,
         "tabulated: samples integrate to " + std::to_string(mass) + ", not 1 (set \"normalize\": true to rescale)");
  }
  return std::make_shared<TabulatedShape>(start, step, std::move(values));
}

ShapePtr make_radial_exponential(int dim, double rate) {
  require(std::isfinite(rate) && rate > 0.0, "radial_exponential: rate must be positive");
  switch (dim) {
    case 1: return std::make_shared<LaplaceShape>(rate);
    case 2: return std::make_shared<Radial2Shape>(rate);
    case 3: return std::make_shared<Radial3Shape>(rate);
    default: fail(ErrorCode::invalid_argument, "radial_exponential: dimension must be 1, 2 or 3");
  }
}

}  // namespace nlkpp::detail
