#include "nlkpp/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kernel_shape.hpp"
#include "nlkpp/error.hpp"
#include "nlkpp/quadrature.hpp"

namespace nlkpp {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

void ModelParams::validate() const {
  require(std::isfinite(kappa_plus) && kappa_plus > 0.0, "kappa_plus must be positive");
  require(std::isfinite(m) && m > 0.0, "m must be positive");
  require(std::isfinite(kappa_local) && kappa_local >= 0.0, "kappa_local must be >= 0");
  require(std::isfinite(kappa_nonlocal) && kappa_nonlocal >= 0.0, "kappa_nonlocal must be >= 0");
  require(kappa() > 0.0, "kappa_local + kappa_nonlocal must be positive");
}

double theta(const ModelParams& params) {
  params.validate();
  if (!(params.kappa_plus > params.m))
    fail(ErrorCode::assumption_failed, "Q1 fails: kappa_plus = " + fmt(params.kappa_plus) + " <= m = " + fmt(params.m));
  return (params.kappa_plus - params.m) / params.kappa();
}

const char* to_string(AbscissaKind kind) {
  switch (kind) {
    case AbscissaKind::closed_form: return "closed-form";
    case AbscissaKind::bracketed_numeric: return "bracketed-numeric";
    case AbscissaKind::table_truncated: return "table-truncated";
  }
  return "unknown";
}

const char* to_string(AssumptionStatus status) {
  switch (status) {
    case AssumptionStatus::holds: return "holds";
    case AssumptionStatus::fails: return "fails";
    case AssumptionStatus::undecidable: return "undecidable-numerically";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Kernel

Kernel::Kernel(std::shared_ptr<const detail::KernelShape> shape, double shift, double cutoff)
    : shape_(std::move(shape)), shift_(shift), cutoff_(cutoff) {}

Kernel Kernel::laplace(double rate) { return Kernel(detail::make_laplace(rate), 0.0, kInf); }
Kernel Kernel::gaussian(double variance) { return Kernel(detail::make_gaussian(variance), 0.0, kInf); }
Kernel Kernel::uniform(double lo, double hi) { return Kernel(detail::make_uniform(lo, hi), 0.0, kInf); }
Kernel Kernel::exp_poly(double p, double q, double mu) { return Kernel(detail::make_exp_poly(p, q, mu), 0.0, kInf); }
Kernel Kernel::tabulated(double start, double step, std::vector<double> values, bool normalize) {
  return Kernel(detail::make_tabulated(start, step, std::move(values), normalize), 0.0, kInf);
}
Kernel Kernel::radial_exponential(int dim, double rate) {
  return Kernel(detail::make_radial_exponential(dim, rate), 0.0, kInf);
}

Kernel Kernel::shifted(double delta) const {
  require(std::isfinite(delta), "shift must be finite");
  return Kernel(shape_, shift_ + delta, cutoff_ + delta);
}

Kernel Kernel::truncated(double upper) const {
  require(!std::isnan(upper), "truncation radius must not be NaN");
  return Kernel(shape_, shift_, std::min(cutoff_, upper));
}

Kernel Kernel::reflected() const {
  require(!is_truncated(), "reflection of a truncated kernel is not supported");
  return Kernel(shape_->reflect(), -shift_, kInf);
}

double Kernel::density(double s) const { return s < cutoff_ ? shape_->density(s - shift_) : 0.0; }

double Kernel::mass() const { return is_truncated() ? shape_->cdf(cutoff_ - shift_) : 1.0; }

double Kernel::mass_below(double s) const { return shape_->cdf(std::min(s, cutoff_) - shift_); }

double Kernel::abscissa() const { return is_truncated() ? kInf : shape_->sigma_right(); }

AbscissaKind Kernel::abscissa_kind() const { return shape_->abscissa_kind(); }

double Kernel::left_abscissa() const { return shape_->sigma_left(); }

double Kernel::exp_moment(int order, double lambda) const {
  require(order >= 0 && order <= 2, "moment order must be 0, 1 or 2");
  require(std::isfinite(lambda), "lambda must be finite");
  const double upper = cutoff_ - shift_;
  const double top = shape_->moment(order, lambda, upper);
  if (std::isinf(top)) return top;
  const double scale = std::exp(lambda * shift_);
  if (shift_ == 0.0) return scale * top;
  // int (u + delta)^n a(u) e^{lambda u} du, expanded binomially.
  double sum = top;
  const double d = shift_;
  if (order == 1) {
    sum += d * shape_->moment(0, lambda, upper);
  } else if (order == 2) {
    sum += 2.0 * d * shape_->moment(1, lambda, upper) + d * d * shape_->moment(0, lambda, upper);
  }
  return scale * sum;
}

bool Kernel::moment_finite_at_abscissa(int order) const {
  if (std::isinf(abscissa())) return true;
  return shape_->finite_at_sigma(order);
}

std::complex<double> Kernel::laplace_complex(std::complex<double> z) const {
  const double sigma = abscissa();
  if (z.real() > sigma || (z.real() == sigma && !moment_finite_at_abscissa(0))) return {kInf, 0.0};
  if (z.imag() == 0.0) return {exp_moment(0, z.real()), 0.0};
  return std::exp(z * shift_) * shape_->transform(z, cutoff_ - shift_);
}

double Kernel::sup_density() const { return shape_->sup(); }

double Kernel::first_abs_moment() const {
  const double full = shape_->moment(1, 0.0, kInf);
  if (std::isinf(full)) return kInf;
  // P(U) = int_{-inf}^{U} (u + delta) a(u) du
  auto partial = [&](double u) { return shape_->moment(1, 0.0, u) + shift_ * shape_->moment(0, 0.0, u); };
  const double upper = cutoff_ - shift_;
  const double split = -shift_;
  if (upper <= split) return -partial(upper);
  const double below = partial(split);
  return (partial(upper) - below) - below;
}

std::pair<double, double> Kernel::support(double tail_mass) const {
  auto [lo, hi] = shape_->support(tail_mass);
  lo += shift_;
  hi = std::min(hi + shift_, cutoff_);
  if (!(lo < hi)) lo = hi - 1.0;
  return {lo, hi};
}

std::vector<double> Kernel::breakpoints() const {
  std::vector<double> out;
  for (double b : shape_->breakpoints())
    if (b + shift_ < cutoff_) out.push_back(b + shift_);
  if (is_truncated()) out.push_back(cutoff_);
  return out;
}

std::string Kernel::family() const { return shape_->family(); }

bool Kernel::is_symmetric() const { return shape_->symmetric() && shift_ == 0.0 && !is_truncated(); }

double Kernel::parameter(const std::string& name) const { return shape_->parameter(name); }

const std::vector<double>* Kernel::table_values() const { return shape_->table(); }

// ---------------------------------------------------------------------------
// projection

namespace {

Kernel project_grid2d(const KernelND& k, const std::vector<double>& xi) {
  require(k.grid_nx >= 2 && k.grid_ny >= 2 && k.grid_values.size() == k.grid_nx * k.grid_ny,
          "grid2d: values must have nx*ny entries with nx, ny >= 2");
  require(k.grid_step > 0.0, "grid2d: grid_step must be positive");
  const double h = k.grid_step;
  auto value = [&](double x, double y) {
    const double fx = (x - k.grid_start_x) / h;
    const double fy = (y - k.grid_start_y) / h;
    if (fx < 0.0 || fy < 0.0 || fx > static_cast<double>(k.grid_nx - 1) || fy > static_cast<double>(k.grid_ny - 1))
      return 0.0;
    const auto i = std::min(static_cast<std::size_t>(fx), k.grid_nx - 2);
    const auto j = std::min(static_cast<std::size_t>(fy), k.grid_ny - 2);
    const double tx = fx - static_cast<double>(i);
    const double ty = fy - static_cast<double>(j);
    auto at = [&](std::size_t a, std::size_t b) { return k.grid_values[a * k.grid_ny + b]; };
    return (1 - tx) * (1 - ty) * at(i, j) + tx * (1 - ty) * at(i + 1, j) + (1 - tx) * ty * at(i, j + 1) +
           tx * ty * at(i + 1, j + 1);
  };
  const double x0 = k.grid_start_x, x1 = x0 + h * static_cast<double>(k.grid_nx - 1);
  const double y0 = k.grid_start_y, y1 = y0 + h * static_cast<double>(k.grid_ny - 1);
  const double e1 = -xi[1], e2 = xi[0];
  double smin = kInf, smax = -kInf, tmin = kInf, tmax = -kInf;
  for (double x : {x0, x1})
    for (double y : {y0, y1}) {
      smin = std::min(smin, x * xi[0] + y * xi[1]);
      smax = std::max(smax, x * xi[0] + y * xi[1]);
      tmin = std::min(tmin, x * e1 + y * e2);
      tmax = std::max(tmax, x * e1 + y * e2);
    }
  const double dt = h / 4.0;
  const auto nt = static_cast<std::size_t>(std::ceil((tmax - tmin) / dt));
  const auto ns = static_cast<std::size_t>(std::ceil((smax - smin) / h)) + 1;
  std::vector<double> out(ns, 0.0);
  for (std::size_t a = 0; a < ns; ++a) {
    const double s = smin + h * static_cast<double>(a);
    double acc = 0.0;
    for (std::size_t b = 0; b <= nt; ++b) {
      const double t = tmin + (tmax - tmin) * static_cast<double>(b) / static_cast<double>(nt);
      const double w = (b == 0 || b == nt) ? 0.5 : 1.0;
      acc += w * value(s * xi[0] + t * e1, s * xi[1] + t * e2);
    }
    out[a] = acc * (tmax - tmin) / static_cast<double>(nt);
  }
  return Kernel::tabulated(smin, h, std::move(out), true);
}

}  // namespace

Kernel project_to_direction(const KernelND& kernel, const std::vector<double>& xi) {
  require(kernel.dim >= 1, "dimension must be >= 1");
  require(xi.size() == static_cast<std::size_t>(kernel.dim), "direction has wrong dimension");
  double norm2 = 0.0;
  for (double v : xi) norm2 += v * v;
  require(std::abs(std::sqrt(norm2) - 1.0) <= 1e-9, "direction must be a unit vector");

  switch (kernel.form) {
    case KernelND::Form::gaussian: {
      require(kernel.variances.size() == xi.size(), "gaussian: one variance per axis required");
      require(kernel.means.empty() || kernel.means.size() == xi.size(), "gaussian: one mean per axis required");
      double var = 0.0, mean = 0.0;
      for (std::size_t i = 0; i < xi.size(); ++i) {
        require(kernel.variances[i] > 0.0, "gaussian: variances must be positive");
        var += xi[i] * xi[i] * kernel.variances[i];
        if (!kernel.means.empty()) mean += xi[i] * kernel.means[i];
      }
      Kernel g = Kernel::gaussian(var);
      return mean == 0.0 ? g : g.shifted(mean);
    }
    case KernelND::Form::radial_exponential:
      return Kernel::radial_exponential(kernel.dim, kernel.rate);
    case KernelND::Form::product: {
      require(kernel.factors.size() == xi.size(), "product: one factor per axis required");
      for (std::size_t i = 0; i < xi.size(); ++i) {
        if (std::abs(std::abs(xi[i]) - 1.0) <= 1e-12) return xi[i] > 0.0 ? kernel.factors[i] : kernel.factors[i].reflected();
      }
      fail(ErrorCode::invalid_argument, "product kernels are supported along coordinate axes only");
    }
    case KernelND::Form::grid2d:
      require(kernel.dim == 2, "grid2d: dimension must be 2");
      return project_grid2d(kernel, xi);
  }
  fail(ErrorCode::invalid_argument, "unsupported kernel form");
}

double directional_moment(const Kernel& kernel) {
  const double abs_moment = kernel.first_abs_moment();
  if (!std::isfinite(abs_moment))
    fail(ErrorCode::assumption_failed, "Q6 fails: first absolute moment diverges");
  return kernel.exp_moment(1, 0.0);
}

// ---------------------------------------------------------------------------
// J_theta

JTheta::JTheta(const KernelPair& pair, const ModelParams& params)
    : pair_(pair), params_(params), theta_(nlkpp::theta(params)) {}

double JTheta::operator()(double s) const {
  const double plus = params_.kappa_plus * pair_.a_plus.density(s);
  if (params_.kappa_nonlocal == 0.0) return plus;
  return plus - theta_ * params_.kappa_nonlocal * pair_.a_minus.density(s);
}

JTheta::Scan JTheta::scan(double step) const {
  require(step > 0.0, "scan step must be positive");
  auto [lo1, hi1] = pair_.a_plus.support(1e-12);
  auto [lo2, hi2] = pair_.a_minus.support(1e-12);
  const double lo = std::max(std::min(lo1, lo2), -1e4);
  const double hi = std::min(std::max(hi1, hi2), 1e4);
  while ((hi - lo) / step > 2e6) step *= 2.0;
  const auto k0 = static_cast<long>(std::floor(lo / step));
  const auto k1 = static_cast<long>(std::ceil(hi / step));

  Scan out;
  out.min_value = kInf;
  for (long k = k0; k <= k1; ++k) {
    const double s = static_cast<double>(k) * step;
    const double v = (*this)(s);
    if (v < out.min_value) {
      out.min_value = v;
      out.argmin = s;
    }
  }
  const double scale = params_.kappa_plus * pair_.a_plus.sup_density();
  out.nonnegative = out.min_value >= -1e-12 * scale;

  // Largest symmetric window [-delta, delta] on which J stays >= 1e-6.
  constexpr double rho_floor = 1e-6;
  if ((*this)(0.0) >= rho_floor) {
    double rho = (*this)(0.0);
    long k = 1;
    const long kmax = std::max(-k0, k1);
    for (; k <= kmax; ++k) {
      const double a = (*this)(static_cast<double>(k) * step);
      const double b = (*this)(-static_cast<double>(k) * step);
      if (a < rho_floor || b < rho_floor) break;
      rho = std::min({rho, a, b});
    }
    out.delta = static_cast<double>(k - 1) * step;
    out.rho = rho;
    out.positive_near_origin = out.delta >= step;
  }
  return out;
}

// ---------------------------------------------------------------------------
// assumptions

const AssumptionEntry& AssumptionReport::get(const std::string& id) const {
  for (const auto& e : entries)
    if (e.id == id) return e;
  fail(ErrorCode::invalid_argument, "unknown assumption id " + id);
}

bool AssumptionReport::holds(const std::string& id) const { return get(id).status == AssumptionStatus::holds; }

bool AssumptionReport::dispersion_ready() const { return first_blocking().empty(); }

std::string AssumptionReport::first_blocking() const {
  for (const char* id : {"Q1", "Q2", "Q3", "Q4", "Q5", "Q6"})
    if (get(id).status == AssumptionStatus::fails) return id;
  return {};
}

AssumptionReport check_assumptions(const KernelPair& pair, const ModelParams& params) {
  params.validate();
  AssumptionReport r;
  constexpr double scan_step = 1e-3;

  AssumptionEntry q1{"Q1", "kappa_plus > m", AssumptionStatus::holds, params.kappa_plus - params.m, ""};
  if (!(params.kappa_plus > params.m)) {
    q1.status = AssumptionStatus::fails;
    q1.detail = "kappa_plus = " + fmt(params.kappa_plus) + " <= m = " + fmt(params.m);
  }
  r.entries.push_back(q1);

  AssumptionEntry q2{"Q2", "J_theta >= 0 on the scan grid", AssumptionStatus::holds, 0.0, ""};
  AssumptionEntry q7{"Q7", "J_theta >= rho near the origin", AssumptionStatus::holds, 0.0, ""};
  if (q1.status == AssumptionStatus::fails) {
    q2.status = q7.status = AssumptionStatus::undecidable;
    q2.detail = q7.detail = "theta undefined because Q1 fails";
  } else {
    const JTheta j(pair, params);
    const auto sc = j.scan(scan_step);
    q2.diagnostic = sc.min_value;
    const double scale = params.kappa_plus * pair.a_plus.sup_density();
    if (sc.nonnegative) {
      q2.detail = "min J_theta = " + fmt(sc.min_value) + " at s = " + fmt(sc.argmin);
    } else if (sc.min_value < -1e-10 * scale) {
      q2.status = AssumptionStatus::fails;
      q2.detail = "J_theta(" + fmt(sc.argmin) + ") = " + fmt(sc.min_value) + " < 0";
    } else {
      q2.status = AssumptionStatus::undecidable;
      q2.detail = "min J_theta = " + fmt(sc.min_value) + " is within quadrature tolerance of 0";
    }
    q7.diagnostic = sc.rho;
    if (sc.positive_near_origin) {
      q7.detail = "rho = " + fmt(sc.rho) + ", delta = " + fmt(sc.delta);
    } else {
      q7.status = AssumptionStatus::fails;
      q7.detail = "J_theta drops below 1e-6 within one scan step of the origin";
    }
  }
  r.entries.push_back(q2);

  const double sigma = pair.a_plus.abscissa();
  AssumptionEntry q3{"Q3", "positive abscissa of a_plus", AssumptionStatus::holds, sigma,
                     std::string("sigma = ") + (std::isinf(sigma) ? "inf" : fmt(sigma)) + " (" +
                         to_string(pair.a_plus.abscissa_kind()) + ")"};
  if (!(sigma > 0.0)) q3.status = AssumptionStatus::fails;
  r.entries.push_back(q3);

  AssumptionEntry q4{"Q4", "a_plus >= rho on an interval", AssumptionStatus::fails, 0.0,
                     "no interval with a_plus >= 1e-6 of half-width >= scan step"};
  {
    constexpr double rho = 1e-6;
    auto [lo, hi] = pair.a_plus.support(1e-12);
    double step = scan_step;
    while ((hi - lo) / step > 2e6) step *= 2.0;
    // Prefer a window centred at the origin, else the first long-enough run.
    double best_r = kNaN, best_delta = 0.0;
    if (pair.a_plus.density(0.0) >= rho) {
      long k = 1;
      while (k * step < std::max(-lo, hi) && pair.a_plus.density(k * step) >= rho && pair.a_plus.density(-k * step) >= rho)
        ++k;
      if (k - 1 >= 1) {
        best_r = 0.0;
        best_delta = (k - 1) * step;
      }
    }
    if (std::isnan(best_r)) {
      double run_start = kNaN;
      for (double s = lo; s <= hi + step; s += step) {
        const bool ok = s <= hi && pair.a_plus.density(s) >= rho;
        if (ok && std::isnan(run_start)) run_start = s;
        if (!ok && !std::isnan(run_start)) {
          const double half = 0.5 * (s - step - run_start);
          if (half >= step && half > best_delta) {
            best_delta = half;
            best_r = run_start + half;
          }
          run_start = kNaN;
        }
      }
    }
    if (!std::isnan(best_r)) {
      q4.status = AssumptionStatus::holds;
      q4.diagnostic = best_delta;
      q4.detail = "r = " + fmt(best_r) + ", rho = 1e-06, delta = " + fmt(best_delta);
    }
  }
  r.entries.push_back(q4);

  const double sup = std::max(pair.a_plus.sup_density(), pair.a_minus.sup_density());
  AssumptionEntry q5{"Q5", "bounded kernels", std::isfinite(sup) ? AssumptionStatus::holds : AssumptionStatus::fails,
                     sup, "sup density = " + fmt(sup)};
  r.entries.push_back(q5);

  const double m1 = pair.a_plus.first_abs_moment();
  AssumptionEntry q6{"Q6", "finite first absolute moment of a_plus",
                     std::isfinite(m1) ? AssumptionStatus::holds : AssumptionStatus::fails, m1,
                     std::isfinite(m1) ? "int |s| a_plus = " + fmt(m1) : "int |s| a_plus diverges"};
  r.entries.push_back(q6);
  r.entries.push_back(q7);
  return r;
}

void require_dispersion_assumptions(const KernelPair& pair, const ModelParams& params) {
  params.validate();
  if (!(params.kappa_plus > params.m))
    fail(ErrorCode::assumption_failed, "Q1 fails: kappa_plus = " + fmt(params.kappa_plus) + " <= m = " + fmt(params.m));
  const auto report = check_assumptions(pair, params);
  const auto id = report.first_blocking();
  if (!id.empty()) fail(ErrorCode::assumption_failed, id + " fails: " + report.get(id).detail);
}

}  // namespace nlkpp
