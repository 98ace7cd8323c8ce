#include "nlkpp/grid.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>

#include "nlkpp/error.hpp"
#include "nlkpp/quadrature.hpp"

namespace nlkpp {
namespace {

// Planner calls are not thread safe in FFTW.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::size_t good_fft_size(std::size_t n) {
  for (std::size_t m = n;; ++m) {
    std::size_t r = m;
    for (std::size_t p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

// Tail of int a(u) e^{tilt u} beyond `edge` on the given side, via the truncated transform.
double tilted_tail_right(const Kernel& k, double tilt, double edge) {
  const double total = k.exp_moment(0, tilt);
  if (!std::isfinite(total)) return kInf;
  return std::max(0.0, total - k.truncated(std::min(edge, k.cutoff())).exp_moment(0, tilt));
}

}  // namespace

double KernelWeights::transform(double lambda) const {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * std::exp(lambda * h * static_cast<double>(kmin + static_cast<long>(i)));
  return s;
}

KernelWeights KernelWeights::tilted(double lambda) const {
  KernelWeights out = *this;
  for (std::size_t i = 0; i < w.size(); ++i)
    out.w[i] *= std::exp(lambda * h * static_cast<double>(kmin + static_cast<long>(i)));
  return out;
}

std::pair<double, double> kernel_window(const Kernel& k, double tilt, double tail) {
  auto [lo, hi] = k.support(tail);
  if (tilt == 0.0) return {lo, hi};
  const double width = std::max(hi - lo, 1.0);
  if (tilt > 0.0) {
    const double total = k.exp_moment(0, tilt);
    if (std::isfinite(total) && !k.is_truncated()) {
      for (int it = 0; it < 40 && tilted_tail_right(k, tilt, hi) > tail * total; ++it) hi += width * 0.5 * (it + 1);
    }
  } else {
    const Kernel r = k.is_truncated() ? k : k.reflected();
    if (!k.is_truncated()) {
      const double total = r.exp_moment(0, -tilt);
      if (std::isfinite(total)) {
        double rlo = -lo;
        for (int it = 0; it < 40 && tilted_tail_right(r, -tilt, rlo) > tail * total; ++it) rlo += width * 0.5 * (it + 1);
        lo = -rlo;
      }
    }
  }
  return {lo, hi};
}

KernelWeights kernel_weights(const Kernel& k, double h, double lo, double hi) {
  require(h > 0.0 && lo < hi, "kernel_weights: bad grid or window");
  KernelWeights out;
  out.h = h;
  const long c0 = static_cast<long>(std::floor(lo / h));
  const long c1 = static_cast<long>(std::ceil(hi / h));
  out.kmin = c0;
  out.w.assign(static_cast<std::size_t>(c1 - c0 + 1), 0.0);
  std::vector<double> bps = k.breakpoints();
  std::sort(bps.begin(), bps.end());
  using GL = boost::math::quadrature::gauss<double, 8>;
  const auto& xs = GL::abscissa();
  const auto& ws = GL::weights();
  // Cell [kh, (k+1)h] feeds w_k with ((k+1)h - u)/h and w_{k+1} with (u - kh)/h.
  auto bp = bps.begin();
  for (long c = c0; c < c1; ++c) {
    const double a = c * h, b = (c + 1) * h;
    double left = 0.0, right = 0.0;
    double x0 = a;
    while (bp != bps.end() && *bp <= a) ++bp;
    for (auto it = bp;; ++it) {
      const double x1 = (it != bps.end() && *it < b) ? *it : b;
      const double mid = 0.5 * (x0 + x1), rad = 0.5 * (x1 - x0);
      for (std::size_t q = 0; q < xs.size(); ++q) {
        for (double sg : {-1.0, 1.0}) {
          if (xs[q] == 0.0 && sg > 0.0) continue;
          const double u = mid + sg * rad * xs[q];
          const double d = k.density(u) * ws[q] * rad;
          left += d * (b - u) / h;
          right += d * (u - a) / h;
        }
      }
      if (x1 == b) break;
      x0 = x1;
    }
    out.w[static_cast<std::size_t>(c - c0)] += left;
    out.w[static_cast<std::size_t>(c + 1 - c0)] += right;
  }
  // Mass outside the window goes to the end weights; the inside is rescaled so the
  // total is the kernel mass exactly.
  // Direct tail integrals; differences of the cdf would leave roundoff-sized masses.
  auto dens = [&k](double u) { return k.density(u); };
  const double out_lo = quad::integrate(dens, -kInf, c0 * h);
  const double out_hi = c1 * h < k.cutoff() ? quad::integrate(dens, c1 * h, k.cutoff()) : 0.0;
  double sum = 0.0;
  for (double v : out.w) sum += v;
  require(sum > 0.0, "kernel_weights: kernel has no mass on the window");
  const double scale = std::max(0.0, k.mass() - out_lo - out_hi) / sum;
  for (double& v : out.w) v *= scale;
  out.w.front() += out_lo;
  out.w.back() += out_hi;
  // Trim exact zeros at both ends.
  std::size_t first = 0, last = out.w.size();
  while (first < last && out.w[first] == 0.0) ++first;
  while (last > first && out.w[last - 1] == 0.0) --last;
  out.w = std::vector<double>(out.w.begin() + static_cast<long>(first), out.w.begin() + static_cast<long>(last));
  out.kmin += static_cast<long>(first);
  return out;
}

struct GridConvolver::Plan {
  std::size_t m = 0;
  double* in = nullptr;
  fftw_complex* spec = nullptr;
  fftw_complex* wspec = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

GridConvolver::GridConvolver(const KernelWeights& weights, std::size_t n, std::size_t pad_left, std::size_t pad_right)
    : plan_(std::make_unique<Plan>()), n_(n), pad_left_(pad_left), pad_right_(pad_right), kmin_(weights.kmin),
      wlen_(weights.w.size()) {
  require(n > 0 && !weights.w.empty(), "GridConvolver: empty grid or weights");
  require(static_cast<long>(pad_left) >= weights.kmax() && static_cast<long>(pad_right) >= -weights.kmin,
          "GridConvolver: padding narrower than the kernel stencil");
  auto& p = *plan_;
  p.m = good_fft_size(padded_size() + wlen_ - 1);
  const std::size_t nc = p.m / 2 + 1;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    p.in = fftw_alloc_real(p.m);
    p.spec = fftw_alloc_complex(nc);
    p.wspec = fftw_alloc_complex(nc);
    p.fwd = fftw_plan_dft_r2c_1d(static_cast<int>(p.m), p.in, p.spec, FFTW_ESTIMATE);
    p.bwd = fftw_plan_dft_c2r_1d(static_cast<int>(p.m), p.spec, p.in, FFTW_ESTIMATE);
  }
  std::fill(p.in, p.in + p.m, 0.0);
  std::copy(weights.w.begin(), weights.w.end(), p.in);
  fftw_execute(p.fwd);
  std::memcpy(p.wspec, p.spec, nc * sizeof(fftw_complex));
}

GridConvolver::~GridConvolver() {
  if (!plan_) return;
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(plan_->fwd);
  fftw_destroy_plan(plan_->bwd);
  fftw_free(plan_->in);
  fftw_free(plan_->spec);
  fftw_free(plan_->wspec);
}

void GridConvolver::apply(const double* x_ext, double* out) const {
  auto& p = *plan_;
  const std::size_t len = padded_size();
  std::copy(x_ext, x_ext + len, p.in);
  std::fill(p.in + len, p.in + p.m, 0.0);
  fftw_execute(p.fwd);
  const std::size_t nc = p.m / 2 + 1;
  for (std::size_t i = 0; i < nc; ++i) {
    const double re = p.spec[i][0] * p.wspec[i][0] - p.spec[i][1] * p.wspec[i][1];
    const double im = p.spec[i][0] * p.wspec[i][1] + p.spec[i][1] * p.wspec[i][0];
    p.spec[i][0] = re;
    p.spec[i][1] = im;
  }
  fftw_execute(p.bwd);
  // Full linear convolution index of grid point i is i + pad_left - kmin.
  const double inv = 1.0 / static_cast<double>(p.m);
  const long base = static_cast<long>(pad_left_) - kmin_;
  for (std::size_t i = 0; i < n_; ++i) out[i] = p.in[static_cast<long>(i) + base] * inv;
}

}  // namespace nlkpp
