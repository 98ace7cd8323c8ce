#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "nlkpp/kernel.hpp"

namespace nlkpp {

/// Discrete convolution weights w_k = int a(u) hat(u/h - k) du for k in [kmin, kmax].
/// Exact for piecewise-linear functions on the grid.
struct KernelWeights {
  long kmin = 0;
  std::vector<double> w;
  double h = 0.0;

  long kmax() const { return kmin + static_cast<long>(w.size()) - 1; }
  double at(long k) const { return k < kmin || k > kmax() ? 0.0 : w[static_cast<std::size_t>(k - kmin)]; }
  /// sum_k w_k e^{lambda k h}
  double transform(double lambda) const;
  /// Weights multiplied by e^{lambda k h}.
  KernelWeights tilted(double lambda) const;
};

/// Weights on the window [lo, hi]. Kernel mass outside the window is lumped onto the
/// end weights, so the weights sum to the kernel mass.
KernelWeights kernel_weights(const Kernel& kernel, double h, double lo, double hi);

/// Window outside of which both a(u) and a(u) e^{tilt u} carry less than `tail` mass.
std::pair<double, double> kernel_window(const Kernel& kernel, double tilt, double tail = 1e-15);

/// out[i] = sum_k w_k x(i - k) for i in [0, n), where x(j) = x_ext[j + pad_left].
/// Requires pad_left >= kmax and the padded input to reach index n - 1 - kmin.
/// FFT based; instances hold scratch buffers and must not be shared across threads.
class GridConvolver {
 public:
  GridConvolver(const KernelWeights& weights, std::size_t n, std::size_t pad_left, std::size_t pad_right);
  ~GridConvolver();
  GridConvolver(const GridConvolver&) = delete;
  GridConvolver& operator=(const GridConvolver&) = delete;

  std::size_t padded_size() const { return n_ + pad_left_ + pad_right_; }
  void apply(const double* x_ext, double* out) const;

 private:
  struct Plan;
  std::unique_ptr<Plan> plan_;
  std::size_t n_, pad_left_, pad_right_;
  long kmin_;
  std::size_t wlen_;
};

}  // namespace nlkpp
