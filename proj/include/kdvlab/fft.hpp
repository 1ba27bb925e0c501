#pragma once

#include <complex>
#include <span>
#include <vector>

namespace kdvlab {

using Complex = std::complex<double>;

/// Real <-> half-complex transform on a uniform grid of n points.
///
/// Coefficients follow the exponential convention
///   u(x_j) = c_0 + sum_{k=1}^{K} (c_k e^{2 pi i k x_j} + conj(c_k) e^{-2 pi i k x_j}),
/// with x_j = j/n. Plans are shared process-wide; each instance owns its own
/// scratch buffers, so distinct instances may be used from different threads.
class RealTransform {
 public:
  explicit RealTransform(int n);

  int size() const noexcept { return n_; }

  /// c.size() = K+1 with K < n/2; writes n point values into u.
  void to_grid(std::span<const Complex> c, std::span<double> u);

  /// Reads n point values; fills c[0..c.size()-1] (c.size() <= n/2).
  void to_modes(std::span<const double> u, std::span<Complex> c);

 private:
  int n_;
  void* forward_;
  void* backward_;
  std::vector<Complex> spectrum_;
  std::vector<double> values_;
};

}  // namespace kdvlab
