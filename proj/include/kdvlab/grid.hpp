#pragma once

#include <complex>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace kdvlab {

using Complex = std::complex<double>;

/// Real zero-mean 1-periodic function in the basis
///   e_k = sqrt(2) cos(2 pi k x),  e_{-k} = sqrt(2) sin(2 pi k x),  k = 1..K.
///
/// `grid_size` is the collocation size used by every pointwise operation.
/// It must be even and at least 3K so cubic products are alias-free.
class FourierField {
 public:
  FourierField() = default;
  FourierField(int modes, int grid_size);
  FourierField(std::vector<double> cos_part, std::vector<double> sin_part, int grid_size);

  /// Builds a field from signed-index entries: {k, value} sets u_k (k > 0) or u_{-|k|} (k < 0).
  static FourierField from_modes(int modes, int grid_size,
                                 std::initializer_list<std::pair<int, double>> entries);
  /// Exponential coefficients c_0..c_K (c_0 ignored), c_k = (u_k - i u_{-k}) / sqrt(2).
  static FourierField from_exponential(std::span<const Complex> c, int grid_size);

  int modes() const noexcept { return static_cast<int>(cos_.size()); }
  int grid_size() const noexcept { return n_; }
  bool empty() const noexcept { return cos_.empty(); }

  /// u_k for k > 0, u_{-|k|} for k < 0; zero outside 1..K.
  double operator[](int signed_k) const;
  double cos_coeff(int k) const { return cos_[k - 1]; }
  double sin_coeff(int k) const { return sin_[k - 1]; }
  std::span<const double> cos_part() const noexcept { return cos_; }
  std::span<const double> sin_part() const noexcept { return sin_; }

  std::vector<Complex> exponential() const;

  FourierField with_mode(int signed_k, double value) const;
  /// Same function, different cutoff or grid (modes above the new cutoff dropped).
  FourierField resized(int modes, int grid_size) const;

  /// u(x + s).
  FourierField translated(double s) const;

  double l2_norm_squared() const noexcept;

  FourierField& operator+=(const FourierField& o);
  FourierField& operator-=(const FourierField& o);
  FourierField& operator*=(double a);
  friend FourierField operator+(FourierField a, const FourierField& b) { return a += b; }
  friend FourierField operator-(FourierField a, const FourierField& b) { return a -= b; }
  friend FourierField operator*(FourierField a, double s) { return a *= s; }
  friend FourierField operator*(double s, FourierField a) { return a *= s; }
  friend FourierField operator-(FourierField a) { return a *= -1.0; }
  friend bool operator==(const FourierField&, const FourierField&) = default;

  bool same_truncation(const FourierField& o) const noexcept {
    return modes() == o.modes() && n_ == o.n_;
  }

 private:
  std::vector<double> cos_;
  std::vector<double> sin_;
  int n_ = 0;
};

/// Pairs (v_j, v_{-j}) carrying the weighted norm |v|_p^2 = sum (2 pi j)^{2p+1} |v_j|^2.
struct ModeVector {
  std::vector<double> cos_part;
  std::vector<double> sin_part;
  double p = 0.0;

  double norm() const;
};

/// Linearization of the nonlinear Fourier transform at zero: v_j = (2 pi j)^{-1/2} u_j.
ModeVector linear_birkhoff(const FourierField& u, double p);

/// Smallest admissible grid for a cutoff: even and >= 3K.
int minimal_grid(int modes);

/// Point values u(i/N), i = 0..N-1. Throws if N < 3K or N is odd.
std::vector<double> synthesize(const FourierField& u, int grid_size);
inline std::vector<double> synthesize(const FourierField& u) { return synthesize(u, u.grid_size()); }

struct Analysis {
  FourierField field;
  double mean = 0.0;
  bool mean_discarded = false;  ///< |mean| exceeded the tolerance
};

/// Projects samples on the retained modes; the constant part is removed and reported.
Analysis analyze(std::span<const double> values, int modes, double mean_tolerance = 1e-12);

/// Direct pointwise evaluation of the trigonometric sum at x.
double evaluate(const FourierField& u, double x);

/// (sum (2 pi k)^{2p} (u_k^2 + u_{-k}^2))^{1/2}; p >= 0.
double sobolev_norm(const FourierField& u, double p);

FourierField derivative(const FourierField& u, int order = 1);

/// L2 inner product from coefficients.
double inner(const FourierField& f, const FourierField& g);

struct Product {
  FourierField field;
  double mean = 0.0;  ///< the projected-out constant part of f*g
};

/// Pointwise product on the N grid, truncated back to K modes.
Product product_dealiased(const FourierField& f, const FourierField& g);

/// Grid quadrature of a sampled periodic function over [0, 1).
double grid_mean(std::span<const double> values);

}  // namespace kdvlab
