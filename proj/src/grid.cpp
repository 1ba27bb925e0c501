#include "kdvlab/grid.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "kdvlab/error.hpp"
#include "kdvlab/fft.hpp"

namespace kdvlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;

void check_grid(int modes, int grid_size) {
  if (modes < 1) throw InvalidArgument("mode cutoff K must be >= 1, got " + std::to_string(modes));
  if (grid_size % 2 != 0 || grid_size < 3 * modes) {
    throw InvalidArgument("grid size N = " + std::to_string(grid_size) + " is invalid for cutoff K = " +
                          std::to_string(modes) + " (need N even and N >= 3K = " +
                          std::to_string(3 * modes) + ")");
  }
}

}  // namespace

FourierField::FourierField(int modes, int grid_size)
    : cos_(modes > 0 ? modes : 0, 0.0), sin_(modes > 0 ? modes : 0, 0.0), n_(grid_size) {
  check_grid(modes, grid_size);
}

FourierField::FourierField(std::vector<double> cos_part, std::vector<double> sin_part, int grid_size)
    : cos_(std::move(cos_part)), sin_(std::move(sin_part)), n_(grid_size) {
  if (cos_.size() != sin_.size()) throw InvalidArgument("cosine and sine parts differ in length");
  check_grid(static_cast<int>(cos_.size()), grid_size);
  for (std::size_t i = 0; i < cos_.size(); ++i) {
    if (!std::isfinite(cos_[i]) || !std::isfinite(sin_[i])) {
      throw InvalidArgument("non-finite coefficient at k = " + std::to_string(i + 1));
    }
  }
}

FourierField FourierField::from_modes(int modes, int grid_size,
                                      std::initializer_list<std::pair<int, double>> entries) {
  FourierField f(modes, grid_size);
  for (auto [k, v] : entries) f = f.with_mode(k, v);
  return f;
}

FourierField FourierField::from_exponential(std::span<const Complex> c, int grid_size) {
  const int modes = static_cast<int>(c.size()) - 1;
  FourierField f(modes, grid_size);
  for (int k = 1; k <= modes; ++k) {
    f.cos_[k - 1] = kSqrt2 * c[k].real();
    f.sin_[k - 1] = -kSqrt2 * c[k].imag();
  }
  return f;
}

double FourierField::operator[](int signed_k) const {
  const int k = std::abs(signed_k);
  if (k < 1 || k > modes()) return 0.0;
  return signed_k > 0 ? cos_[k - 1] : sin_[k - 1];
}

std::vector<Complex> FourierField::exponential() const {
  std::vector<Complex> c(modes() + 1);
  for (int k = 1; k <= modes(); ++k) c[k] = Complex(cos_[k - 1], -sin_[k - 1]) / kSqrt2;
  return c;
}

FourierField FourierField::with_mode(int signed_k, double value) const {
  const int k = std::abs(signed_k);
  if (k < 1 || k > modes()) {
    throw InvalidArgument("mode index " + std::to_string(signed_k) + " outside 1..K = " +
                          std::to_string(modes()));
  }
  if (!std::isfinite(value)) throw InvalidArgument("non-finite coefficient");
  FourierField f = *this;
  (signed_k > 0 ? f.cos_ : f.sin_)[k - 1] = value;
  return f;
}

FourierField FourierField::resized(int modes, int grid_size) const {
  FourierField f(modes, grid_size);
  const int m = std::min(modes, this->modes());
  for (int k = 0; k < m; ++k) {
    f.cos_[k] = cos_[k];
    f.sin_[k] = sin_[k];
  }
  return f;
}

FourierField FourierField::translated(double s) const {
  FourierField f = *this;
  for (int k = 1; k <= modes(); ++k) {
    // c_k -> c_k e^{2 pi i k s}; in (a, b) with c = (a - i b)/sqrt2 this is a rotation.
    const double th = kTwoPi * k * s;
    const double c = std::cos(th), sn = std::sin(th);
    const double a = cos_[k - 1], b = sin_[k - 1];
    f.cos_[k - 1] = a * c + b * sn;
    f.sin_[k - 1] = b * c - a * sn;
  }
  return f;
}

double FourierField::l2_norm_squared() const noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < cos_.size(); ++i) s += cos_[i] * cos_[i] + sin_[i] * sin_[i];
  return s;
}

FourierField& FourierField::operator+=(const FourierField& o) {
  if (!same_truncation(o)) throw InvalidArgument("field truncations differ");
  for (std::size_t i = 0; i < cos_.size(); ++i) {
    cos_[i] += o.cos_[i];
    sin_[i] += o.sin_[i];
  }
  return *this;
}

FourierField& FourierField::operator-=(const FourierField& o) {
  if (!same_truncation(o)) throw InvalidArgument("field truncations differ");
  for (std::size_t i = 0; i < cos_.size(); ++i) {
    cos_[i] -= o.cos_[i];
    sin_[i] -= o.sin_[i];
  }
  return *this;
}

FourierField& FourierField::operator*=(double a) {
  for (std::size_t i = 0; i < cos_.size(); ++i) {
    cos_[i] *= a;
    sin_[i] *= a;
  }
  return *this;
}

double ModeVector::norm() const {
  double s = 0.0;
  for (std::size_t j = 0; j < cos_part.size(); ++j) {
    const double w = std::pow(kTwoPi * static_cast<double>(j + 1), 2.0 * p + 1.0);
    s += w * (cos_part[j] * cos_part[j] + sin_part[j] * sin_part[j]);
  }
  return std::sqrt(s);
}

ModeVector linear_birkhoff(const FourierField& u, double p) {
  ModeVector v;
  v.p = p;
  v.cos_part.resize(u.modes());
  v.sin_part.resize(u.modes());
  for (int k = 1; k <= u.modes(); ++k) {
    const double w = 1.0 / std::sqrt(kTwoPi * k);
    v.cos_part[k - 1] = w * u.cos_coeff(k);
    v.sin_part[k - 1] = w * u.sin_coeff(k);
  }
  return v;
}

int minimal_grid(int modes) {
  const int n = 3 * modes;
  return n % 2 == 0 ? n : n + 1;
}

std::vector<double> synthesize(const FourierField& u, int grid_size) {
  check_grid(u.modes(), grid_size);
  RealTransform t(grid_size);
  std::vector<double> out(grid_size);
  const auto c = u.exponential();
  t.to_grid(c, out);
  return out;
}

Analysis analyze(std::span<const double> values, int modes, double mean_tolerance) {
  const int n = static_cast<int>(values.size());
  check_grid(modes, n);
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(values[i])) {
      throw InvalidArgument("non-finite sample at index " + std::to_string(i));
    }
  }
  RealTransform t(n);
  std::vector<Complex> c(modes + 1);
  t.to_modes(values, c);
  Analysis a;
  a.field = FourierField::from_exponential(c, n);
  a.mean = c[0].real();
  a.mean_discarded = std::abs(a.mean) > mean_tolerance;
  return a;
}

double evaluate(const FourierField& u, double x) {
  double s = 0.0;
  for (int k = 1; k <= u.modes(); ++k) {
    const double th = kTwoPi * k * x;
    s += u.cos_coeff(k) * std::cos(th) + u.sin_coeff(k) * std::sin(th);
  }
  return kSqrt2 * s;
}

double sobolev_norm(const FourierField& u, double p) {
  if (!(p >= 0.0)) throw InvalidArgument("Sobolev index must be >= 0");
  double s = 0.0;
  for (int k = 1; k <= u.modes(); ++k) {
    const double a = u.cos_coeff(k), b = u.sin_coeff(k);
    s += std::pow(kTwoPi * k, 2.0 * p) * (a * a + b * b);
  }
  return std::sqrt(s);
}

FourierField derivative(const FourierField& u, int order) {
  if (order < 0) throw InvalidArgument("derivative order must be >= 0");
  std::vector<double> a(u.cos_part().begin(), u.cos_part().end());
  std::vector<double> b(u.sin_part().begin(), u.sin_part().end());
  for (int r = 0; r < order; ++r) {
    for (int k = 1; k <= u.modes(); ++k) {
      const double w = kTwoPi * k;
      const double ak = a[k - 1];
      a[k - 1] = w * b[k - 1];
      b[k - 1] = -w * ak;
    }
  }
  return FourierField(std::move(a), std::move(b), u.grid_size());
}

double inner(const FourierField& f, const FourierField& g) {
  if (f.modes() != g.modes()) throw InvalidArgument("field cutoffs differ");
  double s = 0.0;
  for (int k = 1; k <= f.modes(); ++k) {
    s += f.cos_coeff(k) * g.cos_coeff(k) + f.sin_coeff(k) * g.sin_coeff(k);
  }
  return s;
}

Product product_dealiased(const FourierField& f, const FourierField& g) {
  if (!f.same_truncation(g)) {
    throw InvalidArgument("product of fields with different truncations (K, N)");
  }
  const int n = f.grid_size();
  RealTransform t(n);
  std::vector<double> fv(n), gv(n);
  t.to_grid(f.exponential(), fv);
  t.to_grid(g.exponential(), gv);
  for (int i = 0; i < n; ++i) fv[i] *= gv[i];
  std::vector<Complex> c(f.modes() + 1);
  t.to_modes(fv, c);
  return {FourierField::from_exponential(c, n), c[0].real()};
}

double grid_mean(std::span<const double> values) {
  double s = 0.0;
  for (double v : values) s += v;
  return values.empty() ? 0.0 : s / static_cast<double>(values.size());
}

}  // namespace kdvlab
