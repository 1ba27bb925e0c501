#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "kdvlab/error.hpp"
#include "kdvlab/hill.hpp"

namespace kdvlab {

namespace {

constexpr double kPi = std::numbers::pi;

int effective_modes(const FourierField& u) {
  double total = 0.0;
  for (int k = 1; k <= u.modes(); ++k) total += std::abs(u.cos_coeff(k)) + std::abs(u.sin_coeff(k));
  int last = 0;
  for (int k = 1; k <= u.modes(); ++k) {
    if (std::abs(u.cos_coeff(k)) + std::abs(u.sin_coeff(k)) > 1e-17 * total) last = k;
  }
  return last;
}

// int_0^1 cos(p pi x) cos(q pi x) dx for integers p, q.
double cos_cos(int p, int q) { return 0.5 * ((p == q ? 1.0 : 0.0) + (p == -q ? 1.0 : 0.0)); }

// int_0^1 sin(j pi x) dx.
double sin_mean(int j) {
  if (j == 0) return 0.0;
  return (j % 2 == 0) ? 0.0 : 2.0 / (j * kPi);
}

// int_0^1 cos(p pi x) sin(q pi x) dx.
double cos_sin(int p, int q) { return 0.5 * (sin_mean(q + p) + sin_mean(q - p)); }

}  // namespace

std::vector<double> matrix_oracle_spectrum(const FourierField& u, int n_max, int truncation, double shift) {
  if (n_max < 0) throw InvalidArgument("n_max must be >= 0");
  const int ke = effective_modes(u);
  const int m_cut = truncation > 0 ? truncation : 2 * n_max + 2 * ke + 40;
  const int dim = 2 * m_cut + 1;
  const auto c = u.exponential();
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  // Basis e^{i pi m x}, m = -m_cut..m_cut; u couples m to m + 2k with weight c_k.
  for (int i = 0; i < dim; ++i) {
    const int m = i - m_cut;
    h(i, i) = (kPi * m) * (kPi * m) + shift;
    for (int k = 1; k <= ke; ++k) {
      const int j = i + 2 * k;
      if (j >= dim) break;
      h(j, i) = c[k];
      h(i, j) = std::conj(c[k]);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SpectrumError("matrix oracle eigensolve failed");
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + dim);
  std::sort(ev.begin(), ev.end());
  ev.resize(std::min<std::size_t>(ev.size(), 2 * n_max + 1));
  return ev;
}

std::vector<double> dirichlet_matrix_oracle(const FourierField& u, int n_max, double z, int truncation) {
  const FourierField v = z == 0.0 ? u : u.translated(z - std::floor(z));
  const int ke = effective_modes(v);
  const int m = truncation > 0 ? truncation : 4 * n_max + 8 * ke + 200;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  const double r2 = std::numbers::sqrt2;
  // Orthonormal sine basis sqrt2 sin(n pi x) on [0, 1]:
  // 2 sin(n pi x) sin(l pi x) = cos((n-l) pi x) - cos((n+l) pi x).
  for (int n = 1; n <= m; ++n) {
    for (int l = n; l <= m; ++l) {
      double s = 0.0;
      for (int k = 1; k <= ke; ++k) {
        s += v.cos_coeff(k) * (cos_cos(n - l, 2 * k) - cos_cos(n + l, 2 * k));
        s += v.sin_coeff(k) * (cos_sin(n - l, 2 * k) - cos_sin(n + l, 2 * k));
      }
      s *= r2;
      if (n == l) s += (n * kPi) * (n * kPi);
      a(n - 1, l - 1) = s;
      a(l - 1, n - 1) = s;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SpectrumError("Dirichlet oracle eigensolve failed");
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + m);
  std::sort(ev.begin(), ev.end());
  ev.resize(std::min<std::size_t>(ev.size(), n_max));
  return ev;
}

}  // namespace kdvlab
