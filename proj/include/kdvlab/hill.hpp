#pragma once

#include <functional>
#include <span>
#include <vector>

#include "kdvlab/grid.hpp"

namespace kdvlab {

struct HillOptions {
  double rtol = 1e-11;
  double atol = 1e-11;
  /// g_n below closed_gap_tol * (1 + n^2 pi^2) is snapped to an exactly closed gap.
  double closed_gap_tol = 1e-9;
  /// Interlacing post-check slack, relative to (1 + |lambda|).
  double interlace_tol = 1e-9;
  /// > 0: fixed-step integration with this many steps per unit length instead of
  /// adaptive control (makes Delta an analytic function of lambda at fixed step count).
  int fixed_steps = 0;
};

/// Potential u(x) + shift, where the constant shift acts at the operator level.
class Potential {
 public:
  explicit Potential(const FourierField& u, double shift = 0.0);

  double operator()(double x) const;
  double shift() const noexcept { return shift_; }
  /// Upper bound for sup |u| (without the shift).
  double sup_bound() const noexcept { return sup_bound_; }

  /// Precomputes values on the grid j/points (by FFT); later calls at those
  /// abscissae are table lookups. Other x still use the series.
  void tabulate(int points);

 private:
  std::vector<Complex> c_;  // 2 c_k, trailing negligible modes dropped
  std::vector<double> table_;
  double shift_;
  double sup_bound_;
};

/// Fundamental solutions of -y'' + u y = lambda y at x = 1:
///   y1(0) = 1, y1'(0) = 0, y2(0) = 0, y2'(0) = 1.
struct TransferData {
  double lambda = 0.0;
  double y1 = 1.0, y1p = 0.0, y2 = 0.0, y2p = 1.0;
  bool has_dlambda = false;
  double dy1 = 0.0, dy1p = 0.0, dy2 = 0.0, dy2p = 0.0;

  double wronskian() const noexcept { return y1 * y2p - y1p * y2; }
  double discriminant() const noexcept { return y1 + y2p; }
  double discriminant_dot() const noexcept { return dy1 + dy2p; }
  /// Delta^2 - 4 written as (y1 - y2')^2 + 4 y1' y2 (uses W = 1). Its error
  /// scales with the gap size, so it resolves very small gaps.
  double gap_function() const noexcept {
    const double d = y1 - y2p;
    return d * d + 4.0 * y1p * y2;
  }
};

TransferData transfer(const Potential& q, double lambda, bool with_dlambda,
                      const HillOptions& opt = {});
TransferData transfer(const FourierField& u, double lambda, bool with_dlambda,
                      const HillOptions& opt = {});

/// Like transfer(), but the d* fields hold the derivatives of the fundamental
/// solutions in the potential direction w (u -> u + h w) instead of d/dlambda.
TransferData transfer_variation(const Potential& q, const Potential& w, double lambda,
                                const HillOptions& opt = {});

/// Solution values (y1, y1', y2, y2') at the requested interior points, for
/// checking the Wronskian along the whole integration.
std::vector<TransferData> transfer_path(const Potential& q, double lambda, std::span<const double> xs,
                                        const HillOptions& opt = {});

struct DiscriminantValue {
  double value = 0.0;
  double derivative = 0.0;
};

DiscriminantValue discriminant(const Potential& q, double lambda, const HillOptions& opt = {});
DiscriminantValue discriminant(const FourierField& u, double lambda, const HillOptions& opt = {});

struct HillSpectrum {
  int n_max = 0;
  double z = 0.0;
  double shift = 0.0;
  std::vector<double> lambda;    ///< lambda_0 .. lambda_{2 n_max}
  std::vector<double> critical;  ///< zero of Delta' inside gap n, index n-1
  std::vector<double> gaps;      ///< g_1 .. g_{n_max}
  std::vector<double> mu;        ///< mu_1 .. mu_{n_max} (empty until requested)
  HillOptions options;

  double lo(int n) const { return lambda[2 * n - 1]; }
  double hi(int n) const { return lambda[2 * n]; }
  bool closed(int n) const { return gaps[n - 1] == 0.0; }
};

/// lambda_0 .. lambda_{2 n_max} of -d^2/dx^2 + u + shift on the doubled period.
/// Throws SpectrumError (with the scan in the message) if a gap is missed.
HillSpectrum periodic_spectrum(const FourierField& u, int n_max, const HillOptions& opt = {},
                               double shift = 0.0);

std::vector<double> gap_lengths(const HillSpectrum& s);

/// mu_1 .. mu_{n_max} for y(z) = y(z+1) = 0. Reuses `periodic` when given
/// (it must belong to the same u and shift).
std::vector<double> dirichlet_spectrum(const FourierField& u, int n_max, double z = 0.0,
                                       const HillSpectrum* periodic = nullptr,
                                       const HillOptions& opt = {}, double shift = 0.0);

/// Periodic spectrum with the Dirichlet spectrum at z attached.
HillSpectrum hill_spectrum(const FourierField& u, int n_max, double z = 0.0,
                           const HillOptions& opt = {}, double shift = 0.0);

struct TraceReconstruction {
  std::vector<double> values;
  double truncation_estimate = 0.0;  ///< max over z of the last retained term
  bool resolved = true;              ///< false when the terms stop decaying
};

TraceReconstruction trace_reconstruct(const FourierField& u, int n_max, std::span<const double> z_grid,
                                      const HillOptions& opt = {}, double shift = 0.0);

/// Truncated product 4 (lambda_0 - l) prod_n (lambda_{2n} - l)(lambda_{2n-1} - l) / (n pi)^4.
double product_representation(const HillSpectrum& s, double l);

using Functional = std::function<double(const FourierField&)>;

/// L2 gradient by central differences along every e_{+-k}. With `richardson`
/// the h and h/2 quotients are combined to fourth order.
FourierField functional_gradient_fd(const Functional& F, const FourierField& u, double h,
                                    bool richardson = false);

/// {F, G} = integral of (d/dx grad F) grad G.
double gardner_bracket(const FourierField& grad_f, const FourierField& grad_g);

/// Dense-matrix eigenvalues of -d^2/dx^2 + u + shift on 2-periodic exponentials
/// e^{i pi m x}, |m| <= truncation (0 picks a safe default). Returns the lowest 2 n_max + 1.
std::vector<double> matrix_oracle_spectrum(const FourierField& u, int n_max, int truncation = 0,
                                           double shift = 0.0);

/// Sine-basis Galerkin eigenvalues for y(z) = y(z+1) = 0; the lowest n_max.
std::vector<double> dirichlet_matrix_oracle(const FourierField& u, int n_max, double z = 0.0,
                                            int truncation = 0);

namespace fault_injection {
/// Test hook: when set, every discriminant evaluation returns -Delta.
void flip_discriminant_sign(bool on);
bool discriminant_sign_flipped();
}  // namespace fault_injection

}  // namespace kdvlab
