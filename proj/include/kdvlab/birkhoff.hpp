#pragma once

#include <vector>

#include "kdvlab/grid.hpp"
#include "kdvlab/hill.hpp"
#include "kdvlab/kdvflow.hpp"

namespace kdvlab {

struct ActionOptions {
  double rtol = 1e-8;
  double atol = 1e-15;
  int min_nodes = 12;     ///< first midpoint rule; refined by tripling
  int max_nodes = 2916;
  int fixed_nodes = 0;    ///< > 0: use exactly this many nodes (smooth in u, for differencing)
  HillOptions hill;
};

struct ActionValue {
  double value = 0.0;
  double error = 0.0;   ///< last refinement change
  int nodes = 0;
  bool clamped = false; ///< a small negative quadrature value was set to 0
  bool unresolved = false; ///< gap too small for the quadrature; local quadratic model used
};

/// I_n = (2/pi) * integral over gap n of lambda Delta' / sqrt(Delta^2 - 4), sign
/// fixed so that I_n >= 0. Substitution lambda = m + r sin(theta) and a
/// midpoint rule in theta.
ActionValue action(const FourierField& u, int n, const HillSpectrum& s, const ActionOptions& opt = {});

/// Directional derivative dI_n(u)[w] = (2/pi) * integral of sign(Delta) dDelta[w] / sqrt(Delta^2 - 4),
/// with dDelta[w] from the variational equations (no differencing).
ActionValue action_derivative(const FourierField& u, int n, const HillSpectrum& s, const FourierField& w,
                              const ActionOptions& opt = {});

struct ActionSpectrum {
  int n_max = 0;
  std::vector<double> I;
  std::vector<double> gaps;
  double truncation_estimate = 0.0;  ///< geometric extrapolation of sum_{n > n_max} I_n
  double tail_ratio = 0.0;           ///< I_{n_max} / I_{n_max - 1} when both are open
  int clamped = 0;

  double weighted_sum(double power) const;  ///< sum (2 pi n)^power I_n
  double weighted_tail(double power) const;  ///< tail estimate for the same weight
};

ActionSpectrum actions(const FourierField& u, const HillSpectrum& s, const ActionOptions& opt = {});
ActionSpectrum actions(const FourierField& u, int n_max, const ActionOptions& opt = {});

/// All dI_n[w], n = 1..n_max, for one direction w.
std::vector<double> action_derivatives(const FourierField& u, const HillSpectrum& s, const FourierField& w,
                                       const ActionOptions& opt = {});

/// |2 sum (2 pi j) I_j - ||u||_0^2| / ||u||_0^2 (0 for u = 0).
double percival_residual(const FourierField& u, const ActionSpectrum& I);
double percival_residual(const FourierField& u, int n_max, const ActionOptions& opt = {});

/// atan2(u_{-n}, u_n) in [0, 2 pi): the first-order angle of mode n.
/// Throws DomainError when both coefficients are below `floor`.
double angle_proxy(const FourierField& u, int n, double floor = 0.0);

/// f_n = 2 log((-1)^n y2'(1, mu_n)); computes mu when s.mu is empty.
double f_coordinate(const FourierField& u, int n, const HillSpectrum& s, const HillOptions& opt = {});

/// P_j = sum (2 pi i)^j I_i.
double moment(const ActionSpectrum& I, int j);

struct MomentSet {
  std::vector<int> index;
  std::vector<double> value;
  std::vector<double> tail;
};
MomentSet moments(const ActionSpectrum& I, const std::vector<int>& js = {-1, 1, 2, 3});

struct VReport {
  double V = 0.0;
  double H = 0.0;
  double P_minus1 = 0.0, P1 = 0.0, P3 = 0.0;
  double I2 = 0.0;          ///< ||I||_2
  double bound8 = 0.0;      ///< 8 P_1 P_{-1}
  double lower = 0.0;       ///< (pi/10) ||I||^2 / (1 + 2 P_{-1}^{1/2})
  double upper = 0.0;       ///< (8^3 (1 + P_{-1}^{1/2})^{1/2} P_{-1}^2 + 6 pi e^{P_{-1}^{1/2}/2} ||I||) ||I||
  double tail = 0.0;        ///< truncation estimate of P_3
};

/// V = P_3(I(u)) - H(u) with the bounds evaluated at I(u).
VReport v_functional(const FourierField& u, const ActionSpectrum& I);
VReport v_functional(const FourierField& u, int n_max, const ActionOptions& opt = {});

/// |v|_m from actions: (2 sum (2 pi j)^{2m+1} I_j)^{1/2}.
double birkhoff_norm(const ActionSpectrum& I, int m);

struct KorotyaevReport {
  int m = 0;
  std::vector<double> constants;  ///< per family member, 0 for u = 0
  double C = 0.0;                 ///< max over the family
  double C_without_last = 0.0;    ///< max over all but the last member
  bool finite = true;
};

/// Smallest C with |v|_m <= C ||u||_m (1 + ||u||_m)^{2(m+2)/3} over the family.
KorotyaevReport korotyaev_check(const std::vector<FourierField>& family, int m, int n_max,
                                const ActionOptions& opt = {});

struct FrequencyEstimate {
  double W = 0.0;        ///< rotation rate of the proxy angle (clockwise in the (u_n, u_{-n}) plane)
  double W_half = 0.0;   ///< the same estimate from the first half of the window
  int samples = 0;
};

/// Evolves u0 by KdV over T_obs, unwraps the angle proxy of mode n and fits
/// its drift with a smooth bump weight. Throws DomainError if the proxy
/// becomes undefined.
FrequencyEstimate frequency_estimate(const FourierField& u0, int n, double T_obs, double dt = 0.0,
                                     int sample_every = 1);

struct QuasilinearityReport {
  std::vector<int> modes;
  std::vector<double> linear;      ///< u_j^2 + u_{-j}^2
  std::vector<double> nonlinear;   ///< 2 (2 pi j) I_j
  std::vector<double> difference;  ///< |nonlinear - linear|
  double linear_exponent = 0.0;    ///< fitted power of j (NaN if the tail vanishes)
  double difference_exponent = 0.0;
  bool linear_tail_zero = false;
  bool conclusive = true;
  bool passed = false;
};

/// Compares the action tail with the tail of the linearized transform over j = j_lo..j_hi.
QuasilinearityReport quasilinearity_probe(const FourierField& u, const ActionSpectrum& I, int j_lo, int j_hi,
                                          double floor = 1e-26);

}  // namespace kdvlab
