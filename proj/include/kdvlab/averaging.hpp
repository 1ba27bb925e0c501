#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "kdvlab/birkhoff.hpp"
#include "kdvlab/grid.hpp"
#include "kdvlab/kdvflow.hpp"
#include "kdvlab/stochastic.hpp"

namespace kdvlab {

/// Omega(delta, m, K): some integer k != 0 with |k|_1 <= K and |W_1 k_1 + ... + W_m k_m| < delta.
struct ResonanceQuery {
  double delta = 1.0;
  int m = 2;
  int K = 3;

  void validate() const;  ///< delta > 0 (infinity allowed), m >= 1, K >= 1
};

struct ResonanceHit {
  bool resonant = false;
  std::vector<int> k;  ///< a minimizer of |<W, k>| over the lattice ball
  double value = 0.0;  ///< the minimum
};

/// First-order model W_n = (2 pi n)^3 - 6 I_n, n = 1..m (valid near the origin only).
std::vector<double> frequency_vector(const ActionSpectrum& I, int m);
/// Empirical alternative: slopes of the angle proxies along the KdV flow.
std::vector<double> frequency_vector_empirical(const FourierField& u, int m, double T_obs, double dt = 0.0);

enum class LatticeOrder { lexicographic, by_shell };

/// Exact enumeration of the lattice ball. The two orders visit the same set;
/// only the reported minimizer may differ between equal minima.
ResonanceHit resonance_indicator(const std::vector<double>& W, const ResonanceQuery& q,
                                 LatticeOrder order = LatticeOrder::lexicographic);

/// Trapezoidal time fraction spent in Omega; actions[i] holds I_1..I_m (at least) at times[i].
double occupation_fraction(const std::vector<double>& times, const std::vector<std::vector<double>>& actions,
                           const ResonanceQuery& q);
/// Uses the extra columns "I_1".."I_m" of the record (see action_observable).
double occupation_fraction(const TrajectoryRecord& traj, const ResonanceQuery& q);
/// Mean over completed realizations (full-pipeline actions, or proxies if use_proxy).
double occupation_fraction(const EnsembleResult& r, const ResonanceQuery& q, bool use_proxy = false);

/// Columns I_1..I_n from the spectral pipeline (NaN where it fails).
Observable action_observable(int n_max, const ActionOptions& opt = {});

/// 2 sum (2 pi j)^{2p+1} |I_j|.
double tilde_norm(const std::vector<double>& I, double p);

struct AveragingOptions {
  int n_max = 5;
  double T_avg = 0.2;        ///< averaging window in fast time
  double dt = 1e-4;          ///< KdV step for the window
  int snapshots = 64;        ///< even; 0 picks one per 1/4 period of the highest model frequency (2 pi n_max)^3
  ResonanceQuery query{1.0, 2, 3};
  bool finite_difference = false;  ///< central differences of I along P(u) instead of the exact derivative
  double fd_step = 1e-4;
  ActionOptions action;
};

struct AveragedRhs {
  std::vector<double> F;      ///< <F_n>, n = 1..n_max, per unit slow time
  std::vector<double> error;  ///< |full window - half window|
  bool resonant = false;
  ResonanceHit hit;
  int snapshots = 0;
};

/// Instantaneous F_n(u) = dI_n(u)[P(u)].
std::vector<double> action_production(const FourierField& u, const PerturbationSpec& pert, const AveragingOptions& opt);

/// Bump-weighted time average of F along the unperturbed flow from u over [0, T_avg].
AveragedRhs empirical_averaged_rhs(const FourierField& u, const PerturbationSpec& pert, const AveragingOptions& opt);

struct AveragedCurveOptions {
  AveragingOptions averaging;
  int panels = 20;              ///< Gauss-Legendre panels in slow time
  int nodes = 3;                ///< nodes per panel (1..5)
  double panel_growth = 1.0;    ///< ratio of consecutive panel widths (> 1 refines near tau = 0)
  double dt = 1e-4;             ///< perturbed-flow step in fast time
  double tail_tol = 1e-8;       ///< certification of the representative (energy fraction above 3K/4)
};

struct AveragedCurve {
  double epsilon = 0.0;
  std::vector<double> taus;                ///< panel ends, starting at 0
  std::vector<std::vector<double>> J;      ///< [tau][n]
  std::vector<std::vector<double>> err;    ///< accumulated window error bars
  std::vector<std::vector<double>> I;      ///< actions of the perturbed trajectory
  std::vector<double> deviation;           ///< |I - J|~_1 per tau
  double sup_deviation = 0.0;
  double error_band = 0.0;                 ///< |err|~_1 at the end
  int resonant_nodes = 0;
  bool aborted = false;
  std::string abort_reason;
};

/// Quasi-static two-scale integration of J' = <F>(J) with the perturbed trajectory as torus representative.
AveragedCurve averaged_trajectory(const FourierField& u0, double eps, double T_slow, const PerturbationSpec& pert,
                                  const AveragedCurveOptions& opt = {});

/// Zero-mean diagonal Gaussian on mode pairs: each component of mode j has
/// variance sigma_j / (2 pi j)^{1 + 2p}.
struct GaussianMeasureSpec {
  std::vector<double> sigma;  ///< sigma_1..sigma_K
  double zeta_prime = -2.0;   ///< admissibility exponent, < -1
  double p = 3.0;
  std::string law = "explicit";  ///< or "power": sigma_j = amplitude j^exponent
  double amplitude = 0.0;
  double exponent = 0.0;

  static GaussianMeasureSpec power_law(int modes, double amplitude, double exponent, double zeta_prime = -2.0,
                                       double p = 3.0);
  int modes() const noexcept { return static_cast<int>(sigma.size()); }
  /// Throws InvalidArgument on nonpositive sigma_j or zeta' >= -1.
  void validate() const;
  /// max_j j^{zeta'} / sigma_j over the retained modes.
  double admissibility_ratio() const;
  /// sum_{j > K} sigma_j for the power law (infinite if exponent >= -1), 0 for explicit lists.
  double tail() const;
  double variance(int j) const;
};

FourierField sample_gaussian(const GaussianMeasureSpec& spec, NoiseStream& rng, int grid_size = 0);

struct DivergenceReport {
  double divergence = 0.0;  ///< per unit eps
  int coordinates = 0;
  bool finite = true;
};

/// sum over the 2K' coordinates (u_k, u_{-k}), k <= K', of dP_i/du_i by central differences.
DivergenceReport divergence_estimate(const PerturbationSpec& pert, const FourierField& u, int probe_modes = 0,
                                     double h = 1e-6);

}  // namespace kdvlab
