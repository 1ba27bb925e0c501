#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "kdvlab/birkhoff.hpp"
#include "kdvlab/grid.hpp"
#include "kdvlab/kdvflow.hpp"

namespace kdvlab {

/// Per-mode amplitudes of the white-in-time forcing sum_j b_j beta_j'(t) e_j,
/// with b_{-j} = b_j. Only b_1..b_K are stored.
struct NoiseSpec {
  std::vector<double> b;
  std::string law = "explicit";  ///< "explicit" or "power" (b_j = amplitude j^-decay)
  double amplitude = 0.0;
  double decay = 0.0;
  std::uint64_t seed = 0;

  static NoiseSpec power_law(int modes, double amplitude, double decay, std::uint64_t seed = 0);

  int modes() const noexcept { return static_cast<int>(b.size()); }
  /// Throws InvalidArgument: empty, nonpositive or non-finite b_j, power decay <= 3/2.
  void validate() const;
  /// sum over retained j = +-1..+-K of b_j^2.
  double forcing_mass() const;
  /// The same sum over |j| > K for the power law (0 for explicit lists).
  double neglected_mass() const;
};

/// Deterministic derived seed for stream `index` of a master seed (splitmix64).
std::uint64_t split_seed(std::uint64_t master, std::uint64_t index);

/// A reproducible stream of standard normal draws.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}
  double normal() { return normal_(engine_); }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

/// sum b_j xi_j sqrt(dt) e_j over j = +-1..+-min(K, spec.modes()), on a field of the given truncation.
/// Draws cos then sin components for j = 1, 2, ...; dt = 0 gives the zero field and draws nothing.
FourierField noise_increment(const NoiseSpec& spec, double dt, NoiseStream& rng, int modes, int grid_size);

/// u_t + u_xxx - 6 u u_x = eps u_xx + sqrt(eps) eta. The deterministic part is
/// the ETDRK4 step with the dissipation in the linear propagator; the noise of
/// each step is the exact stochastic convolution of the linear part, so mode j
/// receives a Gaussian increment of variance eps b_j^2 (1 - e^{-2 d_j h}) / (2 d_j)
/// per component, d_j = eps (2 pi j)^2. eps = 0 is the unforced KdV step, bitwise.
class StochasticStepper {
 public:
  StochasticStepper(int modes, int grid_size, double dt, double eps, NoiseSpec spec, bool nonlinear = true);

  void step(std::vector<Complex>& c, NoiseStream& rng);
  /// Standard deviation of the injected increment per real component of mode k.
  double increment_std(int k) const;
  const KdvStepper& deterministic() const noexcept { return det_; }
  double epsilon() const noexcept { return eps_; }

 private:
  KdvStepper det_;
  double eps_;
  NoiseSpec spec_;
  std::vector<double> std_;
};

FourierField stochastic_step(const FourierField& u, double dt, double eps, const NoiseSpec& spec, NoiseStream& rng);

/// Cheap per-sample stand-in for I_j: (u_j^2 + u_{-j}^2) / (2 (2 pi j)).
double action_proxy(const FourierField& u, int j);

struct EnsembleOptions {
  int realizations = 2;
  double T_slow = 1.0;
  double dt = 1e-3;
  int samples = 20;               ///< slow-time grid tau_i = i T_slow / samples, i = 0..samples
  int n_actions = 3;              ///< full-pipeline actions I_1..I_n at each sample (0: proxies only)
  std::vector<int> angle_modes = {1};
  int angle_every = 0;            ///< fast steps between dense angle samples (0: slow grid only)
  bool nonlinear = true;
  double blowup_factor = 1e6;
  unsigned threads = 0;           ///< 0: hardware concurrency
  ActionOptions action;
};

struct RealizationDigest {
  std::uint64_t seed = 0;
  bool aborted = false;
  std::string abort_reason;
  std::vector<std::vector<double>> actions;  ///< [sample][n], NaN where the quadrature failed
  std::vector<std::vector<double>> proxy;    ///< [sample][n]
  std::vector<std::vector<double>> angles;   ///< [sample][mode index], NaN where undefined
  std::vector<std::vector<float>> dense_angles;  ///< [mode index][k] at fast times k * dense_dt
  std::vector<double> l2;                    ///< ||u||_0^2
  std::vector<double> h1;                    ///< ||u||_1^2
  FourierField final_state;
};

struct QuantityStats {
  std::vector<double> mean, variance;
  std::vector<std::vector<double>> quantiles;  ///< [level][sample]
  std::vector<int> count;
};

struct EnsembleResult {
  double epsilon = 0.0;
  std::vector<double> taus;
  std::vector<int> angle_modes;
  double dense_dt = 0.0;                    ///< fast-time spacing of the dense angle samples (0: none)
  std::vector<double> quantile_levels = {0.1, 0.25, 0.5, 0.75, 0.9};
  std::vector<RealizationDigest> runs;
  std::vector<QuantityStats> action_stats;  ///< per n
  std::vector<QuantityStats> proxy_stats;   ///< per n
  int completed = 0;
  bool valid = false;                       ///< at least 80% of the realizations completed
  double neglected_forcing = 0.0;

  /// Recomputes the statistics from the digests.
  void recompute();
};

/// M independent realizations to fast time T_slow / eps, started from u0.
EnsembleResult ensemble(const FourierField& u0, double eps, const NoiseSpec& spec, const EnsembleOptions& opt);

/// Largest gap between the quantile curves of I_n (1-based) over the common sample grid.
double law_distance(const EnsembleResult& a, const EnsembleResult& b, int n, bool use_proxy = false);

struct AngleReport {
  double tv = 0.0;                ///< total-variation distance of the weighted histogram to uniform
  double excluded_mass = 0.0;     ///< weight carried by undefined angles
  double noise_floor = 0.0;       ///< expected tv of an unweighted uniform sample of the same size
  std::vector<double> histogram;  ///< normalized bin masses
  int samples = 0;
};

/// Weighted histogram of angles in [0, 2 pi); weights need not be normalized.
AngleReport angle_histogram(const std::vector<double>& angles, const std::vector<double>& weights, int bins = 16);

/// f-weighted (f on the slow grid, integrating to 1 by the trapezoid rule) time-and-ensemble
/// histogram of the angle proxy of mode n. Uses the dense fast-time samples when recorded
/// (f interpolated linearly at tau = eps t), the slow-grid samples otherwise.
AngleReport angle_equidistribution(const EnsembleResult& r, int n, const std::vector<double>& f, int bins = 16);

/// The uniform density 1/T_slow sampled on the slow grid of r.
std::vector<double> uniform_weight(const EnsembleResult& r);

}  // namespace kdvlab
