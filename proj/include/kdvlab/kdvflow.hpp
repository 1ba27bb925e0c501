#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "kdvlab/fft.hpp"
#include "kdvlab/grid.hpp"

namespace kdvlab {

enum class PerturbationKind { none, dissipative, external_force, smoothing_map };

std::string to_string(PerturbationKind k);
PerturbationKind perturbation_kind_from_string(const std::string& s);

/// u_t = -u_xxx + 6 u u_x + eps * P(u) with
///   dissipative:    P(u) = u_xx
///   external_force: P(u) = force
///   smoothing_map:  P(u) = kernel * g(u), kernel multiplier exp(-kernel_decay |k|),
///                   g(u) = u^power with the mean removed.
struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::none;
  double epsilon = 0.0;
  FourierField force;
  double kernel_decay = 0.5;
  int power = 3;

  bool active() const noexcept { return kind != PerturbationKind::none && epsilon != 0.0; }
};

/// The perturbation vector field P(u) per unit epsilon (same truncation as u).
FourierField perturbation_field(const PerturbationSpec& p, const FourierField& u);

/// H(u) = integral of u_x^2 / 2 + u^3.
double hamiltonian(const FourierField& u);

/// Conservative step size for the integrating-factor scheme at cutoff K and amplitude sup|u|.
double suggested_dt(int modes, double amplitude);

/// Fourth-order exponential time differencing (ETDRK4) in exponential
/// coefficients. The dispersive term and the dissipative channel sit in the
/// exact linear propagator; the dealiased nonlinearity and the remaining
/// perturbation channels are explicit.
class KdvStepper {
 public:
  KdvStepper(int modes, int grid_size, double dt, PerturbationSpec pert = {});

  int modes() const noexcept { return k_; }
  int grid_size() const noexcept { return n_; }
  double dt() const noexcept { return dt_; }
  const PerturbationSpec& perturbation() const noexcept { return pert_; }

  /// Advances c (size K+1, c[0] ignored and kept 0) by one step of size dt().
  void step(std::vector<Complex>& c);
  /// One step of arbitrary size h (propagators rebuilt if h != dt()).
  void step(std::vector<Complex>& c, double h);

  /// exp(h L_k) for the linear symbol of mode k.
  Complex propagator(int k, double h) const;
  /// Damping rate of mode k from the dissipative channel (eps (2 pi k)^2).
  double damping(int k) const noexcept;

  /// Off: drop 6 u u_x (linearized equation; perturbation channels stay).
  void set_nonlinear(bool on) noexcept { nonlinear_ = on; }
  bool nonlinear() const noexcept { return nonlinear_; }

 private:
  void rhs(const std::vector<Complex>& c, std::vector<Complex>& out);
  void set_dt(double h);

  int k_, n_;
  double dt_;
  PerturbationSpec pert_;
  bool nonlinear_ = true;
  std::vector<Complex> lin_, e_full_, e_half_, q_half_, f1_, f2_, f3_, force_;
  std::vector<double> kernel_;
  RealTransform fft_;
  std::vector<double> grid_, grid2_;
  std::vector<Complex> spec_;
  std::vector<Complex> k1_, k2_, k3_, k4_, tmp_, a_, b_;
};

/// One step of size dt applied to a field (convenience wrapper).
FourierField step(const FourierField& u, double dt, const PerturbationSpec& pert = {});

/// Extra per-sample observable: a named group of columns.
struct Observable {
  std::vector<std::string> columns;
  std::function<std::vector<double>(const FourierField&)> fn;
};

struct EvolveOptions {
  int sample_every = 1;              ///< steps between samples (the final time is always sampled)
  std::vector<double> sobolev_p;     ///< extra ||u||_p columns
  std::vector<int> angle_modes;      ///< angle proxies of these modes
  std::vector<Observable> extras;
  int snapshot_every = 0;            ///< keep full fields every this many samples (0: none)
  double blowup_factor = 1e6;        ///< abort when ||u||_1 exceeds factor * max(initial ||u||_1, 1)
};

struct TrajectoryRecord {
  double epsilon = 0.0;
  std::vector<double> times;
  std::vector<double> norm0;
  std::vector<std::vector<double>> norm_p;  ///< [p index][sample]
  std::vector<double> sobolev_p;
  std::vector<double> energy;               ///< H(u)
  std::vector<int> angle_modes;
  std::vector<std::vector<double>> angles;  ///< [mode index][sample], NaN when undefined
  std::vector<std::string> extra_columns;
  std::vector<std::vector<double>> extras;  ///< [sample][column]
  std::vector<double> snapshot_times;
  std::vector<FourierField> snapshots;
  FourierField final_state;
  bool aborted = false;
  std::string abort_reason;

  std::size_t size() const noexcept { return times.size(); }
};

/// Evolves u0 over [0, T] with nsteps = ceil(T / dt) equal steps.
TrajectoryRecord evolve(const FourierField& u0, double T, double dt, const PerturbationSpec& pert = {},
                        const EvolveOptions& opt = {});

/// Evolves without recording (throws BlowUpError on blow-up).
FourierField evolve_to(const FourierField& u0, double T, double dt, const PerturbationSpec& pert = {});

struct ScalingRow {
  double lambda = 0.0;
  bool certified = false;
  std::string note;
  double sup_norm = 0.0;
  double inf_norm = 0.0;
  double lower_bound = 0.0;  ///< lambda ||u0||_0
  bool lower_bound_holds = false;
};

struct ScalingOptions {
  int modes = 64;
  int grid_size = 256;
  double dt = 0.0;          ///< 0: suggested_dt per lambda
  double tail_tol = 1e-10;  ///< certification: energy fraction in the top quarter of modes
  int sample_every = 10;
};

/// For each lambda, evolves lambda * u0 over the window and records extrema of ||u(t)||_k.
std::vector<ScalingRow> scaling_experiment(const FourierField& u0, const std::vector<double>& lambdas, double k,
                                           double T_window, const ScalingOptions& opt = {});

/// Fraction of the H^0 energy carried by modes above 3K/4.
double spectral_tail_fraction(const FourierField& u);

}  // namespace kdvlab
