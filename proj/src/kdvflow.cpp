#include "kdvlab/kdvflow.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "kdvlab/error.hpp"

namespace kdvlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double h1_norm(const std::vector<Complex>& c) {
  double s = 0.0;
  for (std::size_t k = 1; k < c.size(); ++k) s += std::pow(kTwoPi * k, 2) * std::norm(c[k]);
  return std::sqrt(2.0 * s);
}

double angle_of(const FourierField& u, int n) {
  const double a = u.cos_coeff(n), b = u.sin_coeff(n);
  if (a == 0.0 && b == 0.0) return std::numeric_limits<double>::quiet_NaN();
  double t = std::atan2(b, a);
  if (t < 0.0) t += kTwoPi;
  return t;
}

}  // namespace

std::string to_string(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::none: return "none";
    case PerturbationKind::dissipative: return "dissipative";
    case PerturbationKind::external_force: return "external_force";
    case PerturbationKind::smoothing_map: return "smoothing_map";
  }
  return "none";
}

PerturbationKind perturbation_kind_from_string(const std::string& s) {
  if (s == "none") return PerturbationKind::none;
  if (s == "dissipative") return PerturbationKind::dissipative;
  if (s == "external_force") return PerturbationKind::external_force;
  if (s == "smoothing_map") return PerturbationKind::smoothing_map;
  throw InvalidArgument("unknown perturbation kind '" + s + "'");
}

FourierField perturbation_field(const PerturbationSpec& p, const FourierField& u) {
  switch (p.kind) {
    case PerturbationKind::none: return FourierField(u.modes(), u.grid_size());
    case PerturbationKind::dissipative: return derivative(u, 2);
    case PerturbationKind::external_force: {
      if (p.force.modes() != u.modes()) throw InvalidArgument("force truncation differs from the field");
      return p.force.resized(u.modes(), u.grid_size());
    }
    case PerturbationKind::smoothing_map: {
      if (p.power < 1) throw InvalidArgument("smoothing_map power must be >= 1");
      const int n = u.grid_size();
      RealTransform t(n);
      std::vector<double> v(n);
      t.to_grid(u.exponential(), v);
      for (double& x : v) x = std::pow(x, p.power);
      std::vector<Complex> c(u.modes() + 1);
      t.to_modes(v, c);
      c[0] = 0.0;
      for (int k = 1; k <= u.modes(); ++k) c[k] *= std::exp(-p.kernel_decay * k);
      return FourierField::from_exponential(c, n);
    }
  }
  return FourierField(u.modes(), u.grid_size());
}

double hamiltonian(const FourierField& u) {
  const double grad = 0.5 * std::pow(sobolev_norm(u, 1.0), 2);
  // Integral of u^3 = <P_K(u^2), u>.
  const auto sq = product_dealiased(u, u);
  return grad + inner(sq.field, u);
}

double suggested_dt(int modes, double amplitude) {
  // Explicit nonlinear stage: 6 |u| k_max dt within the RK4 stability interval, with margin.
  const double kmax = kTwoPi * modes;
  return 0.5 / (6.0 * (amplitude + 0.1) * kmax);
}

// ---------------------------------------------------------------------------

KdvStepper::KdvStepper(int modes, int grid_size, double dt, PerturbationSpec pert)
    : k_(modes), n_(grid_size), dt_(dt), pert_(std::move(pert)), fft_(grid_size) {
  if (modes < 1 || grid_size < 3 * modes || grid_size % 2 != 0) {
    throw InvalidArgument("stepper needs N even and N >= 3K (K = " + std::to_string(modes) +
                          ", N = " + std::to_string(grid_size) + ")");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("time step must be positive");
  if (pert_.epsilon < 0.0) throw InvalidArgument("epsilon must be >= 0");
  lin_.resize(k_ + 1);
  for (int k = 0; k <= k_; ++k) {
    const double w = kTwoPi * k;
    lin_[k] = Complex(-damping(k), w * w * w);
  }
  force_.assign(k_ + 1, Complex{});
  kernel_.assign(k_ + 1, 0.0);
  if (pert_.active() && pert_.kind == PerturbationKind::external_force) {
    if (pert_.force.modes() != k_) throw InvalidArgument("force truncation differs from the stepper");
    force_ = pert_.force.exponential();
    force_[0] = 0.0;
  }
  if (pert_.active() && pert_.kind == PerturbationKind::smoothing_map) {
    for (int k = 1; k <= k_; ++k) kernel_[k] = std::exp(-pert_.kernel_decay * k);
  }
  grid_.resize(n_);
  grid2_.resize(n_);
  spec_.resize(k_ + 1);
  for (auto* v : {&k1_, &k2_, &k3_, &k4_, &tmp_, &a_, &b_}) v->resize(k_ + 1);
  set_dt(dt);
}

double KdvStepper::damping(int k) const noexcept {
  if (!pert_.active() || pert_.kind != PerturbationKind::dissipative) return 0.0;
  const double w = kTwoPi * k;
  return pert_.epsilon * w * w;
}

Complex KdvStepper::propagator(int k, double h) const { return std::exp(lin_[k] * h); }

namespace {

// phi_1..phi_3 of z; Taylor series near 0, recurrence elsewhere.
std::array<Complex, 3> phi123(Complex z) {
  std::array<Complex, 3> p{};
  if (std::abs(z) < 1.0) {
    for (int k = 1; k <= 3; ++k) {
      Complex term = 1.0, sum = 0.0;
      double fact = 1.0;
      for (int j = 1; j <= k; ++j) fact *= j;
      term = 1.0 / fact;
      for (int j = 0; j < 30; ++j) {
        sum += term;
        term *= z / static_cast<double>(j + k + 1);
      }
      p[k - 1] = sum;
    }
    return p;
  }
  const Complex e = std::exp(z);
  p[0] = (e - 1.0) / z;
  p[1] = (p[0] - 1.0) / z;
  p[2] = (p[1] - 0.5) / z;
  return p;
}

}  // namespace

void KdvStepper::set_dt(double h) {
  dt_ = h;
  for (auto* v : {&e_full_, &e_half_, &q_half_, &f1_, &f2_, &f3_}) v->resize(k_ + 1);
  for (int k = 0; k <= k_; ++k) {
    const Complex z = lin_[k] * h;
    e_full_[k] = std::exp(z);
    e_half_[k] = std::exp(0.5 * z);
    const auto ph = phi123(0.5 * z);
    q_half_[k] = 0.5 * h * ph[0];
    const auto p = phi123(z);
    f1_[k] = h * (p[0] - 3.0 * p[1] + 4.0 * p[2]);
    f2_[k] = h * 2.0 * (p[1] - 2.0 * p[2]);
    f3_[k] = h * (4.0 * p[2] - p[1]);
  }
}

void KdvStepper::rhs(const std::vector<Complex>& c, std::vector<Complex>& out) {
  // 6 u u_x = 3 (u^2)_x  ->  3 (2 pi i k) (u^2)_k.
  out[0] = 0.0;
  const bool smoothing = pert_.active() && pert_.kind == PerturbationKind::smoothing_map;
  if (nonlinear_ || smoothing) fft_.to_grid(c, grid_);
  if (nonlinear_) {
    for (int i = 0; i < n_; ++i) grid2_[i] = grid_[i] * grid_[i];
    fft_.to_modes(grid2_, spec_);
    for (int k = 1; k <= k_; ++k) out[k] = Complex(0.0, 3.0 * kTwoPi * k) * spec_[k];
  } else {
    std::fill(out.begin() + 1, out.end(), Complex{});
  }
  if (!pert_.active()) return;
  const double eps = pert_.epsilon;
  if (pert_.kind == PerturbationKind::external_force) {
    for (int k = 1; k <= k_; ++k) out[k] += eps * force_[k];
  } else if (pert_.kind == PerturbationKind::smoothing_map) {
    for (int i = 0; i < n_; ++i) grid2_[i] = std::pow(grid_[i], pert_.power);
    fft_.to_modes(grid2_, spec_);
    for (int k = 1; k <= k_; ++k) out[k] += eps * kernel_[k] * spec_[k];
  }
}

void KdvStepper::step(std::vector<Complex>& c, double h) {
  if (h != dt_) set_dt(h);
  step(c);
}

void KdvStepper::step(std::vector<Complex>& c) {
  if (static_cast<int>(c.size()) != k_ + 1) throw InvalidArgument("state size differs from the stepper cutoff");
  c[0] = 0.0;
  // ETDRK4 (Cox-Matthews); k1..k4 hold N(c), N(a), N(b), N(c_stage).
  rhs(c, k1_);
  for (int k = 0; k <= k_; ++k) a_[k] = e_half_[k] * c[k] + q_half_[k] * k1_[k];
  rhs(a_, k2_);
  for (int k = 0; k <= k_; ++k) b_[k] = e_half_[k] * c[k] + q_half_[k] * k2_[k];
  rhs(b_, k3_);
  for (int k = 0; k <= k_; ++k) tmp_[k] = e_half_[k] * a_[k] + q_half_[k] * (2.0 * k3_[k] - k1_[k]);
  rhs(tmp_, k4_);
  for (int k = 0; k <= k_; ++k) {
    c[k] = e_full_[k] * c[k] + f1_[k] * k1_[k] + f2_[k] * (k2_[k] + k3_[k]) + f3_[k] * k4_[k];
  }
  c[0] = 0.0;
}

FourierField step(const FourierField& u, double dt, const PerturbationSpec& pert) {
  KdvStepper s(u.modes(), u.grid_size(), dt, pert);
  auto c = u.exponential();
  s.step(c);
  return FourierField::from_exponential(c, u.grid_size());
}

// ---------------------------------------------------------------------------

TrajectoryRecord evolve(const FourierField& u0, double T, double dt, const PerturbationSpec& pert,
                        const EvolveOptions& opt) {
  if (!(T >= 0.0)) throw InvalidArgument("final time must be >= 0");
  if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
  if (opt.sample_every < 1) throw InvalidArgument("sample_every must be >= 1");
  const long nsteps = T == 0.0 ? 0 : static_cast<long>(std::ceil(T / dt - 1e-9));
  const double h = nsteps > 0 ? T / static_cast<double>(nsteps) : dt;

  TrajectoryRecord rec;
  rec.epsilon = pert.active() ? pert.epsilon : 0.0;
  rec.sobolev_p = opt.sobolev_p;
  rec.norm_p.resize(opt.sobolev_p.size());
  rec.angle_modes = opt.angle_modes;
  rec.angles.resize(opt.angle_modes.size());
  for (const auto& e : opt.extras) rec.extra_columns.insert(rec.extra_columns.end(), e.columns.begin(), e.columns.end());

  KdvStepper stepper(u0.modes(), u0.grid_size(), h, pert);
  auto c = u0.exponential();
  const double ceiling = opt.blowup_factor * std::max(h1_norm(c), 1.0);
  int sample_count = 0;

  auto record = [&](double t) {
    const FourierField u = FourierField::from_exponential(c, u0.grid_size());
    rec.times.push_back(t);
    rec.norm0.push_back(sobolev_norm(u, 0.0));
    for (std::size_t i = 0; i < opt.sobolev_p.size(); ++i) rec.norm_p[i].push_back(sobolev_norm(u, opt.sobolev_p[i]));
    rec.energy.push_back(hamiltonian(u));
    for (std::size_t i = 0; i < opt.angle_modes.size(); ++i) rec.angles[i].push_back(angle_of(u, opt.angle_modes[i]));
    if (!opt.extras.empty()) {
      std::vector<double> row;
      for (const auto& e : opt.extras) {
        const auto v = e.fn(u);
        if (v.size() != e.columns.size()) throw InvalidArgument("observable returned the wrong number of columns");
        row.insert(row.end(), v.begin(), v.end());
      }
      rec.extras.push_back(std::move(row));
    }
    if (opt.snapshot_every > 0 && sample_count % opt.snapshot_every == 0) {
      rec.snapshot_times.push_back(t);
      rec.snapshots.push_back(u);
    }
    ++sample_count;
  };

  record(0.0);
  for (long i = 1; i <= nsteps; ++i) {
    stepper.step(c);
    const double t = static_cast<double>(i) * h;
    const double n1 = h1_norm(c);
    if (!std::isfinite(n1) || n1 > ceiling) {
      rec.aborted = true;
      rec.abort_reason = "blow-up at t = " + std::to_string(t) + ": ||u||_1 = " + std::to_string(n1) +
                         " exceeds the ceiling " + std::to_string(ceiling);
      break;
    }
    if (i % opt.sample_every == 0 || i == nsteps) record(t);
  }
  rec.final_state = FourierField::from_exponential(c, u0.grid_size());
  return rec;
}

FourierField evolve_to(const FourierField& u0, double T, double dt, const PerturbationSpec& pert) {
  if (!(T >= 0.0) || !(dt > 0.0)) throw InvalidArgument("evolve_to: need T >= 0 and dt > 0");
  const long nsteps = T == 0.0 ? 0 : static_cast<long>(std::ceil(T / dt - 1e-9));
  if (nsteps == 0) return u0;
  const double h = T / static_cast<double>(nsteps);
  KdvStepper stepper(u0.modes(), u0.grid_size(), h, pert);
  auto c = u0.exponential();
  const double ceiling = 1e6 * std::max(h1_norm(c), 1.0);
  for (long i = 1; i <= nsteps; ++i) {
    stepper.step(c);
    const double n1 = h1_norm(c);
    if (!std::isfinite(n1) || n1 > ceiling) throw BlowUpError("blow-up during evolution", i * h);
  }
  return FourierField::from_exponential(c, u0.grid_size());
}

// ---------------------------------------------------------------------------

double spectral_tail_fraction(const FourierField& u) {
  const int start = (3 * u.modes()) / 4 + 1;
  double tail = 0.0;
  for (int k = start; k <= u.modes(); ++k) tail += std::pow(u.cos_coeff(k), 2) + std::pow(u.sin_coeff(k), 2);
  const double total = u.l2_norm_squared();
  return total > 0.0 ? tail / total : 0.0;
}

std::vector<ScalingRow> scaling_experiment(const FourierField& u0, const std::vector<double>& lambdas, double k,
                                           double T_window, const ScalingOptions& opt) {
  if (k < 1.0) throw InvalidArgument("scaling experiment needs k >= 1");
  std::vector<ScalingRow> rows;
  const FourierField base = u0.resized(opt.modes, opt.grid_size);
  const double n0 = sobolev_norm(base, 0.0);
  for (double lam : lambdas) {
    ScalingRow row;
    row.lambda = lam;
    row.lower_bound = lam * n0;
    if (lam == 0.0) {
      row.certified = true;
      row.note = "zero run";
      row.lower_bound_holds = true;
      rows.push_back(row);
      continue;
    }
    const FourierField init = base * lam;
    double sup = 0.0;
    for (int j = 1; j <= init.modes(); ++j) sup += std::abs(init.cos_coeff(j)) + std::abs(init.sin_coeff(j));
    // Solitons emerging from smooth data reach a few times the initial amplitude.
    const double dt = opt.dt > 0.0 ? opt.dt : suggested_dt(opt.modes, 3.0 * std::numbers::sqrt2 * sup);
    EvolveOptions eo;
    eo.sample_every = opt.sample_every;
    eo.sobolev_p = {k};
    eo.extras.push_back({{"tail"}, [](const FourierField& u) { return std::vector<double>{spectral_tail_fraction(u)}; }});
    const auto rec = evolve(init, T_window / lam, dt, {}, eo);
    double worst_tail = 0.0;
    for (const auto& r : rec.extras) worst_tail = std::max(worst_tail, r[0]);
    if (rec.aborted) {
      row.note = rec.abort_reason;
    } else if (worst_tail > opt.tail_tol) {
      row.note = "unresolved: tail energy fraction " + std::to_string(worst_tail);
    } else {
      row.certified = true;
    }
    const auto& nk = rec.norm_p[0];
    row.sup_norm = *std::max_element(nk.begin(), nk.end());
    row.inf_norm = *std::min_element(nk.begin(), nk.end());
    row.lower_bound_holds = row.inf_norm >= row.lower_bound;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace kdvlab
