#include "kdvlab/averaging.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "kdvlab/error.hpp"
#include "kdvlab/hill.hpp"

namespace kdvlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> model_frequencies(const std::vector<double>& I, int m) {
  std::vector<double> W(m);
  for (int n = 1; n <= m; ++n) {
    const double In = n <= static_cast<int>(I.size()) ? I[n - 1] : 0.0;
    W[n - 1] = std::pow(kTwoPi * n, 3) - 6.0 * In;
  }
  return W;
}

double bump(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return std::exp(-1.0 / (s * (1.0 - s)));
}

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  switch (n) {
    case 1: x = {0.0}; w = {2.0}; break;
    case 2: x = {-0.5773502691896258, 0.5773502691896258}; w = {1.0, 1.0}; break;
    case 3:
      x = {-0.7745966692414834, 0.0, 0.7745966692414834};
      w = {0.5555555555555556, 0.8888888888888888, 0.5555555555555556};
      break;
    case 4:
      x = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
      w = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
      break;
    case 5:
      x = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
      w = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665, 0.2369268850561891};
      break;
    default: throw InvalidArgument("Gauss-Legendre rule supports 1..5 nodes");
  }
}

// Advances exponential coefficients over fast time T in equal steps no longer than dt.
void advance(KdvStepper& st, std::vector<Complex>& c, double T, double dt) {
  if (T <= 0.0) return;
  const long n = std::max(1L, static_cast<long>(std::ceil(T / dt - 1e-9)));
  const double h = T / static_cast<double>(n);
  for (long i = 0; i < n; ++i) st.step(c, h);
}

}  // namespace

void ResonanceQuery::validate() const {
  if (!(delta > 0.0)) throw InvalidArgument("resonance query: delta must be positive");
  if (m < 1) throw InvalidArgument("resonance query: m must be >= 1");
  if (K < 1) throw InvalidArgument("resonance query: K must be >= 1");
}

std::vector<double> frequency_vector(const ActionSpectrum& I, int m) {
  if (m < 1) throw InvalidArgument("frequency_vector: m must be >= 1");
  return model_frequencies(I.I, m);
}

std::vector<double> frequency_vector_empirical(const FourierField& u, int m, double T_obs, double dt) {
  std::vector<double> W;
  for (int n = 1; n <= m; ++n) W.push_back(frequency_estimate(u, n, T_obs, dt).W);
  return W;
}

ResonanceHit resonance_indicator(const std::vector<double>& W, const ResonanceQuery& q, LatticeOrder order) {
  q.validate();
  if (static_cast<int>(W.size()) < q.m) throw InvalidArgument("resonance_indicator: fewer frequencies than m");
  ResonanceHit best;
  best.value = std::numeric_limits<double>::infinity();
  std::vector<int> k(q.m, 0);
  auto consider = [&] {
    double s = 0.0;
    for (int i = 0; i < q.m; ++i) s += W[i] * k[i];
    const double v = std::abs(s);
    if (v < best.value) {
      best.value = v;
      best.k = k;
    }
  };
  if (order == LatticeOrder::lexicographic) {
    // Every k in [-K, K]^m with 1 <= |k|_1 <= K.
    std::function<void(int, int)> rec = [&](int i, int budget) {
      if (i == q.m) {
        if (budget < q.K) consider();
        return;
      }
      for (int v = -budget; v <= budget; ++v) {
        k[i] = v;
        rec(i + 1, budget - std::abs(v));
      }
      k[i] = 0;
    };
    rec(0, q.K);
  } else {
    // Shells |k|_1 = s, s = 1..K, from the last coordinate backwards.
    std::function<void(int, int)> rec = [&](int i, int left) {
      if (i < 0) {
        if (left == 0) consider();
        return;
      }
      for (int a = left; a >= 0; --a) {
        for (int sgn : {1, -1}) {
          if (a == 0 && sgn < 0) continue;
          k[i] = sgn * a;
          rec(i - 1, left - a);
        }
      }
      k[i] = 0;
    };
    for (int s = 1; s <= q.K; ++s) rec(q.m - 1, s);
  }
  best.resonant = best.value < q.delta;
  return best;
}

double occupation_fraction(const std::vector<double>& times, const std::vector<std::vector<double>>& actions,
                           const ResonanceQuery& q) {
  q.validate();
  if (times.size() != actions.size()) throw InvalidArgument("occupation_fraction: size mismatch");
  if (times.size() < 2) {
    if (times.empty()) return 0.0;
    return resonance_indicator(model_frequencies(actions[0], q.m), q).resonant ? 1.0 : 0.0;
  }
  std::vector<double> chi(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    chi[i] = resonance_indicator(model_frequencies(actions[i], q.m), q).resonant ? 1.0 : 0.0;
  }
  double in = 0.0, total = 0.0;
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const double h = times[i + 1] - times[i];
    in += 0.5 * h * (chi[i] + chi[i + 1]);
    total += h;
  }
  return total > 0.0 ? in / total : chi[0];
}

double occupation_fraction(const TrajectoryRecord& traj, const ResonanceQuery& q) {
  std::vector<std::size_t> cols;
  for (int n = 1; n <= q.m; ++n) {
    const auto it = std::find(traj.extra_columns.begin(), traj.extra_columns.end(), "I_" + std::to_string(n));
    if (it == traj.extra_columns.end()) throw InvalidArgument("occupation_fraction: trajectory lacks column I_" + std::to_string(n));
    cols.push_back(static_cast<std::size_t>(it - traj.extra_columns.begin()));
  }
  std::vector<std::vector<double>> I;
  for (const auto& row : traj.extras) {
    std::vector<double> r;
    for (auto c : cols) r.push_back(row[c]);
    I.push_back(std::move(r));
  }
  return occupation_fraction(traj.times, I, q);
}

double occupation_fraction(const EnsembleResult& r, const ResonanceQuery& q, bool use_proxy) {
  double s = 0.0;
  int count = 0;
  for (const auto& run : r.runs) {
    if (run.aborted) continue;
    const auto& rows = use_proxy ? run.proxy : run.actions;
    bool ok = rows.size() == r.taus.size();
    for (const auto& row : rows) ok = ok && static_cast<int>(row.size()) >= q.m;
    if (!ok) throw InvalidArgument("occupation_fraction: ensemble lacks actions I_1..I_m");
    s += occupation_fraction(r.taus, rows, q);
    ++count;
  }
  return count ? s / count : 0.0;
}

Observable action_observable(int n_max, const ActionOptions& opt) {
  Observable o;
  for (int n = 1; n <= n_max; ++n) o.columns.push_back("I_" + std::to_string(n));
  o.fn = [n_max, opt](const FourierField& u) {
    try {
      return actions(u, n_max, opt).I;
    } catch (const Error&) {
      return std::vector<double>(n_max, std::numeric_limits<double>::quiet_NaN());
    }
  };
  return o;
}

double tilde_norm(const std::vector<double>& I, double p) {
  double s = 0.0;
  for (std::size_t j = 0; j < I.size(); ++j) s += std::pow(kTwoPi * static_cast<double>(j + 1), 2 * p + 1) * std::abs(I[j]);
  return 2.0 * s;
}

// ---------------------------------------------------------------------------

std::vector<double> action_production(const FourierField& u, const PerturbationSpec& pert, const AveragingOptions& opt) {
  const auto w = perturbation_field(pert, u);
  if (pert.kind == PerturbationKind::none || sobolev_norm(w, 0.0) == 0.0) return std::vector<double>(opt.n_max, 0.0);
  if (!opt.finite_difference) {
    const auto s = periodic_spectrum(u, opt.n_max, opt.action.hill);
    return action_derivatives(u, s, w, opt.action);
  }
  ActionOptions fixed = opt.action;
  if (fixed.fixed_nodes == 0) fixed.fixed_nodes = 108;
  const double h = opt.fd_step * std::max(sobolev_norm(u, 0.0), 1e-300) / sobolev_norm(w, 0.0);
  const auto plus = actions(u + h * w, opt.n_max, fixed);
  const auto minus = actions(u - h * w, opt.n_max, fixed);
  std::vector<double> F(opt.n_max);
  for (int n = 0; n < opt.n_max; ++n) F[n] = (plus.I[n] - minus.I[n]) / (2.0 * h);
  return F;
}

AveragedRhs empirical_averaged_rhs(const FourierField& u, const PerturbationSpec& pert, const AveragingOptions& opt) {
  if (opt.n_max < 1) throw InvalidArgument("averaged rhs: n_max must be >= 1");
  if (!(opt.T_avg > 0.0) || !(opt.dt > 0.0)) throw InvalidArgument("averaged rhs: T_avg and dt must be positive");
  AveragedRhs out;
  const auto I0 = actions(u, opt.n_max, opt.action);
  out.hit = resonance_indicator(model_frequencies(I0.I, opt.query.m), opt.query);
  out.resonant = out.hit.resonant;

  int S = opt.snapshots;
  if (S <= 0) {
    // Resolve twice the model frequency of the highest action above 1e-8 of the largest.
    double top = 0.0;
    for (double x : I0.I) top = std::max(top, x);
    int j = 1;
    for (int n = 1; n <= opt.n_max; ++n) {
      if (I0.I[n - 1] > 1e-8 * top) j = n;
    }
    S = static_cast<int>(std::ceil(opt.T_avg * 2.0 * std::pow(kTwoPi * j, 3) / std::numbers::pi));
  }
  S = std::max(4, S + (S % 2));
  out.snapshots = S;

  std::vector<double> full(opt.n_max, 0.0), half(opt.n_max, 0.0);
  double wf = 0.0, wh = 0.0;
  KdvStepper st(u.modes(), u.grid_size(), opt.dt);
  auto c = u.exponential();
  const double h = opt.T_avg / S;
  for (int i = 1; i < S; ++i) {
    advance(st, c, h, opt.dt);
    const double s = static_cast<double>(i) / S;
    const double a = bump(s), b = i < S / 2 ? bump(2.0 * s) : 0.0;
    const auto F = action_production(FourierField::from_exponential(c, u.grid_size()), pert, opt);
    for (int n = 0; n < opt.n_max; ++n) {
      full[n] += a * F[n];
      half[n] += b * F[n];
    }
    wf += a;
    wh += b;
  }
  out.F.resize(opt.n_max);
  out.error.resize(opt.n_max);
  for (int n = 0; n < opt.n_max; ++n) {
    out.F[n] = full[n] / wf;
    out.error[n] = std::abs(out.F[n] - half[n] / wh);
  }
  return out;
}

AveragedCurve averaged_trajectory(const FourierField& u0, double eps, double T_slow, const PerturbationSpec& pert,
                                  const AveragedCurveOptions& opt) {
  if (!(eps > 0.0) || !(T_slow > 0.0)) throw InvalidArgument("averaged trajectory: eps and T_slow must be positive");
  if (opt.panels < 1 || !(opt.panel_growth >= 1.0)) throw InvalidArgument("averaged trajectory: bad panel layout");
  const int n_max = opt.averaging.n_max;
  std::vector<double> gx, gw;
  gauss_legendre(opt.nodes, gx, gw);

  std::vector<double> edges{0.0};
  {
    double unit = 0.0, w = 1.0;
    for (int p = 0; p < opt.panels; ++p, w *= opt.panel_growth) unit += w;
    w = T_slow / unit;
    for (int p = 0; p < opt.panels; ++p, w *= opt.panel_growth) edges.push_back(edges.back() + w);
    edges.back() = T_slow;
  }

  PerturbationSpec p = pert;
  p.epsilon = eps;
  KdvStepper st(u0.modes(), u0.grid_size(), opt.dt, p);
  auto c = u0.exponential();
  double tau = 0.0;
  auto state = [&] { return FourierField::from_exponential(c, u0.grid_size()); };
  auto move_to = [&](double target) {
    advance(st, c, (target - tau) / eps, opt.dt);
    tau = target;
  };

  AveragedCurve out;
  out.epsilon = eps;
  std::vector<double> J = actions(u0, n_max, opt.averaging.action).I;
  std::vector<double> err(n_max, 0.0);
  out.taus.push_back(0.0);
  out.J.push_back(J);
  out.err.push_back(err);
  out.I.push_back(J);
  out.deviation.push_back(0.0);

  // Only the perturbation direction matters for <F>; its size is carried by tau.
  PerturbationSpec unit = pert;
  unit.epsilon = 1.0;
  try {
    for (int k = 0; k < opt.panels; ++k) {
      const double a = edges[k], b = edges[k + 1], half = 0.5 * (b - a);
      for (int j = 0; j < opt.nodes; ++j) {
        move_to(a + half * (gx[j] + 1.0));
        const auto rep = state();
        if (spectral_tail_fraction(rep) > opt.tail_tol) {
          throw BlowUpError("representative left the certified resolution", tau);
        }
        const auto avg = empirical_averaged_rhs(rep, unit, opt.averaging);
        if (avg.resonant) ++out.resonant_nodes;
        for (int n = 0; n < n_max; ++n) {
          J[n] += half * gw[j] * avg.F[n];
          err[n] += half * gw[j] * avg.error[n];
        }
      }
      move_to(b);
      const auto I = actions(state(), n_max, opt.averaging.action).I;
      std::vector<double> d(n_max);
      for (int n = 0; n < n_max; ++n) d[n] = I[n] - J[n];
      out.taus.push_back(b);
      out.J.push_back(J);
      out.err.push_back(err);
      out.I.push_back(I);
      out.deviation.push_back(tilde_norm(d, 1.0));
      out.sup_deviation = std::max(out.sup_deviation, out.deviation.back());
    }
  } catch (const Error& e) {
    out.aborted = true;
    out.abort_reason = e.what();
  }
  out.error_band = tilde_norm(err, 1.0);
  return out;
}

// ---------------------------------------------------------------------------

GaussianMeasureSpec GaussianMeasureSpec::power_law(int modes, double amplitude, double exponent, double zeta_prime,
                                                   double p) {
  GaussianMeasureSpec s;
  s.law = "power";
  s.amplitude = amplitude;
  s.exponent = exponent;
  s.zeta_prime = zeta_prime;
  s.p = p;
  s.sigma.resize(std::max(modes, 0));
  for (int j = 1; j <= modes; ++j) s.sigma[j - 1] = amplitude * std::pow(static_cast<double>(j), exponent);
  return s;
}

void GaussianMeasureSpec::validate() const {
  if (sigma.empty()) throw InvalidArgument("gaussian measure: no modes");
  if (!(zeta_prime < -1.0)) throw InvalidArgument("gaussian measure: zeta' must be < -1");
  if (p < 0.0) throw InvalidArgument("gaussian measure: p must be >= 0");
  for (std::size_t j = 0; j < sigma.size(); ++j) {
    if (!(sigma[j] > 0.0) || !std::isfinite(sigma[j])) {
      throw InvalidArgument("gaussian measure: sigma_" + std::to_string(j + 1) + " must be positive");
    }
  }
  if (law == "power" && exponent < zeta_prime) {
    throw InvalidArgument("gaussian measure: power exponent below zeta' makes j^zeta'/sigma_j unbounded");
  }
  if (law != "power" && law != "explicit") throw InvalidArgument("gaussian measure: unknown law '" + law + "'");
}

double GaussianMeasureSpec::admissibility_ratio() const {
  double r = 0.0;
  for (std::size_t j = 0; j < sigma.size(); ++j) {
    r = std::max(r, std::pow(static_cast<double>(j + 1), zeta_prime) / sigma[j]);
  }
  return r;
}

double GaussianMeasureSpec::tail() const {
  if (law != "power") return 0.0;
  if (exponent >= -1.0) return std::numeric_limits<double>::infinity();
  const int K = modes(), J = K + 100000;
  double s = 0.0;
  for (int j = K + 1; j <= J; ++j) s += std::pow(static_cast<double>(j), exponent);
  s += std::pow(J + 0.5, exponent + 1.0) / -(exponent + 1.0);
  return amplitude * s;
}

double GaussianMeasureSpec::variance(int j) const {
  if (j < 1 || j > modes()) return 0.0;
  return sigma[j - 1] / std::pow(kTwoPi * j, 1.0 + 2.0 * p);
}

FourierField sample_gaussian(const GaussianMeasureSpec& spec, NoiseStream& rng, int grid_size) {
  const int K = spec.modes();
  std::vector<double> cs(K), sn(K);
  for (int j = 1; j <= K; ++j) {
    const double sd = std::sqrt(spec.variance(j));
    cs[j - 1] = sd * rng.normal();
    sn[j - 1] = sd * rng.normal();
  }
  return FourierField(std::move(cs), std::move(sn), grid_size > 0 ? grid_size : 4 * K);
}

DivergenceReport divergence_estimate(const PerturbationSpec& pert, const FourierField& u, int probe_modes, double h) {
  if (!(h > 0.0)) throw InvalidArgument("divergence: step must be positive");
  const int K = probe_modes > 0 ? std::min(probe_modes, u.modes()) : u.modes();
  PerturbationSpec p = pert;
  p.epsilon = 1.0;
  DivergenceReport rep;
  for (int k = 1; k <= K; ++k) {
    for (int sgn : {1, -1}) {
      const int idx = sgn * k;
      const double x = u[idx];
      const auto fp = perturbation_field(p, u.with_mode(idx, x + h));
      const auto fm = perturbation_field(p, u.with_mode(idx, x - h));
      const double d = (fp[idx] - fm[idx]) / (2.0 * h);
      if (!std::isfinite(d)) rep.finite = false;
      rep.divergence += d;
      ++rep.coordinates;
    }
  }
  return rep;
}

}  // namespace kdvlab
