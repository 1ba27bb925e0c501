#include "kdvlab/stochastic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include "kdvlab/error.hpp"

namespace kdvlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double quantile_sorted(const std::vector<double>& s, double q) {
  if (s.empty()) return kNaN;
  const double pos = q * static_cast<double>(s.size() - 1);
  const std::size_t i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= s.size()) return s.back();
  const double f = pos - static_cast<double>(i);
  return s[i] + f * (s[i + 1] - s[i]);
}

QuantityStats summarize(const std::vector<const RealizationDigest*>& runs, std::size_t samples, std::size_t n,
                        const std::vector<double>& levels, bool proxy) {
  QuantityStats st;
  st.mean.assign(samples, kNaN);
  st.variance.assign(samples, kNaN);
  st.count.assign(samples, 0);
  st.quantiles.assign(levels.size(), std::vector<double>(samples, kNaN));
  for (std::size_t i = 0; i < samples; ++i) {
    std::vector<double> v;
    for (const auto* r : runs) {
      const auto& rows = proxy ? r->proxy : r->actions;
      if (i < rows.size() && n < rows[i].size() && std::isfinite(rows[i][n])) v.push_back(rows[i][n]);
    }
    st.count[i] = static_cast<int>(v.size());
    if (v.empty()) continue;
    std::sort(v.begin(), v.end());
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    st.mean[i] = m;
    st.variance[i] = v.size() > 1 ? var / static_cast<double>(v.size() - 1) : 0.0;
    for (std::size_t l = 0; l < levels.size(); ++l) st.quantiles[l][i] = quantile_sorted(v, levels[l]);
  }
  return st;
}

PerturbationSpec dissipation(double eps) {
  PerturbationSpec p;
  p.kind = PerturbationKind::dissipative;
  p.epsilon = eps;
  return p;
}

}  // namespace

NoiseSpec NoiseSpec::power_law(int modes, double amplitude, double decay, std::uint64_t seed) {
  NoiseSpec s;
  s.law = "power";
  s.amplitude = amplitude;
  s.decay = decay;
  s.seed = seed;
  s.b.resize(std::max(modes, 0));
  for (int j = 1; j <= modes; ++j) s.b[j - 1] = amplitude * std::pow(static_cast<double>(j), -decay);
  return s;
}

void NoiseSpec::validate() const {
  if (b.empty()) throw InvalidArgument("noise: no modes");
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (!(b[j] > 0.0) || !std::isfinite(b[j])) {
      throw InvalidArgument("noise: b_" + std::to_string(j + 1) + " must be positive and finite");
    }
  }
  if (law == "power") {
    if (!(decay > 1.5)) throw InvalidArgument("noise: power-law decay must exceed 3/2");
  } else if (law != "explicit") {
    throw InvalidArgument("noise: unknown law '" + law + "'");
  }
}

double NoiseSpec::forcing_mass() const {
  double s = 0.0;
  for (double x : b) s += 2.0 * x * x;
  return s;
}

double NoiseSpec::neglected_mass() const {
  if (law != "power" || !(decay > 0.5)) return 0.0;
  // sum_{j > K} j^{-2q}: direct terms, then the integral remainder.
  const double p = 2.0 * decay;
  const int K = modes();
  double s = 0.0;
  const int J = K + 10000;
  for (int j = K + 1; j <= J; ++j) s += std::pow(static_cast<double>(j), -p);
  s += std::pow(J + 0.5, 1.0 - p) / (p - 1.0);
  return 2.0 * amplitude * amplitude * s;
}

std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

FourierField noise_increment(const NoiseSpec& spec, double dt, NoiseStream& rng, int modes, int grid_size) {
  if (dt < 0.0) throw InvalidArgument("noise increment: dt must be >= 0");
  FourierField out(modes, grid_size);
  if (dt == 0.0) return out;
  std::vector<double> cs(modes, 0.0), sn(modes, 0.0);
  const double r = std::sqrt(dt);
  const int top = std::min(modes, spec.modes());
  for (int j = 1; j <= top; ++j) {
    cs[j - 1] = spec.b[j - 1] * r * rng.normal();
    sn[j - 1] = spec.b[j - 1] * r * rng.normal();
  }
  return FourierField(std::move(cs), std::move(sn), grid_size);
}

// ---------------------------------------------------------------------------

StochasticStepper::StochasticStepper(int modes, int grid_size, double dt, double eps, NoiseSpec spec, bool nonlinear)
    : det_(modes, grid_size, dt, dissipation(eps)),
      eps_(eps),
      spec_(std::move(spec)) {
  det_.set_nonlinear(nonlinear);
  if (eps > 0.0) spec_.validate();
  std_.assign(modes + 1, 0.0);
  if (eps == 0.0) return;
  for (int k = 1; k <= std::min(modes, spec_.modes()); ++k) {
    const double d = det_.damping(k);
    const double b2 = spec_.b[k - 1] * spec_.b[k - 1];
    // (1 - e^{-2 d h}) / (2 d), written with expm1 for small d h.
    const double g = d > 0.0 ? -std::expm1(-2.0 * d * dt) / (2.0 * d) : dt;
    std_[k] = std::sqrt(eps * b2 * g);
  }
}

double StochasticStepper::increment_std(int k) const {
  return k >= 1 && k < static_cast<int>(std_.size()) ? std_[k] : 0.0;
}

void StochasticStepper::step(std::vector<Complex>& c, NoiseStream& rng) {
  det_.step(c);
  if (eps_ == 0.0) return;
  const int top = std::min(det_.modes(), spec_.modes());
  const double inv = 1.0 / std::numbers::sqrt2;
  for (int k = 1; k <= top; ++k) {
    const double a = std_[k] * rng.normal();
    const double b = std_[k] * rng.normal();
    c[k] += Complex(a, -b) * inv;
  }
}

FourierField stochastic_step(const FourierField& u, double dt, double eps, const NoiseSpec& spec, NoiseStream& rng) {
  StochasticStepper s(u.modes(), u.grid_size(), dt, eps, spec);
  auto c = u.exponential();
  s.step(c, rng);
  return FourierField::from_exponential(c, u.grid_size());
}

double action_proxy(const FourierField& u, int j) {
  if (j < 1 || j > u.modes()) return 0.0;
  return (std::pow(u.cos_coeff(j), 2) + std::pow(u.sin_coeff(j), 2)) / (2.0 * kTwoPi * j);
}

// ---------------------------------------------------------------------------

void EnsembleResult::recompute() {
  std::vector<const RealizationDigest*> ok;
  for (const auto& r : runs) {
    if (!r.aborted) ok.push_back(&r);
  }
  completed = static_cast<int>(ok.size());
  valid = !runs.empty() && 5 * completed >= 4 * static_cast<int>(runs.size());
  std::size_t n_act = 0, n_proxy = 0;
  for (const auto* r : ok) {
    if (!r->actions.empty()) n_act = std::max(n_act, r->actions.front().size());
    if (!r->proxy.empty()) n_proxy = std::max(n_proxy, r->proxy.front().size());
  }
  action_stats.clear();
  proxy_stats.clear();
  for (std::size_t n = 0; n < n_act; ++n) action_stats.push_back(summarize(ok, taus.size(), n, quantile_levels, false));
  for (std::size_t n = 0; n < n_proxy; ++n) proxy_stats.push_back(summarize(ok, taus.size(), n, quantile_levels, true));
}

namespace {

RealizationDigest run_one(const FourierField& u0, double eps, const NoiseSpec& spec, const EnsembleOptions& opt,
                          std::uint64_t seed, int steps_per_sample, double h) {
  RealizationDigest d;
  d.seed = seed;
  NoiseStream rng(seed);
  StochasticStepper st(u0.modes(), u0.grid_size(), h, eps, spec, opt.nonlinear);
  const int n_proxy = std::max(opt.n_actions, 1);
  const double ceiling = opt.blowup_factor * std::max(sobolev_norm(u0, 1.0), 1.0);
  auto record = [&](const FourierField& u) {
    std::vector<double> act, prox, ang;
    if (opt.n_actions > 0) {
      try {
        const auto I = actions(u, opt.n_actions, opt.action);
        act = I.I;
      } catch (const Error&) {
        act.assign(opt.n_actions, kNaN);
      }
    }
    for (int j = 1; j <= n_proxy; ++j) prox.push_back(action_proxy(u, j));
    for (int m : opt.angle_modes) {
      try {
        ang.push_back(angle_proxy(u, m));
      } catch (const DomainError&) {
        ang.push_back(kNaN);
      }
    }
    d.actions.push_back(std::move(act));
    d.proxy.push_back(std::move(prox));
    d.angles.push_back(std::move(ang));
    d.l2.push_back(u.l2_norm_squared());
    d.h1.push_back(std::pow(sobolev_norm(u, 1.0), 2));
  };
  auto c = u0.exponential();
  const bool dense = opt.angle_every > 0;
  if (dense) d.dense_angles.resize(opt.angle_modes.size());
  auto dense_record = [&] {
    for (std::size_t m = 0; m < opt.angle_modes.size(); ++m) {
      const int k = opt.angle_modes[m];
      float a = std::numeric_limits<float>::quiet_NaN();
      if (k >= 1 && k < static_cast<int>(c.size()) && c[k] != Complex{}) {
        // u_k = sqrt2 Re c_k, u_{-k} = -sqrt2 Im c_k.
        double phi = std::atan2(-c[k].imag(), c[k].real());
        if (phi < 0.0) phi += kTwoPi;
        a = static_cast<float>(phi);
      }
      d.dense_angles[m].push_back(a);
    }
  };
  record(u0);
  if (dense) dense_record();
  long step_count = 0;
  for (int i = 1; i <= opt.samples; ++i) {
    for (int s = 0; s < steps_per_sample; ++s) {
      st.step(c, rng);
      if (dense && ++step_count % opt.angle_every == 0) dense_record();
    }
    const auto u = FourierField::from_exponential(c, u0.grid_size());
    const double n1 = sobolev_norm(u, 1.0);
    if (!std::isfinite(n1) || n1 > ceiling) {
      d.aborted = true;
      d.abort_reason = "norm ceiling exceeded at sample " + std::to_string(i);
      d.final_state = u;
      return d;
    }
    record(u);
  }
  d.final_state = FourierField::from_exponential(c, u0.grid_size());
  return d;
}

}  // namespace

EnsembleResult ensemble(const FourierField& u0, double eps, const NoiseSpec& spec, const EnsembleOptions& opt) {
  if (!(eps > 0.0)) throw InvalidArgument("ensemble: epsilon must be positive");
  if (opt.realizations < 1) throw InvalidArgument("ensemble: need at least one realization");
  if (opt.samples < 1 || !(opt.T_slow > 0.0) || !(opt.dt > 0.0)) {
    throw InvalidArgument("ensemble: samples, T_slow and dt must be positive");
  }
  spec.validate();
  const double T = opt.T_slow / eps;
  const int per = std::max(1, static_cast<int>(std::ceil(T / (opt.samples * opt.dt))));
  const double h = T / (static_cast<double>(per) * opt.samples);

  EnsembleResult r;
  r.epsilon = eps;
  r.angle_modes = opt.angle_modes;
  if (opt.angle_every > 0) r.dense_dt = h * opt.angle_every;
  r.neglected_forcing = spec.neglected_mass();
  for (int i = 0; i <= opt.samples; ++i) r.taus.push_back(opt.T_slow * i / opt.samples);
  r.runs.resize(opt.realizations);

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < opt.realizations; i = next++) {
      r.runs[i] = run_one(u0, eps, spec, opt, split_seed(spec.seed, static_cast<std::uint64_t>(i)), per, h);
    }
  };
  unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(opt.realizations));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  r.recompute();
  return r;
}

double law_distance(const EnsembleResult& a, const EnsembleResult& b, int n, bool use_proxy) {
  const auto& sa = use_proxy ? a.proxy_stats : a.action_stats;
  const auto& sb = use_proxy ? b.proxy_stats : b.action_stats;
  if (n < 1 || n > static_cast<int>(sa.size()) || n > static_cast<int>(sb.size())) {
    throw InvalidArgument("law_distance: index out of range");
  }
  if (a.taus.size() != b.taus.size()) throw InvalidArgument("law_distance: different sample grids");
  const auto& qa = sa[n - 1].quantiles;
  const auto& qb = sb[n - 1].quantiles;
  double d = 0.0;
  for (std::size_t l = 0; l < std::min(qa.size(), qb.size()); ++l) {
    for (std::size_t i = 0; i < a.taus.size(); ++i) {
      if (std::isfinite(qa[l][i]) && std::isfinite(qb[l][i])) d = std::max(d, std::abs(qa[l][i] - qb[l][i]));
    }
  }
  return d;
}

AngleReport angle_histogram(const std::vector<double>& angles, const std::vector<double>& weights, int bins) {
  if (bins < 1) throw InvalidArgument("angle histogram: bins must be >= 1");
  if (angles.size() != weights.size()) throw InvalidArgument("angle histogram: size mismatch");
  AngleReport rep;
  rep.histogram.assign(bins, 0.0);
  double total = 0.0, used = 0.0, sum_w2 = 0.0;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const double w = weights[i];
    if (w < 0.0 || !std::isfinite(w)) throw InvalidArgument("angle histogram: weights must be finite and >= 0");
    total += w;
    if (!std::isfinite(angles[i])) continue;
    double a = std::fmod(angles[i], kTwoPi);
    if (a < 0.0) a += kTwoPi;
    const int b = std::min(bins - 1, static_cast<int>(a / kTwoPi * bins));
    rep.histogram[b] += w;
    used += w;
    sum_w2 += w * w;
    ++rep.samples;
  }
  rep.excluded_mass = total > 0.0 ? (total - used) / total : 0.0;
  if (used > 0.0) {
    for (double& x : rep.histogram) x /= used;
    for (double x : rep.histogram) rep.tv += 0.5 * std::abs(x - 1.0 / bins);
    // Kish effective size for the weighted sample.
    const double n_eff = used * used / sum_w2;
    rep.noise_floor = 0.5 * std::sqrt(2.0 * (bins - 1) / (std::numbers::pi * n_eff));
  }
  return rep;
}

std::vector<double> uniform_weight(const EnsembleResult& r) {
  const std::size_t s = r.taus.size();
  std::vector<double> f(s, 0.0);
  if (s < 2) return std::vector<double>(s, 1.0);
  const double T = r.taus.back() - r.taus.front();
  for (std::size_t i = 0; i < s; ++i) f[i] = 1.0 / T;
  return f;
}

AngleReport angle_equidistribution(const EnsembleResult& r, int n, const std::vector<double>& f, int bins) {
  const auto it = std::find(r.angle_modes.begin(), r.angle_modes.end(), n);
  if (it == r.angle_modes.end()) throw InvalidArgument("angle equidistribution: mode not recorded");
  const std::size_t m = static_cast<std::size_t>(it - r.angle_modes.begin());
  if (f.size() != r.taus.size()) throw InvalidArgument("angle equidistribution: weight not on the slow grid");
  std::vector<double> angles, weights;
  if (r.dense_dt > 0.0) {
    const double T = r.taus.back(), dtau = r.epsilon * r.dense_dt;
    auto f_at = [&](double tau) {
      const auto hi = std::upper_bound(r.taus.begin(), r.taus.end(), tau);
      if (hi == r.taus.begin()) return f.front();
      if (hi == r.taus.end()) return f.back();
      const std::size_t j = static_cast<std::size_t>(hi - r.taus.begin());
      const double s = (tau - r.taus[j - 1]) / (r.taus[j] - r.taus[j - 1]);
      return (1.0 - s) * f[j - 1] + s * f[j];
    };
    for (const auto& run : r.runs) {
      if (run.aborted || m >= run.dense_angles.size()) continue;
      const auto& series = run.dense_angles[m];
      for (std::size_t k = 0; k < series.size(); ++k) {
        const double tau = static_cast<double>(k) * dtau;
        if (tau > T * (1.0 + 1e-12)) break;
        const bool end = k == 0 || k + 1 == series.size();
        angles.push_back(series[k]);
        weights.push_back((end ? 0.5 : 1.0) * dtau * f_at(tau));
      }
    }
    return angle_histogram(angles, weights, bins);
  }
  // Trapezoid weights in tau times f.
  std::vector<double> w(r.taus.size(), 0.0);
  for (std::size_t i = 0; i + 1 < r.taus.size(); ++i) {
    const double h = r.taus[i + 1] - r.taus[i];
    w[i] += 0.5 * h * f[i];
    w[i + 1] += 0.5 * h * f[i + 1];
  }
  for (const auto& run : r.runs) {
    if (run.aborted) continue;
    for (std::size_t i = 0; i < run.angles.size() && i < w.size(); ++i) {
      angles.push_back(run.angles[i][m]);
      weights.push_back(w[i]);
    }
  }
  return angle_histogram(angles, weights, bins);
}

}  // namespace kdvlab
