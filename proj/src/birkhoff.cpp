#include "kdvlab/birkhoff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/tools/toms748_solve.hpp>

#include "kdvlab/error.hpp"

namespace kdvlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

void check_gap_index(const HillSpectrum& s, int n) {
  if (n < 1 || n > s.n_max) {
    throw InvalidArgument("gap index " + std::to_string(n) + " outside 1.." + std::to_string(s.n_max));
  }
}

// Midpoint rule on theta in (-pi/2, pi/2) with node tripling (old nodes are
// reused). `g(theta)` is the transformed integrand.
template <class G>
ActionValue nested_midpoint(G&& g, const ActionOptions& opt, double noise_rel = 0.0) {
  ActionValue out;
  if (opt.fixed_nodes > 0) {
    double sum = 0.0;
    const double h = kPi / opt.fixed_nodes;
    for (int i = 0; i < opt.fixed_nodes; ++i) sum += g(-0.5 * kPi + (i + 0.5) * h);
    out.value = sum * h;
    out.nodes = opt.fixed_nodes;
    return out;
  }
  int m = std::max(opt.min_nodes, 1);
  double h = kPi / m;
  double sum = 0.0;
  for (int i = 0; i < m; ++i) sum += g(-0.5 * kPi + (i + 0.5) * h);
  double prev = sum * h;
  double prev_change = -1.0;
  while (true) {
    const int m3 = 3 * m;
    if (m3 > opt.max_nodes) {
      throw SpectrumError("action quadrature did not converge with " + std::to_string(m) + " nodes");
    }
    const double h3 = kPi / m3;
    // New nodes sit at offsets 1/6 and 5/6 of each old cell.
    for (int i = 0; i < m; ++i) {
      const double left = -0.5 * kPi + i * h;
      sum += g(left + h3 * 0.5) + g(left + h3 * 2.5);
    }
    m = m3;
    h = h3;
    const double cur = sum * h;
    const double change = std::abs(cur - prev);
    out.value = cur;
    out.error = change;
    out.nodes = m;
    if (change <= std::max(opt.rtol, noise_rel) * std::abs(cur) || change <= opt.atol) return out;
    // Roundoff floor: refinement stopped helping after an accurate step.
    if (prev_change >= 0.0 && change >= prev_change && prev_change <= 1e-6 * std::abs(prev)) {
      out.value = prev;
      out.error = prev_change;
      out.nodes = m / 3;
      return out;
    }
    prev_change = change;
    prev = cur;
  }
}

int gap_sign(int n) { return n % 2 == 0 ? 1 : -1; }

// Gap n re-resolved in a fixed-step model of the transfer matrix. Within the
// model Delta is analytic in lambda, so the transformed integrands are smooth
// and the midpoint rule converges geometrically; the edges are the zeros of
// Delta^2 - 4 in the same model.
struct GapModel {
  double lo = 0.0, hi = 0.0;
  bool resolved = false;
  double center = 0.0;  ///< Delta^2 - 4 at the midpoint in the model
  /// Relative accuracy attainable in double precision: Delta^2 - 4 carries an
  /// absolute rounding error of a few ulps, against `center`.
  double noise() const { return center > 0.0 ? 4.0 * std::numeric_limits<double>::epsilon() / center : 0.0; }
  HillOptions hill;
  double mid() const { return 0.5 * (lo + hi); }
  double radius() const { return 0.5 * (hi - lo); }
};

// Highest mode carrying a non-negligible part of sum |u_k|.
int effective_bandwidth(const FourierField& u) {
  double total = 0.0;
  for (int k = 1; k <= u.modes(); ++k) total += std::abs(u.cos_coeff(k)) + std::abs(u.sin_coeff(k));
  int last = 0;
  for (int k = 1; k <= u.modes(); ++k) {
    if (std::abs(u.cos_coeff(k)) + std::abs(u.sin_coeff(k)) > 1e-13 * total) last = k;
  }
  return last;
}

// Smallest 2^a 3^b 5^c >= n.
int smooth_size(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int r = m;
    for (int p : {2, 3, 5}) while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

// RKF78 stage abscissae are multiples of 1/108 of a step.
constexpr int kStageGrid = 108;

// Fixes the step count and tabulates q (and w) at the stage abscissae.
GapModel gap_model(const FourierField& u, Potential& q, const HillSpectrum& s, int n, const ActionOptions& opt,
                   Potential* w = nullptr) {
  GapModel g;
  g.hill = opt.hill;
  // Steps resolve both the oscillation sqrt(lambda) and the potential's own bandwidth.
  const double top = std::abs(s.hi(n) - q.shift()) + q.sup_bound() + 1.0;
  const int by_lambda = static_cast<int>(std::ceil(std::sqrt(top) / 0.08));
  const int by_potential = static_cast<int>(std::ceil(kTwoPi * effective_bandwidth(u) / 0.3));
  g.hill.fixed_steps = smooth_size(std::max({64, by_lambda, by_potential}));
  q.tabulate(kStageGrid * g.hill.fixed_steps);
  if (w) w->tabulate(kStageGrid * g.hill.fixed_steps);
  auto B = [&](double l) { return transfer(q, l, false, g.hill).gap_function(); };
  const double m = 0.5 * (s.lo(n) + s.hi(n));
  const double fm = B(m);
  g.center = fm;
  g.lo = s.lo(n);
  g.hi = s.hi(n);
  if (!(fm > 0.0)) return g;
  const auto tol = [](double a, double b) {
    return std::abs(b - a) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max({1.0, std::abs(a), std::abs(b)});
  };
  // dir = -1: left edge, +1: right edge.
  auto edge = [&](double start, int dir) {
    std::uintmax_t iters = 200;  // in/out for toms748
    double a = start, fa = B(a);
    if (fa > 0.0) {
      double d = 1e-13 * (1.0 + std::abs(start));
      double inner = a, finner = fa;
      for (int i = 0; i < 200 && fa > 0.0; ++i) {
        inner = a;
        finner = fa;
        a = start + dir * d;
        fa = B(a);
        d *= 2.0;
      }
      if (fa > 0.0) throw SpectrumError("gap " + std::to_string(n) + ": edge not bracketed in the fixed-step model");
      const auto r = dir < 0 ? boost::math::tools::toms748_solve(B, a, inner, fa, finner, tol, iters)
                             : boost::math::tools::toms748_solve(B, inner, a, finner, fa, tol, iters);
      return 0.5 * (r.first + r.second);
    }
    if (fa == 0.0) return a;
    const auto r = dir < 0 ? boost::math::tools::toms748_solve(B, a, m, fa, fm, tol, iters)
                           : boost::math::tools::toms748_solve(B, m, a, fm, fa, tol, iters);
    return 0.5 * (r.first + r.second);
  };
  g.lo = edge(s.lo(n), -1);
  g.hi = edge(s.hi(n), +1);
  g.resolved = g.hi > g.lo;
  return g;
}

}  // namespace

ActionValue action(const FourierField& u, int n, const HillSpectrum& s, const ActionOptions& opt) {
  check_gap_index(s, n);
  if (s.closed(n)) return {};
  Potential q(u, s.shift);
  const GapModel gm = gap_model(u, q, s, n, opt);
  const double m = gm.mid(), r = gm.radius();
  if (!gm.resolved) {
    // Gap below the model's resolution: Delta ~ sigma (2 + k (r^2 - (l - m)^2)) gives I = r sqrt(|Delta(m)| - 2).
    const auto t = transfer(q, m, false, gm.hill);
    ActionValue out;
    out.value = r * std::sqrt(std::max(std::abs(t.discriminant()) - 2.0, 0.0));
    out.unresolved = true;
    return out;
  }
  const int sigma = gap_sign(n);
  auto g = [&](double th) {
    const double x = r * std::sin(th);
    const auto t = transfer(q, m + x, true, gm.hill);
    const double b = t.gap_function();
    if (!(b > 0.0)) return 0.0;
    // (lambda - m) Delta' dlambda / sqrt(Delta^2 - 4) with dlambda = r cos(theta) dtheta.
    return -sigma * x * t.discriminant_dot() * r * std::cos(th) / std::sqrt(b);
  };
  ActionValue v;
  try {
    v = nested_midpoint(g, opt, gm.noise());
  } catch (const SpectrumError& e) {
    throw SpectrumError(std::string(e.what()) + " in gap " + std::to_string(n));
  }
  v.value *= 2.0 / kPi;
  v.error *= 2.0 / kPi;
  if (v.value < 0.0) {
    const double noise = std::max({10.0 * v.error, opt.atol, 1e-12 * r * r});
    if (-v.value > noise) {
      throw SpectrumError("negative action " + std::to_string(v.value) + " in gap " + std::to_string(n));
    }
    v.value = 0.0;
    v.clamped = true;
  }
  return v;
}

ActionValue action_derivative(const FourierField& u, int n, const HillSpectrum& s, const FourierField& w,
                              const ActionOptions& opt) {
  check_gap_index(s, n);
  if (s.closed(n)) return {};
  Potential q(u, s.shift), dir(w);
  const GapModel gm = gap_model(u, q, s, n, opt, &dir);
  if (!gm.resolved) return {};
  const double m = gm.mid(), r = gm.radius();
  const int sigma = gap_sign(n);
  auto g = [&](double th) {
    const auto t = transfer_variation(q, dir, m + r * std::sin(th), gm.hill);
    const double b = t.gap_function();
    if (!(b > 0.0)) return 0.0;
    return sigma * (t.dy1 + t.dy2p) * r * std::cos(th) / std::sqrt(b);
  };
  ActionValue v;
  try {
    v = nested_midpoint(g, opt, gm.noise());
  } catch (const SpectrumError& e) {
    throw SpectrumError(std::string(e.what()) + " in gap " + std::to_string(n));
  }
  v.value *= 2.0 / kPi;
  v.error *= 2.0 / kPi;
  return v;
}

// ---------------------------------------------------------------------------

double ActionSpectrum::weighted_sum(double power) const {
  double s = 0.0;
  for (std::size_t i = 0; i < I.size(); ++i) s += std::pow(kTwoPi * static_cast<double>(i + 1), power) * I[i];
  return s;
}

double ActionSpectrum::weighted_tail(double power) const {
  if (I.empty() || truncation_estimate == 0.0) return 0.0;
  if (!std::isfinite(truncation_estimate)) return truncation_estimate;
  const double q = tail_ratio;
  const double last = I.back();
  double s = 0.0, term = last;
  for (int j = n_max + 1; j < n_max + 100000; ++j) {
    term *= q;
    const double t = std::pow(kTwoPi * j, power) * term;
    s += t;
    if (t < 1e-17 * s) break;
  }
  return s;
}

ActionSpectrum actions(const FourierField& u, const HillSpectrum& s, const ActionOptions& opt) {
  ActionSpectrum out;
  out.n_max = s.n_max;
  out.gaps = s.gaps;
  out.I.resize(s.n_max);
  for (int n = 1; n <= s.n_max; ++n) {
    const auto v = action(u, n, s, opt);
    out.I[n - 1] = v.value;
    if (v.clamped) ++out.clamped;
  }
  const int nm = s.n_max;
  if (nm >= 1 && out.I[nm - 1] == 0.0) {
    out.truncation_estimate = 0.0;
  } else if (nm >= 2 && out.I[nm - 2] > 0.0) {
    const double q = out.I[nm - 1] / out.I[nm - 2];
    out.tail_ratio = q;
    out.truncation_estimate = q < 1.0 ? out.I[nm - 1] * q / (1.0 - q) : std::numeric_limits<double>::infinity();
  } else {
    out.truncation_estimate = std::numeric_limits<double>::infinity();
  }
  return out;
}

ActionSpectrum actions(const FourierField& u, int n_max, const ActionOptions& opt) {
  return actions(u, periodic_spectrum(u, n_max, opt.hill), opt);
}

std::vector<double> action_derivatives(const FourierField& u, const HillSpectrum& s, const FourierField& w,
                                       const ActionOptions& opt) {
  std::vector<double> out(s.n_max);
  for (int n = 1; n <= s.n_max; ++n) out[n - 1] = action_derivative(u, n, s, w, opt).value;
  return out;
}

double percival_residual(const FourierField& u, const ActionSpectrum& I) {
  const double norm2 = u.l2_norm_squared();
  if (norm2 == 0.0) return 0.0;
  return std::abs(2.0 * I.weighted_sum(1.0) - norm2) / norm2;
}

double percival_residual(const FourierField& u, int n_max, const ActionOptions& opt) {
  return percival_residual(u, actions(u, n_max, opt));
}

double angle_proxy(const FourierField& u, int n, double floor) {
  if (n < 1 || n > u.modes()) throw InvalidArgument("angle_proxy: mode " + std::to_string(n) + " not retained");
  const double a = u.cos_coeff(n), b = u.sin_coeff(n);
  if (std::abs(a) <= floor && std::abs(b) <= floor) {
    throw DomainError("angle of mode " + std::to_string(n) + " undefined: both coefficients below the floor");
  }
  double t = std::atan2(b, a);
  if (t < 0.0) t += kTwoPi;
  if (t >= kTwoPi) t = 0.0;
  return t;
}

double f_coordinate(const FourierField& u, int n, const HillSpectrum& s, const HillOptions& opt) {
  check_gap_index(s, n);
  std::vector<double> mu = s.mu;
  if (static_cast<int>(mu.size()) < n) mu = dirichlet_spectrum(u, n, s.z, &s, opt, s.shift);
  const FourierField v = s.z == 0.0 ? u : u.translated(s.z);
  const auto t = transfer(Potential(v, s.shift), mu[n - 1], false, opt);
  const double arg = gap_sign(n) * t.y2p;
  if (!(arg > 0.0)) {
    throw DomainError("f_" + std::to_string(n) + ": (-1)^n y2'(1, mu_n) = " + std::to_string(arg) + " is not positive");
  }
  return 2.0 * std::log(arg);
}

double moment(const ActionSpectrum& I, int j) { return I.weighted_sum(j); }

MomentSet moments(const ActionSpectrum& I, const std::vector<int>& js) {
  MomentSet m;
  for (int j : js) {
    m.index.push_back(j);
    m.value.push_back(moment(I, j));
    m.tail.push_back(I.weighted_tail(j));
  }
  return m;
}

VReport v_functional(const FourierField& u, const ActionSpectrum& I) {
  VReport r;
  r.H = hamiltonian(u);
  r.P_minus1 = moment(I, -1);
  r.P1 = moment(I, 1);
  r.P3 = moment(I, 3);
  r.tail = I.weighted_tail(3);
  r.V = r.P3 - r.H;
  double s2 = 0.0;
  for (double x : I.I) s2 += x * x;
  r.I2 = std::sqrt(s2);
  r.bound8 = 8.0 * r.P1 * r.P_minus1;
  const double sq = std::sqrt(r.P_minus1);
  r.lower = (kPi / 10.0) * s2 / (1.0 + 2.0 * sq);
  r.upper = (512.0 * std::sqrt(1.0 + sq) * r.P_minus1 * r.P_minus1 + 6.0 * kPi * std::exp(0.5 * sq) * r.I2) * r.I2;
  return r;
}

VReport v_functional(const FourierField& u, int n_max, const ActionOptions& opt) {
  return v_functional(u, actions(u, n_max, opt));
}

double birkhoff_norm(const ActionSpectrum& I, int m) {
  return std::sqrt(2.0 * I.weighted_sum(2.0 * m + 1.0));
}

KorotyaevReport korotyaev_check(const std::vector<FourierField>& family, int m, int n_max, const ActionOptions& opt) {
  if (m < 0) throw InvalidArgument("korotyaev_check: m must be >= 0");
  KorotyaevReport rep;
  rep.m = m;
  const double expo = 2.0 * (m + 2) / 3.0;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const auto& u = family[i];
    const double un = sobolev_norm(u, m);
    double c = 0.0;
    if (un > 0.0) {
      const double v = birkhoff_norm(actions(u, n_max, opt), m);
      c = v / (un * std::pow(1.0 + un, expo));
    }
    if (!std::isfinite(c)) rep.finite = false;
    rep.constants.push_back(c);
    rep.C = std::max(rep.C, c);
    if (i + 1 < family.size()) rep.C_without_last = std::max(rep.C_without_last, c);
  }
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

// Smooth bump on [0, 1] and its derivative.
double bump(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return std::exp(-1.0 / (s * (1.0 - s)));
}
double bump_dot(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  const double d = s * (1.0 - s);
  return bump(s) * (1.0 - 2.0 * s) / (d * d);
}

// Weighted mean of dphi/dt over [t0, t0 + T] computed as -int phi w' / int w.
double weighted_rate(const std::vector<double>& t, const std::vector<double>& phi, std::size_t count) {
  const double t0 = t.front(), T = t[count - 1] - t0;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i + 1 < count; ++i) {
    const double h = t[i + 1] - t[i];
    const double sa = (t[i] - t0) / T, sb = (t[i + 1] - t0) / T;
    num += 0.5 * h * (phi[i] * bump_dot(sa) + phi[i + 1] * bump_dot(sb)) / T;
    den += 0.5 * h * (bump(sa) + bump(sb));
  }
  return -num / den;
}

}  // namespace

FrequencyEstimate frequency_estimate(const FourierField& u0, int n, double T_obs, double dt, int sample_every) {
  if (!(T_obs > 0.0)) throw InvalidArgument("frequency_estimate: T_obs must be positive");
  if (n < 1 || n > u0.modes()) throw InvalidArgument("frequency_estimate: mode not retained");
  EvolveOptions eo;
  eo.sample_every = sample_every;
  eo.angle_modes = {n};
  const auto rec = evolve(u0, T_obs, dt > 0.0 ? dt : 1e-4, {}, eo);
  if (rec.aborted) throw DomainError("frequency_estimate: " + rec.abort_reason);
  std::vector<double> phi = rec.angles[0];
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (!std::isfinite(phi[i])) {
      throw DomainError("angle proxy of mode " + std::to_string(n) + " undefined at t = " + std::to_string(rec.times[i]));
    }
    if (i > 0) {
      double d = phi[i] - phi[i - 1];
      d -= kTwoPi * std::round(d / kTwoPi);
      phi[i] = phi[i - 1] + d;
    }
  }
  if (phi.size() < 8) throw InvalidArgument("frequency_estimate: too few samples");
  FrequencyEstimate fe;
  fe.samples = static_cast<int>(phi.size());
  // The proxy turns clockwise in the (u_n, u_{-n}) plane: W = -dphi/dt.
  fe.W = -weighted_rate(rec.times, phi, phi.size());
  fe.W_half = -weighted_rate(rec.times, phi, phi.size() / 2 + 1);
  return fe;
}

// ---------------------------------------------------------------------------

namespace {

// Least-squares slope of log(y) against log(j) over entries with y > floor.
std::pair<double, int> power_fit(const std::vector<int>& j, const std::vector<double>& y, double floor) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int k = 0;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!(y[i] > floor)) continue;
    const double x = std::log(j[i]), z = std::log(y[i]);
    sx += x; sy += z; sxx += x * x; sxy += x * z;
    ++k;
  }
  if (k < 2) return {std::numeric_limits<double>::quiet_NaN(), k};
  const double d = k * sxx - sx * sx;
  return {(k * sxy - sx * sy) / d, k};
}

}  // namespace

QuasilinearityReport quasilinearity_probe(const FourierField& u, const ActionSpectrum& I, int j_lo, int j_hi,
                                          double floor) {
  if (j_lo < 1 || j_hi < j_lo) throw InvalidArgument("quasilinearity_probe: bad mode range");
  QuasilinearityReport r;
  for (int j = j_lo; j <= j_hi; ++j) {
    if (j > I.n_max) break;
    r.modes.push_back(j);
    const double lin = j <= u.modes() ? std::pow(u.cos_coeff(j), 2) + std::pow(u.sin_coeff(j), 2) : 0.0;
    const double nl = 2.0 * kTwoPi * j * I.I[j - 1];
    r.linear.push_back(lin);
    r.nonlinear.push_back(nl);
    r.difference.push_back(std::abs(nl - lin));
  }
  const auto [le, ln] = power_fit(r.modes, r.linear, floor);
  const auto [de, dn] = power_fit(r.modes, r.difference, floor);
  r.linear_exponent = le;
  r.difference_exponent = de;
  r.linear_tail_zero = ln == 0;
  if (dn == 0) {
    // The difference vanishes on the whole range.
    r.passed = true;
    return r;
  }
  if (!r.linear_tail_zero && ln < 3) {
    r.conclusive = false;
    return r;
  }
  if (r.difference.back() < floor && r.difference.front() >= floor) {
    // The difference drops below the floor inside the range and stays there:
    // faster than any power.
    bool stays = true;
    std::size_t first_zero = 0;
    while (r.difference[first_zero] >= floor) ++first_zero;
    for (std::size_t i = first_zero; i < r.difference.size(); ++i) stays = stays && r.difference[i] < floor;
    if (stays) {
      r.difference_exponent = -std::numeric_limits<double>::infinity();
      r.passed = true;
      return r;
    }
  }
  if (dn < 3) {
    r.conclusive = false;
    return r;
  }
  r.passed = r.linear_tail_zero ? de <= -1.0 : de <= le - 1.0;
  return r;
}

}  // namespace kdvlab
