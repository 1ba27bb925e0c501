#include "kdvlab/hill.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/tools/toms748_solve.hpp>
#include <boost/numeric/odeint.hpp>

#include "kdvlab/fft.hpp"

#include "kdvlab/error.hpp"

namespace kdvlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::atomic<bool> g_flip_discriminant{false};

namespace odeint = boost::numeric::odeint;

template <std::size_t D>
using State = std::array<double, D>;

template <std::size_t D>
struct HillRhs {
  const Potential* q;
  double lambda;
  const Potential* dir = nullptr;  // variation direction; nullptr means d/dlambda
  void operator()(const State<D>& s, State<D>& ds, double x) const {
    const double w = (*q)(x) - lambda;
    // (y1, y1', y2, y2') and, for D = 8, their lambda-derivatives.
    ds[0] = s[1];
    ds[1] = w * s[0];
    ds[2] = s[3];
    ds[3] = w * s[2];
    if constexpr (D == 8) {
      const double f = dir == nullptr ? -1.0 : (*dir)(x);
      ds[4] = s[5];
      ds[5] = w * s[4] + f * s[0];
      ds[6] = s[7];
      ds[7] = w * s[6] + f * s[2];
    }
  }
};

template <std::size_t D>
State<D> initial_state() {
  State<D> s{};
  s[0] = 1.0;
  s[3] = 1.0;
  return s;
}

double initial_step(double lambda) { return 0.05 / (1.0 + std::sqrt(std::abs(lambda))); }

template <std::size_t D>
void integrate(const Potential& q, double lambda, State<D>& s, double x0, double x1,
               const HillOptions& opt, const Potential* dir = nullptr) {
  try {
    if (opt.fixed_steps > 0) {
      // Same step sequence for every lambda: the result is a smooth function of lambda.
      const int n = std::max(1, static_cast<int>(std::ceil(opt.fixed_steps * (x1 - x0))));
      odeint::integrate_n_steps(odeint::runge_kutta_fehlberg78<State<D>>(), HillRhs<D>{&q, lambda, dir}, s, x0,
                                (x1 - x0) / n, n);
    } else {
      auto stepper = odeint::make_controlled(opt.atol, opt.rtol, odeint::runge_kutta_fehlberg78<State<D>>());
      odeint::integrate_adaptive(stepper, HillRhs<D>{&q, lambda, dir}, s, x0, x1, initial_step(lambda));
    }
  } catch (const std::exception& e) {
    throw IntegrationError(std::string("Hill ODE integration failed: ") + e.what(), lambda);
  }
  for (double v : s) {
    if (!std::isfinite(v)) throw IntegrationError("Hill ODE produced non-finite values", lambda);
  }
}

TransferData pack(double lambda, const double* s, bool with_d) {
  TransferData t;
  t.lambda = lambda;
  t.y1 = s[0];
  t.y1p = s[1];
  t.y2 = s[2];
  t.y2p = s[3];
  if (with_d) {
    t.has_dlambda = true;
    t.dy1 = s[4];
    t.dy1p = s[5];
    t.dy2 = s[6];
    t.dy2p = s[7];
  }
  return t;
}

double signed_discriminant(const TransferData& t) {
  return g_flip_discriminant.load(std::memory_order_relaxed) ? -t.discriminant() : t.discriminant();
}

double signed_discriminant_dot(const TransferData& t) {
  return g_flip_discriminant.load(std::memory_order_relaxed) ? -t.discriminant_dot()
                                                             : t.discriminant_dot();
}

// toms748 on [a, b] with f(a), f(b) of opposite sign (or one of them zero).
template <class F>
double solve_bracketed(F&& f, double a, double b, double fa, double fb) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  std::uintmax_t iters = 200;
  const auto tol = [](double lo, double hi) {
    return std::abs(hi - lo) <= 4.0 * std::numeric_limits<double>::epsilon() *
                                     std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  };
  const auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
  return 0.5 * (r.first + r.second);
}

struct ScanPoint {
  double lambda, delta, ddelta;
};

std::string describe_scan(const std::vector<ScanPoint>& scan) {
  std::ostringstream os;
  os.precision(10);
  os << "scan (lambda, Delta, Delta'):";
  const std::size_t stride = std::max<std::size_t>(1, scan.size() / 120);
  for (std::size_t i = 0; i < scan.size(); i += stride) {
    os << " (" << scan[i].lambda << ", " << scan[i].delta << ", " << scan[i].ddelta << ")";
  }
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

Potential::Potential(const FourierField& u, double shift) : shift_(shift), sup_bound_(0.0) {
  const auto c = u.exponential();
  double total = 0.0;
  for (std::size_t k = 1; k < c.size(); ++k) total += std::abs(c[k]);
  sup_bound_ = 2.0 * total;
  std::size_t last = 0;
  for (std::size_t k = 1; k < c.size(); ++k) {
    if (std::abs(c[k]) > 1e-18 * total) last = k;
  }
  c_.assign(last, Complex{});
  for (std::size_t k = 1; k <= last; ++k) c_[k - 1] = 2.0 * c[k];
}

void Potential::tabulate(int points) {
  if (points < 2 * static_cast<int>(c_.size()) + 2) throw InvalidArgument("tabulate: too few points");
  std::vector<Complex> c(c_.size() + 1);
  for (std::size_t k = 0; k < c_.size(); ++k) c[k + 1] = 0.5 * c_[k];
  table_.assign(points, 0.0);
  RealTransform(points).to_grid(c, table_);
}

double Potential::operator()(double x) const {
  if (c_.empty()) return shift_;
  if (!table_.empty()) {
    const double n = static_cast<double>(table_.size());
    const double s = x * n, r = std::nearbyint(s);
    if (std::abs(s - r) < 1e-7) {
      long j = static_cast<long>(r) % static_cast<long>(table_.size());
      if (j < 0) j += static_cast<long>(table_.size());
      return table_[j] + shift_;
    }
  }
  const Complex z = std::polar(1.0, kTwoPi * x);
  Complex acc = c_.back();
  for (std::size_t i = c_.size() - 1; i-- > 0;) acc = acc * z + c_[i];
  return (acc * z).real() + shift_;
}

TransferData transfer(const Potential& q, double lambda, bool with_dlambda, const HillOptions& opt) {
  if (!std::isfinite(lambda)) throw IntegrationError("non-finite spectral parameter", lambda);
  if (with_dlambda) {
    auto s = initial_state<8>();
    integrate<8>(q, lambda, s, 0.0, 1.0, opt);
    return pack(lambda, s.data(), true);
  }
  auto s = initial_state<4>();
  integrate<4>(q, lambda, s, 0.0, 1.0, opt);
  return pack(lambda, s.data(), false);
}

TransferData transfer_variation(const Potential& q, const Potential& w, double lambda, const HillOptions& opt) {
  if (!std::isfinite(lambda)) throw IntegrationError("non-finite spectral parameter", lambda);
  auto s = initial_state<8>();
  integrate<8>(q, lambda, s, 0.0, 1.0, opt, &w);
  return pack(lambda, s.data(), true);
}

TransferData transfer(const FourierField& u, double lambda, bool with_dlambda, const HillOptions& opt) {
  return transfer(Potential(u), lambda, with_dlambda, opt);
}

std::vector<TransferData> transfer_path(const Potential& q, double lambda, std::span<const double> xs,
                                        const HillOptions& opt) {
  std::vector<TransferData> out;
  auto s = initial_state<4>();
  double x = 0.0;
  for (double xi : xs) {
    if (xi < x) throw InvalidArgument("transfer_path: points must be nondecreasing in [0, 1]");
    if (xi > x) integrate<4>(q, lambda, s, x, xi, opt);
    x = xi;
    out.push_back(pack(lambda, s.data(), false));
  }
  return out;
}

DiscriminantValue discriminant(const Potential& q, double lambda, const HillOptions& opt) {
  const auto t = transfer(q, lambda, true, opt);
  return {signed_discriminant(t), signed_discriminant_dot(t)};
}

DiscriminantValue discriminant(const FourierField& u, double lambda, const HillOptions& opt) {
  return discriminant(Potential(u), lambda, opt);
}

// ---------------------------------------------------------------------------

HillSpectrum periodic_spectrum(const FourierField& u, int n_max, const HillOptions& opt, double shift) {
  if (n_max < 1) throw InvalidArgument("n_max must be >= 1");
  const Potential q(u, shift);
  const double bound = q.sup_bound();
  const double lam_lo = shift - bound - 1.0;

  auto eval = [&](double l) {
    const auto t = transfer(q, l, true, opt);
    return ScanPoint{l, signed_discriminant(t), signed_discriminant_dot(t)};
  };
  auto gap_fn = [&](double l) {
    return transfer(q, l, false, opt).gap_function();
  };

  std::vector<ScanPoint> scan;
  std::vector<double> crit;
  std::string failure;
  const double s_top = std::sqrt(std::pow((n_max + 0.5) * kPi, 2) + bound) / kPi;
  const double s_bottom = std::sqrt(bound + 1.0) / kPi;

  for (int refine : {4, 16, 64}) {
    scan.clear();
    crit.clear();
    scan.push_back(eval(lam_lo));
    // Points at shift + sign(s) (s pi)^2 with s offset by half a step, so the
    // free-operator critical points n^2 pi^2 never fall on the scan.
    const double ds = 1.0 / refine;
    for (double s = (std::floor(-s_bottom / ds) + 0.5) * ds; s <= s_top; s += ds) {
      const double l = shift + (s < 0 ? -1.0 : 1.0) * (s * kPi) * (s * kPi);
      if (l <= lam_lo) continue;
      scan.push_back(eval(l));
    }
    for (std::size_t i = 1; i < scan.size() && static_cast<int>(crit.size()) < n_max; ++i) {
      const auto& a = scan[i - 1];
      const auto& b = scan[i];
      if ((a.ddelta < 0) != (b.ddelta < 0)) {
        crit.push_back(solve_bracketed([&](double l) { return eval(l).ddelta; }, a.lambda, b.lambda,
                                       a.ddelta, b.ddelta));
      }
    }
    if (static_cast<int>(crit.size()) < n_max) {
      failure = "found " + std::to_string(crit.size()) + " critical points of Delta, expected " +
                std::to_string(n_max);
      continue;
    }
    bool parity_ok = true;
    for (int n = 1; n <= n_max; ++n) {
      const double d = eval(crit[n - 1]).delta;
      if ((d > 0) != (n % 2 == 0) || std::abs(d) < 1.0) {
        parity_ok = false;
        std::ostringstream os;
        os.precision(12);
        os << "critical point " << n << " at lambda = " << crit[n - 1] << " has Delta = " << d
           << " (expected sign " << (n % 2 == 0 ? "+" : "-") << ")";
        failure = os.str();
        break;
      }
    }
    if (parity_ok) {
      failure.clear();
      break;
    }
  }
  if (!failure.empty()) throw SpectrumError("periodic_spectrum: " + failure + "; " + describe_scan(scan));

  HillSpectrum out;
  out.n_max = n_max;
  out.shift = shift;
  out.options = opt;
  out.critical = crit;
  out.lambda.assign(2 * n_max + 1, 0.0);
  out.gaps.assign(n_max, 0.0);

  for (int n = 1; n <= n_max; ++n) {
    const double c = crit[n - 1];
    const double b_c = gap_fn(c);
    const double left_limit = n == 1 ? lam_lo : crit[n - 2];
    const double right_limit = n == n_max ? c + (2 * n + 1) * kPi * kPi : crit[n];
    double lo = c, hi = c;
    if (b_c > 0.0) {
      const double h0 = 1.5 * n * kPi * std::sqrt(b_c) + 1e-12 * (1.0 + std::abs(c));
      auto edge = [&](double dir, double limit) {
        double h = std::min(h0, 0.25 * std::abs(limit - c));
        double x = c + dir * h;
        double bx = gap_fn(x);
        while (bx >= 0.0) {
          h *= 2.0;
          x = c + dir * h;
          if ((dir < 0 && x <= limit) || (dir > 0 && x >= limit)) {
            std::ostringstream os;
            os.precision(12);
            os << "periodic_spectrum: edge search for gap " << n << " left its window around lambda = " << c;
            throw SpectrumError(os.str());
          }
          bx = gap_fn(x);
        }
        return dir < 0 ? solve_bracketed(gap_fn, x, c, bx, b_c) : solve_bracketed(gap_fn, c, x, b_c, bx);
      };
      lo = edge(-1.0, left_limit);
      hi = edge(+1.0, right_limit);
    }
    const double g = hi - lo;
    const double snap = opt.closed_gap_tol * (1.0 + n * n * kPi * kPi);
    if (g < snap) {
      const double mid = b_c > 0.0 ? 0.5 * (lo + hi) : c;
      lo = hi = mid;
    }
    out.lambda[2 * n - 1] = lo;
    out.lambda[2 * n] = hi;
    out.gaps[n - 1] = hi - lo;
  }

  // lambda_0: the single root of Delta - 2 below the first critical point.
  auto dm2 = [&](double l) { return eval(l).delta - 2.0; };
  const double f_lo = scan.front().delta - 2.0;
  const double f_c = dm2(crit[0]);
  if (!(f_lo > 0.0 && f_c < 0.0)) {
    throw SpectrumError("periodic_spectrum: lambda_0 is not bracketed below the first gap; " +
                        describe_scan(scan));
  }
  out.lambda[0] = solve_bracketed(dm2, lam_lo, crit[0], f_lo, f_c);

  for (int j = 1; j <= 2 * n_max; ++j) {
    if (out.lambda[j] < out.lambda[j - 1]) {
      throw SpectrumError("periodic_spectrum: ordering violated at index " + std::to_string(j));
    }
  }
  return out;
}

std::vector<double> gap_lengths(const HillSpectrum& s) {
  std::vector<double> g(s.n_max);
  for (int n = 1; n <= s.n_max; ++n) {
    g[n - 1] = std::max(0.0, s.hi(n) - s.lo(n));
    if (g[n - 1] < s.options.closed_gap_tol * (1.0 + n * n * kPi * kPi)) g[n - 1] = 0.0;
  }
  return g;
}

std::vector<double> dirichlet_spectrum(const FourierField& u, int n_max, double z,
                                       const HillSpectrum* periodic, const HillOptions& opt,
                                       double shift) {
  HillSpectrum local;
  if (periodic == nullptr || periodic->n_max < n_max) {
    local = periodic_spectrum(u, n_max, opt, shift);
    periodic = &local;
  }
  const double zr = z - std::floor(z);
  const Potential q(zr == 0.0 ? u : u.translated(zr), shift);
  auto y2 = [&](double l) { return transfer(q, l, false, opt).y2; };

  std::vector<double> mu(n_max);
  for (int n = 1; n <= n_max; ++n) {
    const double lo = periodic->lo(n);
    const double hi = periodic->hi(n);
    const double band_left = lo - periodic->lambda[2 * n - 2];
    const double band_right =
        n < periodic->n_max ? periodic->lambda[2 * n + 1] - hi : (2 * n + 1) * kPi * kPi;
    const double d = 0.25 * std::min(band_left, band_right);
    const double a = lo - d, b = hi + d;
    const double fa = y2(a), fb = y2(b);
    if ((fa < 0) == (fb < 0) && fa != 0.0 && fb != 0.0) {
      std::ostringstream os;
      os.precision(12);
      os << "dirichlet_spectrum: no sign change of y2 around gap " << n << " [" << a << ", " << b
         << "], y2 = " << fa << ", " << fb;
      throw SpectrumError(os.str());
    }
    double m = solve_bracketed(y2, a, b, fa, fb);
    const double slack = opt.interlace_tol * (1.0 + std::abs(m));
    if (m < lo - slack || m > hi + slack) {
      std::ostringstream os;
      os.precision(15);
      os << "dirichlet_spectrum: interlacing violated for n = " << n << ": mu = " << m << " outside ["
         << lo << ", " << hi << "]";
      throw SpectrumError(os.str());
    }
    mu[n - 1] = std::clamp(m, lo, hi);
  }
  return mu;
}

HillSpectrum hill_spectrum(const FourierField& u, int n_max, double z, const HillOptions& opt,
                           double shift) {
  HillSpectrum s = periodic_spectrum(u, n_max, opt, shift);
  s.z = z - std::floor(z);
  s.mu = dirichlet_spectrum(u, n_max, z, &s, opt, shift);
  return s;
}

TraceReconstruction trace_reconstruct(const FourierField& u, int n_max, std::span<const double> z_grid,
                                      const HillOptions& opt, double shift) {
  const HillSpectrum s = periodic_spectrum(u, n_max, opt, shift);
  TraceReconstruction out;
  out.values.reserve(z_grid.size());
  for (double z : z_grid) {
    const auto mu = dirichlet_spectrum(u, n_max, z, &s, opt, shift);
    double acc = s.lambda[0];
    double first = 0.0, last = 0.0;
    for (int j = 1; j <= n_max; ++j) {
      const double term = s.lo(j) + s.hi(j) - 2.0 * mu[j - 1];
      acc += term;
      if (j == 1) first = std::abs(term);
      last = std::abs(term);
    }
    out.values.push_back(acc);
    out.truncation_estimate = std::max(out.truncation_estimate, last);
    if (n_max > 1 && last > 1e-3 * std::max(first, 1e-300) && last > 1e-12) out.resolved = false;
  }
  return out;
}

double product_representation(const HillSpectrum& s, double l) {
  double p = 4.0 * (s.lambda[0] - l);
  for (int n = 1; n <= s.n_max; ++n) {
    const double n4 = std::pow(n * kPi, 4);
    p *= (s.hi(n) - l) * (s.lo(n) - l) / n4;
  }
  return p;
}

// ---------------------------------------------------------------------------

FourierField functional_gradient_fd(const Functional& F, const FourierField& u, double h, bool richardson) {
  if (!(h > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  auto quotient = [&](int signed_k, double step) {
    const double base = u[signed_k];
    const double fp = F(u.with_mode(signed_k, base + step));
    const double fm = F(u.with_mode(signed_k, base - step));
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw DomainError("functional is not finite along direction " + std::to_string(signed_k));
    }
    return (fp - fm) / (2.0 * step);
  };
  FourierField g(u.modes(), u.grid_size());
  for (int k = 1; k <= u.modes(); ++k) {
    for (int sk : {k, -k}) {
      double d = quotient(sk, h);
      if (richardson) d = (4.0 * quotient(sk, 0.5 * h) - d) / 3.0;
      g = g.with_mode(sk, d);
    }
  }
  return g;
}

double gardner_bracket(const FourierField& grad_f, const FourierField& grad_g) {
  if (grad_f.modes() != grad_g.modes()) throw InvalidArgument("gradients have different cutoffs");
  double s = 0.0;
  for (int k = 1; k <= grad_f.modes(); ++k) {
    s += kTwoPi * k * (grad_f.sin_coeff(k) * grad_g.cos_coeff(k) - grad_f.cos_coeff(k) * grad_g.sin_coeff(k));
  }
  return s;
}

namespace fault_injection {
void flip_discriminant_sign(bool on) { g_flip_discriminant.store(on); }
bool discriminant_sign_flipped() { return g_flip_discriminant.load(); }
}  // namespace fault_injection

}  // namespace kdvlab
