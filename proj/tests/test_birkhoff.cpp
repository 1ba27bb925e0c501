#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kdvlab/birkhoff.hpp"
#include "kdvlab/error.hpp"

using namespace kdvlab;

namespace {

constexpr double kPi = std::numbers::pi;

// Independent route: I_n = (2/pi) * integral over the gap of arccosh(|Delta|/2),
// by adaptive Gauss-Legendre on lambda = m + r sin(theta).
double arccosh_action(const FourierField& u, int n, const HillSpectrum& s) {
  if (s.closed(n)) return 0.0;
  const double lo = s.lo(n), hi = s.hi(n), m = 0.5 * (lo + hi), r = 0.5 * (hi - lo);
  const Potential q(u);
  auto f = [&](double th) {
    const auto t = transfer(q, m + r * std::sin(th), false);
    const double b = std::max(t.gap_function(), 0.0);
    const double x = b / (2.0 * (std::abs(t.discriminant()) + 2.0));  // |Delta|/2 - 1
    return std::log1p(x + std::sqrt(x * (x + 2.0))) * r * std::cos(th);
  };
  // 5-point Gauss-Legendre on 40 panels.
  static const double xg[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
  static const double wg[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                               0.2369268850561891};
  const int panels = 40;
  const double h = kPi / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double c = -0.5 * kPi + (p + 0.5) * h;
    for (int i = 0; i < 5; ++i) sum += wg[i] * 0.5 * h * f(c + 0.5 * h * xg[i]);
  }
  return 2.0 / kPi * sum;
}

FourierField random_small(int K, unsigned seed, double h1, double decay = 3.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  FourierField f(K, 4 * K);
  for (int k = 1; k <= K; ++k) {
    const double s = std::pow(static_cast<double>(k), -decay);
    f = f.with_mode(k, s * g(rng)).with_mode(-k, s * g(rng));
  }
  return f * (h1 / sobolev_norm(f, 1.0));
}

FourierField two_mode(int K = 32) { return FourierField::from_modes(K, 4 * K, {{1, 0.2}, {-2, 0.1}}); }

}  // namespace

TEST_SUITE("birkhoff") {
  TEST_CASE("zero field has zero actions") {
    const auto I = actions(FourierField(8, 32), 5);
    for (double x : I.I) CHECK(x == 0.0);
    CHECK(I.truncation_estimate == 0.0);
    CHECK(percival_residual(FourierField(8, 32), I) == 0.0);
  }

  TEST_CASE("single mode: leading-order action and Percival") {
    const double a = 0.1;
    const auto u = FourierField::from_modes(32, 128, {{1, a}});
    const auto I = actions(u, 10);
    CHECK(std::abs(I.I[0] / (a * a / (4 * kPi)) - 1.0) < 0.05);
    CHECK(percival_residual(u, I) < 1e-4);
    for (int n = 1; n <= 10; ++n) CHECK(I.I[n - 1] >= 0.0);
    // Leading order also ties the action to the gap: I_1 ~ g_1^2 / (8 pi).
    CHECK(std::abs(I.I[0] / (I.gaps[0] * I.gaps[0] / (8 * kPi)) - 1.0) < 0.05);
  }

  TEST_CASE("action quadrature agrees with the arccosh form") {
    for (unsigned seed : {1u, 2u}) {
      const auto u = random_small(16, seed, 2.0);
      const auto s = periodic_spectrum(u, 5);
      for (int n = 1; n <= 5; ++n) {
        const double a = action(u, n, s).value, b = arccosh_action(u, n, s);
        CHECK(std::abs(a - b) <= 1e-8 * std::abs(b) + 1e-16);
      }
    }
  }

  TEST_CASE("Percival residual shrinks with n_max") {
    const auto u = random_small(32, 7, 1.0);
    double prev = 1e9;
    for (int n_max : {1, 2, 3, 4}) {
      const double r = percival_residual(u, n_max);
      CHECK(r < prev);
      prev = r;
    }
    CHECK(prev < 1e-3);
  }

  TEST_CASE("actions are invariant under translation and the flow") {
    const auto u = two_mode();
    const auto I0 = actions(u, 5);
    const auto It = actions(u.translated(0.3141), 5);
    for (int n = 1; n <= 5; ++n) CHECK(std::abs(It.I[n - 1] - I0.I[n - 1]) <= 1e-6 * I0.I[n - 1] + 1e-18);
    const auto v = evolve_to(u, 0.25, 2.5e-5);
    const auto Iv = actions(v, 5);
    for (int n = 1; n <= 3; ++n) CHECK(std::abs(Iv.I[n - 1] - I0.I[n - 1]) <= 1e-4 * I0.I[n - 1]);
  }

  TEST_CASE("directional derivative matches differences of actions") {
    const auto u = two_mode(16);
    const auto w = FourierField::from_modes(16, 64, {{1, 0.3}, {2, -0.2}, {-3, 0.5}});
    const auto s = periodic_spectrum(u, 3);
    ActionOptions fixed;
    fixed.fixed_nodes = 108;
    const double h = 1e-4;
    for (int n = 1; n <= 2; ++n) {
      const double d = action_derivative(u, n, s, w).value;
      const auto up = u + w * h, um = u - w * h;
      const double fd = (action(up, n, periodic_spectrum(up, 3), fixed).value -
                         action(um, n, periodic_spectrum(um, 3), fixed).value) / (2 * h);
      CHECK(std::abs(d - fd) <= 1e-5 * std::abs(d));
    }
  }

  TEST_CASE("angle proxy") {
    CHECK(angle_proxy(FourierField::from_modes(4, 12, {{1, 1.0}}), 1) == 0.0);
    CHECK(std::abs(angle_proxy(FourierField::from_modes(4, 12, {{-1, 1.0}}), 1) - kPi / 2) < 1e-15);
    CHECK_THROWS_AS(angle_proxy(FourierField(4, 12), 1), DomainError);
    CHECK_THROWS_AS(angle_proxy(FourierField::from_modes(4, 12, {{2, 1e-20}}), 2, 1e-15), DomainError);
  }

  TEST_CASE("linear rotation rate of the proxy") {
    for (int k : {1, 2}) {
      const auto u = FourierField::from_modes(8, 32, {{k, 1e-9}});
      const auto fe = frequency_estimate(u, k, 0.2, 1e-5);
      CHECK(std::abs(fe.W / std::pow(2 * kPi * k, 3) - 1.0) < 1e-8);
    }
  }

  TEST_CASE("frequency slope near the origin") {
    std::vector<double> Is, Ws;
    for (double target : {1e-4, 4e-4}) {
      double a = std::sqrt(4 * kPi * target);
      for (int it = 0; it < 3; ++it) a *= std::sqrt(target / actions(FourierField::from_modes(16, 64, {{1, a}}), 3).I[0]);
      const auto u = FourierField::from_modes(16, 64, {{1, a}});
      Is.push_back(actions(u, 3).I[0]);
      Ws.push_back(frequency_estimate(u, 1, 0.5, 1e-4).W);
    }
    const double slope = (Ws[1] - Ws[0]) / (Is[1] - Is[0]);
    CHECK(slope == doctest::Approx(-6.0).epsilon(0.05));
    CHECK(std::abs(Ws[0] - slope * Is[0] - std::pow(2 * kPi, 3)) < 1e-3);
  }

  TEST_CASE("f coordinate") {
    const FourierField zero(8, 32);
    const auto s0 = hill_spectrum(zero, 3);
    for (int n = 1; n <= 3; ++n) CHECK(std::abs(f_coordinate(zero, n, s0)) < 1e-9);
    const auto u = FourierField::from_modes(16, 64, {{1, 0.3}});
    const auto s = hill_spectrum(u, 5);
    for (int n = 1; n <= 5; ++n) CHECK(std::isfinite(f_coordinate(u, n, s)));
    const auto v = FourierField::from_modes(16, 64, {{1, 0.2}});
    const double f0 = f_coordinate(v, 1, hill_spectrum(v, 1));
    double prev = 1e9;
    for (double d : {1e-2, 1e-3, 1e-4}) {
      const auto w = v.with_mode(1, 0.2 + d);
      const double diff = std::abs(f_coordinate(w, 1, hill_spectrum(w, 1)) - f0);
      CHECK(diff < prev);
      prev = diff;
    }
    CHECK(prev < 1e-2);
  }

  TEST_CASE("moments") {
    ActionSpectrum I;
    I.n_max = 3;
    I.I = {0.5, 0.0, 0.0};
    for (int j : {-1, 1, 2, 3}) CHECK(std::abs(moment(I, j) - std::pow(2 * kPi, j) * 0.5) < 1e-14 * std::pow(2 * kPi, j));
    const auto m = moments(I);
    CHECK(m.index.size() == 4);
    I.I = {0.0, 0.0, 0.0};
    CHECK(moment(I, 3) == 0.0);
    // Quadratic part: P_3 ~ ||u_x||^2 / 2 for small u.
    const auto u = FourierField::from_modes(16, 64, {{1, 0.1}});
    const double half = 0.5 * std::pow(sobolev_norm(u, 1.0), 2);
    CHECK(std::abs(moment(actions(u, 5), 3) / half - 1.0) < 0.1);
    // Monotone in every action.
    ActionSpectrum J;
    J.n_max = 2;
    J.I = {0.1, 0.2};
    for (int j : {-1, 1, 2, 3}) {
      ActionSpectrum K = J;
      K.I[1] += 1e-3;
      CHECK(moment(K, j) > moment(J, j));
    }
  }

  TEST_CASE("V functional bounds") {
    CHECK(v_functional(FourierField(8, 32), 3).V == 0.0);
    const auto r = v_functional(two_mode(), 10);
    CHECK(r.V >= 0.0);
    CHECK(r.V <= r.bound8);
    // k^-5 decay keeps the P_3 truncation at n_max = 20 far below V.
    for (unsigned seed = 10; seed < 16; ++seed) {
      const auto u = random_small(32, seed, 0.4, 5.0);
      const auto v = v_functional(u, 20);
      CHECK(v.V >= -1e-8);
      CHECK(v.V <= v.bound8);
      CHECK(v.lower <= v.V);
      CHECK(v.V <= v.upper);
      // Near the origin V is 3 ||I||^2 to leading order.
      CHECK(v.V == doctest::Approx(3 * v.I2 * v.I2).epsilon(0.1));
    }
  }

  TEST_CASE("V is convex in I_1 along a single-mode family") {
    std::vector<double> I1, V;
    for (double a : {0.05, 0.1, 0.15, 0.2, 0.25}) {
      const auto u = FourierField::from_modes(32, 128, {{1, a}});
      const auto I = actions(u, 10);
      I1.push_back(I.I[0]);
      V.push_back(v_functional(u, I).V);
    }
    for (std::size_t i = 1; i + 1 < I1.size(); ++i) {
      const double s1 = (V[i] - V[i - 1]) / (I1[i] - I1[i - 1]);
      const double s2 = (V[i + 1] - V[i]) / (I1[i + 1] - I1[i]);
      CHECK(s2 - s1 >= -1e-8);
    }
  }

  TEST_CASE("Korotyaev envelope") {
    std::vector<FourierField> fam;
    for (double a : {0.1, 0.5, 1.0, 2.0}) fam.push_back(FourierField::from_modes(32, 128, {{1, a}}));
    const auto r1 = korotyaev_check(fam, 1, 12);
    CHECK(r1.finite);
    CHECK(r1.C > 0.0);
    CHECK(r1.C <= 2.0 * r1.C_without_last);
    const auto r0 = korotyaev_check({FourierField(4, 16)}, 2, 3);
    CHECK(r0.C == 0.0);
    // m = 0 is Percival's identity: |v|_0 = ||u||_0.
    const auto u = two_mode();
    CHECK(std::abs(birkhoff_norm(actions(u, 12), 0) / sobolev_norm(u, 0.0) - 1.0) < 1e-6);
  }

  TEST_CASE("quasilinearity probe") {
    const auto z = quasilinearity_probe(FourierField(16, 64), actions(FourierField(16, 64), 10), 2, 10);
    CHECK(z.passed);
    const auto u = FourierField::from_modes(32, 128, {{1, 0.3}});
    const auto r = quasilinearity_probe(u, actions(u, 10), 2, 10);
    CHECK(r.linear_tail_zero);
    CHECK(r.conclusive);
    CHECK(r.passed);
    // A smoother datum has a steeper difference tail.
    FourierField rough(32, 128), smooth(32, 128);
    for (int k = 1; k <= 32; ++k) {
      rough = rough.with_mode(k, 0.1 * std::pow(k, -3.0));
      smooth = smooth.with_mode(k, 0.1 * std::pow(k, -6.0));
    }
    const auto qr = quasilinearity_probe(rough, actions(rough, 10), 2, 10);
    const auto qs = quasilinearity_probe(smooth, actions(smooth, 10), 2, 10);
    CHECK(qr.conclusive);
    CHECK(qs.conclusive);
    CHECK(qr.passed);
    CHECK(qs.difference_exponent < qr.difference_exponent);
  }
}
