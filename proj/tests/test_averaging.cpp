#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "kdvlab/averaging.hpp"
#include "kdvlab/error.hpp"

using namespace kdvlab;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

PerturbationSpec channel(PerturbationKind k, double eps = 1.0) {
  PerturbationSpec p;
  p.kind = k;
  p.epsilon = eps;
  return p;
}

// Exhaustive search over the box [-K, K]^2, filtered to the l1 ball.
double brute_min(double w1, double w2, int K) {
  double best = std::numeric_limits<double>::infinity();
  for (int a = -K; a <= K; ++a) {
    for (int b = -K; b <= K; ++b) {
      if ((a == 0 && b == 0) || std::abs(a) + std::abs(b) > K) continue;
      best = std::min(best, std::abs(a * w1 + b * w2));
    }
  }
  return best;
}

}  // namespace

TEST_SUITE("averaging") {
  TEST_CASE("first-order frequency model") {
    ActionSpectrum I;
    I.n_max = 3;
    I.I = {0.0, 0.0, 0.0};
    const auto W0 = frequency_vector(I, 3);
    for (int n = 1; n <= 3; ++n) CHECK(W0[n - 1] == doctest::Approx(std::pow(kTwoPi * n, 3)).epsilon(1e-15));
    I.I[0] = 0.01;
    CHECK(frequency_vector(I, 1)[0] == doctest::Approx(std::pow(kTwoPi, 3) - 0.06).epsilon(1e-15));
  }

  TEST_CASE("empirical frequency shift matches the model") {
    const auto u = FourierField::from_modes(16, 64, {{1, 0.05}});
    const auto I = actions(u, 2);
    const double shift = frequency_vector_empirical(u, 1, 1.0, 1e-4)[0] - std::pow(kTwoPi, 3);
    CHECK(shift == doctest::Approx(-6.0 * I.I[0]).epsilon(0.05));
  }

  TEST_CASE("resonance enumeration") {
    const std::vector<double> free{std::pow(kTwoPi, 3), std::pow(2 * kTwoPi, 3), std::pow(3 * kTwoPi, 3)};
    const auto hit = resonance_indicator(free, {1e-9, 3, 9});
    CHECK(hit.resonant);
    CHECK(hit.k[0] + 8 * hit.k[1] + 27 * hit.k[2] == 0);
    // The shortest integer relation among 1, 8, 27 has |k|_1 = 7, e.g. (-3, -3, 1).
    CHECK(resonance_indicator(free, {1e-9, 3, 7}).resonant);
    CHECK(!resonance_indicator(free, {1e-9, 3, 6}).resonant);
    const std::vector<double> W{1.0, std::sqrt(2.0)};
    const auto nr = resonance_indicator(W, {1e-3, 2, 5});
    CHECK(!nr.resonant);
    CHECK(nr.value == doctest::Approx(brute_min(1.0, std::sqrt(2.0), 5)).epsilon(1e-15));
    CHECK(resonance_indicator(W, {std::numeric_limits<double>::infinity(), 2, 1}).resonant);
    CHECK_THROWS_AS(resonance_indicator(W, {0.0, 2, 1}), InvalidArgument);
    // Two enumeration orders agree.
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> U(0.5, 3.0);
    for (int t = 0; t < 50; ++t) {
      const std::vector<double> w{U(g), U(g), U(g)};
      const ResonanceQuery q{0.05, 3, 4};
      const auto a = resonance_indicator(w, q, LatticeOrder::lexicographic);
      const auto b = resonance_indicator(w, q, LatticeOrder::by_shell);
      CHECK(a.resonant == b.resonant);
      CHECK(a.value == b.value);
    }
  }

  TEST_CASE("occupation fraction is monotone") {
    // Actions sweeping W_2 / W_1 through rational ratios.
    std::vector<double> t;
    std::vector<std::vector<double>> I;
    for (int i = 0; i <= 400; ++i) {
      t.push_back(0.01 * i);
      I.push_back({3.0 * i, 0.0});
    }
    double prev = -1.0;
    for (double d : {1e-6, 1e-2, 1.0, 10.0, 100.0}) {
      const double f = occupation_fraction(t, I, {d, 2, 9});
      CHECK(f >= prev);
      CHECK(f >= 0.0);
      CHECK(f <= 1.0);
      prev = f;
    }
    CHECK(occupation_fraction(t, I, {1e300, 2, 9}) == 1.0);
    // Below |k|_1 = 9 the free ratio 8 is not reachable.
    CHECK(occupation_fraction(t, I, {1e-12, 2, 7}) == 0.0);
    CHECK(occupation_fraction(t, I, {1e-9, 2, 9}) > 0.0);
    CHECK(occupation_fraction(t, I, {10.0, 2, 3}) <= occupation_fraction(t, I, {10.0, 2, 9}));
  }

  TEST_CASE("occupation along a recorded trajectory") {
    EvolveOptions o;
    o.sample_every = 50;
    o.extras = {action_observable(2)};
    const auto rec = evolve(FourierField::from_modes(16, 64, {{1, 0.1}}), 0.01, 1e-4, {}, o);
    CHECK(occupation_fraction(rec, {1e300, 2, 3}) == 1.0);
    CHECK(occupation_fraction(rec, {1.0, 2, 3}) == 0.0);
  }

  TEST_CASE("averaged action production") {
    AveragingOptions o;
    o.n_max = 3;
    o.T_avg = 0.05;
    o.snapshots = 16;
    const auto u = FourierField::from_modes(16, 64, {{1, 0.05}});
    const auto none = empirical_averaged_rhs(u, channel(PerturbationKind::none), o);
    for (double x : none.F) CHECK(x == 0.0);
    // Leading order: each action decays at twice the damping rate of its mode.
    const auto I = actions(u, 3);
    const auto d = empirical_averaged_rhs(u, channel(PerturbationKind::dissipative), o);
    CHECK(!d.resonant);
    CHECK(d.F[0] == doctest::Approx(-2.0 * kTwoPi * kTwoPi * I.I[0]).epsilon(1e-4));
    CHECK(d.error[0] <= 1e-5 * std::abs(d.F[0]));
  }

  TEST_CASE("exact and differenced production agree") {
    AveragingOptions o;
    o.n_max = 2;
    const auto u = FourierField::from_modes(16, 64, {{1, 0.2}, {-2, 0.1}});
    for (auto k : {PerturbationKind::dissipative, PerturbationKind::smoothing_map}) {
      o.finite_difference = false;
      const auto a = action_production(u, channel(k), o);
      o.finite_difference = true;
      const auto b = action_production(u, channel(k), o);
      for (int n = 0; n < 2; ++n) CHECK(a[n] == doctest::Approx(b[n]).epsilon(1e-5));
    }
  }

  TEST_CASE("window doubling shrinks the fluctuation") {
    const auto u = FourierField::from_modes(16, 64, {{1, 0.2}, {-2, 0.1}});
    const auto p = channel(PerturbationKind::dissipative);
    AveragingOptions o;
    o.n_max = 2;
    // Instantaneous spread along the orbit.
    double lo = 1e300, hi = -1e300;
    for (int i = 0; i < 12; ++i) {
      const auto F = action_production(evolve_to(u, 0.0021 * i, 1e-4), p, o);
      lo = std::min(lo, F[0]);
      hi = std::max(hi, F[0]);
    }
    o.T_avg = 0.4;
    o.snapshots = 0;
    const double ref = empirical_averaged_rhs(u, p, o).F[0];
    std::vector<double> dev;
    for (double T : {0.025, 0.05}) {
      o.T_avg = T;
      dev.push_back(std::abs(empirical_averaged_rhs(u, p, o).F[0] - ref));
    }
    MESSAGE("spread " << hi - lo << " deviations " << dev[0] << " " << dev[1]);
    CHECK(dev[0] < 1e-2 * (hi - lo));
    CHECK(dev[1] <= 0.5 * dev[0]);
  }

  TEST_CASE("averaged trajectory without perturbation is constant") {
    AveragedCurveOptions o;
    o.averaging.n_max = 2;
    o.averaging.T_avg = 0.02;
    o.averaging.snapshots = 4;
    o.panels = 2;
    o.nodes = 1;
    o.dt = 1e-3;
    const auto u = FourierField::from_modes(16, 64, {{1, 0.1}});
    const auto c = averaged_trajectory(u, 0.1, 0.01, channel(PerturbationKind::none), o);
    REQUIRE(!c.aborted);
    for (const auto& J : c.J) CHECK(J == c.J.front());
    CHECK(c.sup_deviation < 1e-5 * tilde_norm(c.J.front(), 1.0));
  }

  TEST_CASE("Gaussian measure sampling") {
    auto spec = GaussianMeasureSpec::power_law(6, 1.0, -2.0, -2.0, 1.0);
    spec.validate();
    CHECK(spec.admissibility_ratio() == doctest::Approx(1.0));
    CHECK(spec.tail() == doctest::Approx(std::pow(std::numbers::pi, 2) / 6 - 1 - 0.25 - 1.0 / 9 - 1.0 / 16 - 1.0 / 25 - 1.0 / 36).epsilon(1e-8));
    NoiseStream rng(77);
    const int M = 10000;
    std::vector<double> s1(6, 0.0);
    for (int i = 0; i < M; ++i) {
      const auto u = sample_gaussian(spec, rng);
      for (int j = 1; j <= 6; ++j) s1[j - 1] += u.cos_coeff(j) * u.cos_coeff(j);
    }
    for (int j = 1; j <= 6; ++j) {
      const double v = s1[j - 1] / M, e = spec.variance(j);
      CHECK(std::abs(v - e) < 3.0 * e * std::sqrt(2.0 / M));
    }
    GaussianMeasureSpec zero = spec;
    std::fill(zero.sigma.begin(), zero.sigma.end(), 0.0);
    CHECK(sample_gaussian(zero, rng) == FourierField(6, 24));
    CHECK_THROWS_AS(zero.validate(), InvalidArgument);
    CHECK_THROWS_AS(GaussianMeasureSpec::power_law(4, 1.0, -3.0, -2.0).validate(), InvalidArgument);
  }

  TEST_CASE("divergence of the perturbation channels") {
    NoiseStream rng(5);
    const auto spec = GaussianMeasureSpec::power_law(16, 1.0, -2.0);
    const auto u = sample_gaussian(spec, rng) * 10.0;
    auto f = channel(PerturbationKind::external_force);
    f.force = FourierField::from_modes(16, 64, {{1, 1.0}, {-3, 0.5}});
    CHECK(divergence_estimate(f, u).divergence == 0.0);
    double expected = 0.0;
    for (int k = 1; k <= 16; ++k) expected -= 2.0 * std::pow(kTwoPi * k, 2);
    CHECK(divergence_estimate(channel(PerturbationKind::dissipative), u).divergence ==
          doctest::Approx(expected).epsilon(1e-6));
    auto s = channel(PerturbationKind::smoothing_map);
    s.kernel_decay = 0.5;
    const double d16 = divergence_estimate(s, u).divergence;
    const double d32 = divergence_estimate(s, u.resized(32, 128)).divergence;
    CHECK(std::isfinite(d16));
    CHECK(std::abs(d32 - d16) < 1e-6 * (1.0 + std::abs(d16)));
  }
}
