#include <doctest.h>

#include <cmath>
#include <numbers>

#include "kdvlab/error.hpp"
#include "kdvlab/stochastic.hpp"

using namespace kdvlab;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Sample variance with its standard error for a zero-mean Gaussian sample.
struct VarianceEstimate {
  double value, se;
};
VarianceEstimate sample_variance(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  const double var = s / static_cast<double>(x.size());
  return {var, var * std::sqrt(2.0 / static_cast<double>(x.size()))};
}

}  // namespace

TEST_SUITE("stochastic") {
  TEST_CASE("noise increment moments and reproducibility") {
    const auto spec = NoiseSpec::power_law(4, 0.5, 2.0, 7);
    NoiseStream z(1);
    CHECK(noise_increment(spec, 0.0, z, 4, 16) == FourierField(4, 16));
    const double dt = 0.01;
    NoiseStream rng(split_seed(7, 0));
    std::vector<double> c1, s3;
    for (int i = 0; i < 100000; ++i) {
      const auto d = noise_increment(spec, dt, rng, 4, 16);
      c1.push_back(d.cos_coeff(1));
      s3.push_back(d.sin_coeff(3));
    }
    const auto v1 = sample_variance(c1), v3 = sample_variance(s3);
    const double e1 = 0.25 * dt, e3 = std::pow(0.5 / 9.0, 2) * dt;
    CHECK(std::abs(v1.value - e1) < 3 * v1.se);
    CHECK(std::abs(v3.value - e3) < 3 * v3.se);
    NoiseStream a(11), b(11), c(12);
    const auto da = noise_increment(spec, dt, a, 4, 16);
    CHECK(da == noise_increment(spec, dt, b, 4, 16));
    CHECK(!(da == noise_increment(spec, dt, c, 4, 16)));
    CHECK(split_seed(7, 0) != split_seed(7, 1));
  }

  TEST_CASE("noise spec validation and mass") {
    NoiseSpec bad;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad.b = {1.0, 0.0};
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    CHECK_THROWS_AS(NoiseSpec::power_law(4, 1.0, 1.0).validate(), InvalidArgument);
    const auto s = NoiseSpec::power_law(8, 1.0, 2.0);
    s.validate();
    // sum over j = +-1.. of j^-4 is 2 zeta(4) = pi^4 / 45.
    CHECK(s.forcing_mass() + s.neglected_mass() == doctest::Approx(std::pow(std::numbers::pi, 4) / 45).epsilon(1e-9));
  }

  TEST_CASE("eps = 0 is the deterministic step bitwise") {
    const auto u = FourierField::from_modes(16, 64, {{1, 0.2}, {-2, 0.1}});
    NoiseStream rng(3);
    const auto spec = NoiseSpec::power_law(16, 1.0, 2.0, 3);
    CHECK(stochastic_step(u, 1e-3, 0.0, spec, rng) == step(u, 1e-3));
  }

  TEST_CASE("linear equation samples the exact Ornstein-Uhlenbeck law") {
    // u0 = 0, nonlinearity off: mode j is Gaussian with per-component variance
    // b_j^2 (1 - exp(-2 (2 pi j)^2 tau)) / (2 (2 pi j)^2), independent of eps.
    const auto spec = NoiseSpec::power_law(8, 1.0, 2.0, 2024);
    EnsembleOptions o{.realizations = 400, .T_slow = 0.02, .dt = 1e-2, .samples = 1, .n_actions = 0,
                      .angle_modes = {}, .nonlinear = false, .threads = 1};
    const double eps = 0.05;
    const auto r = ensemble(FourierField(8, 32), eps, spec, o);
    for (int j : {1, 2, 4}) {
      std::vector<double> x;
      for (const auto& run : r.runs) {
        x.push_back(run.final_state.cos_coeff(j));
        x.push_back(run.final_state.sin_coeff(j));
      }
      const double w2 = std::pow(kTwoPi * j, 2), b2 = std::pow(spec.b[j - 1], 2);
      const double expected = b2 * -std::expm1(-2.0 * w2 * o.T_slow) / (2.0 * w2);
      const auto v = sample_variance(x);
      MESSAGE("mode " << j << " variance " << v.value << " expected " << expected << " se " << v.se);
      CHECK(std::abs(v.value - expected) < 3 * v.se);
    }
  }

  TEST_CASE("energy balance in slow time") {
    // d E||u||^2 / dtau = -2 E||u_x||^2 + sum b_j^2 (KdV conserves ||u||^2).
    const auto spec = NoiseSpec::power_law(8, 0.3, 2.0, 5);
    EnsembleOptions o{.realizations = 200, .T_slow = 0.1, .dt = 2e-3, .samples = 40, .n_actions = 0,
                      .angle_modes = {}, .threads = 1};
    const auto r = ensemble(FourierField::from_modes(8, 32, {{1, 0.1}}), 0.05, spec, o);
    REQUIRE(r.valid);
    const std::size_t S = r.taus.size();
    std::vector<double> l2(S, 0.0), h1(S, 0.0);
    std::vector<double> l2_all;
    for (const auto& run : r.runs) {
      for (std::size_t i = 0; i < S; ++i) {
        l2[i] += run.l2[i] / r.runs.size();
        h1[i] += run.h1[i] / r.runs.size();
      }
      l2_all.push_back(run.l2.back());
    }
    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < S; ++i) {
      integral += 0.5 * (r.taus[i + 1] - r.taus[i]) * (-2.0 * (h1[i] + h1[i + 1]) + 2.0 * spec.forcing_mass());
    }
    const double lhs = l2.back() - l2.front();
    double var = 0.0;
    for (double x : l2_all) var += (x - l2.back()) * (x - l2.back());
    const double se = std::sqrt(var / (l2_all.size() - 1) / l2_all.size());
    MESSAGE("change " << lhs << " balance " << integral << " se " << se);
    CHECK(std::abs(lhs - integral) < 3 * se + 1e-3 * std::abs(integral));
  }

  TEST_CASE("ensemble reproducibility and degenerate sizes") {
    const auto spec = NoiseSpec::power_law(8, 0.2, 2.0, 99);
    EnsembleOptions o{.realizations = 3, .T_slow = 0.01, .dt = 1e-3, .samples = 2, .n_actions = 2};
    const auto u0 = FourierField::from_modes(8, 32, {{1, 0.1}});
    const auto a = ensemble(u0, 0.01, spec, o);
    o.threads = 1;
    const auto b = ensemble(u0, 0.01, spec, o);
    REQUIRE(a.runs.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(a.runs[i].final_state == b.runs[i].final_state);
      CHECK(a.runs[i].actions == b.runs[i].actions);
    }
    CHECK(a.action_stats[0].mean == b.action_stats[0].mean);
    for (const auto& run : a.runs) {
      for (const auto& row : run.actions) {
        for (double x : row) CHECK(x >= 0.0);
      }
    }
    o.realizations = 1;
    const auto one = ensemble(u0, 0.01, spec, o);
    for (std::size_t i = 0; i < one.taus.size(); ++i) {
      CHECK(one.action_stats[0].mean[i] == one.runs[0].actions[i][0]);
      CHECK(one.action_stats[0].quantiles[2][i] == one.runs[0].actions[i][0]);
    }
    CHECK(law_distance(a, b, 1) == 0.0);
    CHECK_THROWS_AS(ensemble(u0, 0.0, spec, o), InvalidArgument);
  }

  TEST_CASE("angle histogram calibration") {
    std::vector<double> ang, w;
    const int n = 16000;
    for (int i = 0; i < n; ++i) {
      ang.push_back(kTwoPi * (i + 0.5) / n);
      w.push_back(1.0);
    }
    CHECK(angle_histogram(ang, w, 16).tv < 1e-12);
    std::mt19937_64 g(4);
    std::uniform_real_distribution<double> U(0.0, kTwoPi);
    for (double& a : ang) a = U(g);
    const auto rnd = angle_histogram(ang, w, 16);
    CHECK(rnd.tv < 3 * rnd.noise_floor);
    std::vector<double> point(n, 1.0);
    CHECK(angle_histogram(point, w, 16).tv == doctest::Approx(1.0 - 1.0 / 16));
    ang[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK(angle_histogram(ang, w, 16).excluded_mass == doctest::Approx(1.0 / n));
  }
}
