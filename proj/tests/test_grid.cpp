#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kdvlab/error.hpp"
#include "kdvlab/grid.hpp"

using namespace kdvlab;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;

FourierField random_field(int K, int N, unsigned seed, double decay = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  FourierField f(K, N);
  for (int k = 1; k <= K; ++k) {
    const double s = std::pow(k, -decay);
    f = f.with_mode(k, s * g(rng)).with_mode(-k, s * g(rng));
  }
  return f;
}

}  // namespace

TEST_SUITE("grid") {
  TEST_CASE("synthesize: zero field and single cosine") {
    const FourierField z(8, 24);
    for (double v : synthesize(z)) CHECK(v == 0.0);

    const auto u = FourierField::from_modes(8, 24, {{1, 1.0}});
    const auto vals = synthesize(u);
    for (int i = 0; i < 24; ++i) CHECK(vals[i] == doctest::Approx(kSqrt2 * std::cos(kTwoPi * i / 24.0)).epsilon(1e-14));
  }

  TEST_CASE("synthesize matches direct pointwise evaluation") {
    const double a = 0.7, b = -1.3;
    const auto u = FourierField::from_modes(16, 64, {{2, a}, {-3, b}});
    const auto vals = synthesize(u, 64);
    for (int i = 0; i < 64; ++i) {
      const double x = i / 64.0;
      const double direct = a * kSqrt2 * std::cos(4 * std::numbers::pi * x) + b * kSqrt2 * std::sin(6 * std::numbers::pi * x);
      CHECK(std::abs(vals[i] - direct) < 1e-13);
      CHECK(std::abs(evaluate(u, x) - direct) < 1e-13);
    }
  }

  TEST_CASE("synthesize rejects a grid below 3K") {
    const FourierField u(10, 30);
    CHECK_THROWS_AS(synthesize(u, 20), InvalidArgument);
    CHECK_THROWS_AS(synthesize(u, 31), InvalidArgument);
    CHECK_THROWS_AS(FourierField(10, 20), InvalidArgument);
  }

  TEST_CASE("analyze: constants, sines, round trip, bad samples") {
    std::vector<double> c(32, 2.5);
    const auto r = analyze(c, 8);
    CHECK(r.mean_discarded);
    CHECK(r.mean == doctest::Approx(2.5));
    CHECK(r.field.l2_norm_squared() < 1e-28);

    std::vector<double> s(32);
    for (int i = 0; i < 32; ++i) s[i] = kSqrt2 * std::sin(kTwoPi * i / 32.0);
    const auto rs = analyze(s, 8);
    CHECK_FALSE(rs.mean_discarded);
    CHECK(std::abs(rs.field[-1] - 1.0) < 1e-13);
    CHECK(std::abs(rs.field.l2_norm_squared() - 1.0) < 1e-13);

    const auto u = random_field(21, 64, 7);
    const auto back = analyze(synthesize(u), 21).field;
    for (int k = 1; k <= 21; ++k) {
      CHECK(std::abs(back[k] - u[k]) <= 1e-13 * (1.0 + std::abs(u[k])));
      CHECK(std::abs(back[-k] - u[-k]) <= 1e-13 * (1.0 + std::abs(u[-k])));
    }

    s[3] = std::nan("");
    CHECK_THROWS_AS(analyze(s, 8), InvalidArgument);
  }

  TEST_CASE("sobolev norms") {
    CHECK(sobolev_norm(FourierField(4, 12), 2.0) == 0.0);
    const auto e1 = FourierField::from_modes(4, 12, {{1, 1.0}});
    CHECK(sobolev_norm(e1, 0.0) == doctest::Approx(1.0));
    CHECK(sobolev_norm(e1, 1.0) == doctest::Approx(kTwoPi));
    CHECK_THROWS_AS(sobolev_norm(e1, -1.0), InvalidArgument);
    const auto u = FourierField::from_modes(4, 12, {{2, 0.3}, {-3, 0.1}});
    const double expected = std::sqrt(std::pow(4 * std::numbers::pi, 3) * 0.09 + std::pow(6 * std::numbers::pi, 3) * 0.01);
    CHECK(sobolev_norm(u, 1.5) == doctest::Approx(expected).epsilon(1e-14));
  }

  TEST_CASE("derivative") {
    const auto e1 = FourierField::from_modes(4, 12, {{1, 1.0}});
    const auto d = derivative(e1);
    CHECK(d[1] == 0.0);
    CHECK(d[-1] == doctest::Approx(-kTwoPi));
    const auto e3 = FourierField::from_modes(4, 12, {{3, 1.0}});
    CHECK(sobolev_norm(derivative(e3, 3), 0.0) == doctest::Approx(std::pow(3 * kTwoPi, 3)));

    const auto u = random_field(12, 36, 3);
    const auto twice = derivative(derivative(u));
    const auto d2 = derivative(u, 2);
    for (int k = 1; k <= 12; ++k) {
      CHECK(std::abs(twice[k] - d2[k]) <= 1e-13 * (1 + std::abs(d2[k])));
      CHECK(std::abs(twice[-k] - d2[-k]) <= 1e-13 * (1 + std::abs(d2[-k])));
    }
  }

  TEST_CASE("product_dealiased") {
    const FourierField zero(8, 24);
    const auto g = random_field(8, 24, 11);
    CHECK(product_dealiased(zero, g).field.l2_norm_squared() == 0.0);

    const auto e1 = FourierField::from_modes(8, 24, {{1, 1.0}});
    const auto p = product_dealiased(e1, e1);
    // (sqrt2 cos 2 pi x)^2 = 1 + cos 4 pi x = 1 + e_2 / sqrt2.
    CHECK(p.mean == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(p.field[2] - 1.0 / kSqrt2) < 1e-14);
    CHECK(std::abs(p.field.l2_norm_squared() - 0.5) < 1e-14);

    CHECK_THROWS_AS(product_dealiased(e1, FourierField(8, 26)), InvalidArgument);

    // Parseval for the product: the projected-out mean is the L2 inner product.
    const auto f = random_field(8, 24, 5);
    const auto pf = product_dealiased(f, g);
    CHECK(std::abs(pf.mean - inner(f, g)) < 1e-12);
  }

  TEST_CASE("Parseval and antisymmetry of d/dx on random fields") {
    for (unsigned seed = 1; seed <= 5; ++seed) {
      const auto f = random_field(20, 64, seed);
      const auto g = random_field(20, 64, seed + 100);
      auto vals = synthesize(f);
      for (double& v : vals) v *= v;
      CHECK(std::abs(grid_mean(vals) - f.l2_norm_squared()) < 1e-12 * (1 + f.l2_norm_squared()));
      const double lhs = inner(derivative(f), g);
      const double rhs = -inner(f, derivative(g));
      CHECK(std::abs(lhs - rhs) < 1e-12 * (1 + std::abs(lhs)));
    }
  }

  TEST_CASE("translation rotates coefficients") {
    const auto u = random_field(6, 18, 9);
    const double s = 0.137;
    const auto t = u.translated(s);
    for (double x : {0.0, 0.21, 0.5, 0.77}) CHECK(evaluate(t, x) == doctest::Approx(evaluate(u, x + s)).epsilon(1e-13));
  }

  TEST_CASE("linear Birkhoff weights and mode-vector norm") {
    const auto u = FourierField::from_modes(4, 12, {{1, 0.5}, {-2, 0.25}});
    const auto v = linear_birkhoff(u, 0.0);
    // |v|_0 = ||u||_0 for the linear map.
    CHECK(v.norm() == doctest::Approx(sobolev_norm(u, 0.0)).epsilon(1e-14));
    CHECK(v.cos_part[0] == doctest::Approx(0.5 / std::sqrt(kTwoPi)));
  }
}
