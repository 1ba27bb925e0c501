#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kdvlab/error.hpp"
#include "kdvlab/hill.hpp"

using namespace kdvlab;

namespace {

constexpr double kPi = std::numbers::pi;

double rel(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

FourierField small_random(int K, unsigned seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  FourierField f(K, 3 * K);
  for (int k = 1; k <= K; ++k) {
    const double s = std::exp(-0.7 * k);
    f = f.with_mode(k, s * g(rng)).with_mode(-k, s * g(rng));
  }
  return f * (scale / sobolev_norm(f, 1.0));
}

}  // namespace

TEST_SUITE("hill") {
  TEST_CASE("transfer: free operator") {
    const FourierField zero(4, 12);
    for (double l : {0.0, 3.0, 50.0, 400.0}) {
      const auto t = transfer(zero, l, true);
      CHECK(std::abs(t.y1 - std::cos(std::sqrt(l))) < 1e-10);
      CHECK(std::abs(t.y2p - std::cos(std::sqrt(l))) < 1e-10);
    }
    const auto t = transfer(zero, -4.0, false);
    CHECK(std::abs(t.y1 - std::cosh(2.0)) < 1e-9);
  }

  TEST_CASE("Wronskian at x = 1 and along the path") {
    const auto u = FourierField::from_modes(4, 12, {{1, 0.3}});
    for (double l : {-5.0, 0.0, 50.0}) CHECK(std::abs(transfer(u, l, false).wronskian() - 1.0) < 1e-10);
    std::vector<double> xs;
    for (int i = 1; i <= 10; ++i) xs.push_back(i / 10.0);
    for (const auto& t : transfer_path(Potential(u), 20.0, xs)) CHECK(std::abs(t.wronskian() - 1.0) < 1e-10);
  }

  TEST_CASE("discriminant of the free operator") {
    const FourierField zero(4, 12);
    CHECK(std::abs(discriminant(zero, 0.0).value - 2.0) < 1e-10);
    CHECK(std::abs(discriminant(zero, kPi * kPi).value + 2.0) < 1e-10);
    CHECK(std::abs(discriminant(zero, 4 * kPi * kPi).value - 2.0) < 1e-10);
    // Delta' = -sin(sqrt l) / sqrt l for u = 0.
    const double l = 7.3;
    CHECK(std::abs(discriminant(zero, l).derivative + std::sin(std::sqrt(l)) / std::sqrt(l)) < 1e-10);
  }

  TEST_CASE("discriminant matches the dense-matrix characteristic values") {
    // Delta(lambda_j) = +2 at even-index (periodic) and -2 at odd-index
    // (antiperiodic) eigenvalues of the truncated Fourier matrix.
    const auto u = FourierField::from_modes(8, 24, {{1, 0.2}});
    const auto ev = matrix_oracle_spectrum(u, 12);
    for (std::size_t j = 0; j < ev.size(); ++j) {
      const double target = ((j + 1) / 2) % 2 == 0 ? 2.0 : -2.0;
      CHECK(std::abs(discriminant(u, ev[j]).value - target) < 1e-7);
    }
  }

  TEST_CASE("periodic spectrum: free operator and spectral shift") {
    const FourierField zero(4, 12);
    const auto s = periodic_spectrum(zero, 10);
    CHECK(std::abs(s.lambda[0]) < 1e-8);
    for (int n = 1; n <= 10; ++n) {
      CHECK(std::abs(s.lo(n) - n * n * kPi * kPi) < 1e-8);
      CHECK(std::abs(s.hi(n) - n * n * kPi * kPi) < 1e-8);
      CHECK(s.gaps[n - 1] == 0.0);
    }
    const auto u = FourierField::from_modes(4, 12, {{1, 0.2}, {-2, 0.1}});
    const auto a = periodic_spectrum(u, 6);
    const auto b = periodic_spectrum(u, 6, {}, 1.0);
    for (int j = 0; j <= 12; ++j) CHECK(std::abs(b.lambda[j] - a.lambda[j] - 1.0) < 1e-8);
  }

  TEST_CASE("first gap of a single cosine agrees with perturbation theory and the matrix oracle") {
    const double a = 0.1;
    const auto u = FourierField::from_modes(8, 24, {{1, a}});
    const auto s = periodic_spectrum(u, 10);
    CHECK(std::abs(s.gaps[0] - std::sqrt(2.0) * a) < 0.02 * a);
    const auto m = matrix_oracle_spectrum(u, 10);
    for (int j = 0; j <= 20; ++j) CHECK(rel(s.lambda[j], m[j]) < 1e-7);
  }

  TEST_CASE("second-mode potential opens the second gap first") {
    const double a = 0.05;
    const auto u = FourierField::from_modes(8, 24, {{2, a}});
    const auto g = gap_lengths(periodic_spectrum(u, 4));
    CHECK(std::abs(g[1] - std::sqrt(2.0) * a) < 0.02 * a);
    CHECK(g[0] < 10 * a * a);
  }

  TEST_CASE("matrix oracle: free spectrum, random potentials, Weyl count") {
    const auto free = matrix_oracle_spectrum(FourierField(4, 12), 5);
    CHECK(std::abs(free[0]) < 1e-12);
    for (int n = 1; n <= 5; ++n) {
      CHECK(std::abs(free[2 * n - 1] - n * n * kPi * kPi) < 1e-9);
      CHECK(std::abs(free[2 * n] - n * n * kPi * kPi) < 1e-9);
    }
    for (unsigned seed : {1u, 2u, 3u}) {
      const auto u = small_random(12, seed, 0.3);
      const auto s = periodic_spectrum(u, 10);
      const auto m = matrix_oracle_spectrum(u, 10);
      for (int j = 0; j <= 20; ++j) CHECK(rel(s.lambda[j], m[j]) < 1e-7);
      // Eigenvalues below l number 2 floor(sqrt(l)/pi) + 1 up to one.
      const double l = 0.5 * (m[15] + m[16]);
      const int count = static_cast<int>(std::count_if(m.begin(), m.end(), [&](double e) { return e < l; }));
      const int weyl = 2 * static_cast<int>(std::floor(std::sqrt(l) / kPi)) + 1;
      CHECK(std::abs(count - weyl) <= 1);
    }
  }

  TEST_CASE("Dirichlet spectrum: free operator, periodicity in z, oracle, interlacing") {
    const FourierField zero(4, 12);
    for (double z : {0.0, 0.3}) {
      const auto mu = dirichlet_spectrum(zero, 5, z);
      for (int n = 1; n <= 5; ++n) CHECK(std::abs(mu[n - 1] - n * n * kPi * kPi) < 1e-8);
    }
    const auto u = FourierField::from_modes(8, 24, {{1, 0.3}});
    const auto s = periodic_spectrum(u, 6);
    const auto mu = dirichlet_spectrum(u, 6, 0.25, &s);
    const auto oracle = dirichlet_matrix_oracle(u, 6, 0.25);
    CHECK(mu[0] >= s.lo(1));
    CHECK(mu[0] <= s.hi(1));
    CHECK(std::abs(mu[0] - oracle[0]) < 1e-6);
    for (int n = 1; n <= 6; ++n) CHECK(rel(mu[n - 1], oracle[n - 1]) < 1e-8);

    const double z = 0.4;
    const auto a = dirichlet_spectrum(u, 4, z, &s);
    const auto b = dirichlet_spectrum(u, 4, std::nextafter(z + 1.0, 0.0), &s);
    for (int n = 0; n < 4; ++n) CHECK(std::abs(a[n] - b[n]) < 1e-9);

    for (double zz = 0.0; zz < 1.0; zz += 0.125) {
      const auto m2 = dirichlet_spectrum(u, 6, zz, &s);
      for (int n = 1; n <= 6; ++n) {
        CHECK(m2[n - 1] >= s.lo(n));
        CHECK(m2[n - 1] <= s.hi(n));
      }
    }
  }

  TEST_CASE("trace formula") {
    const std::vector<double> zs = {0.0, 0.2, 0.45, 0.7};
    const auto zero = trace_reconstruct(FourierField(4, 12), 5, zs);
    for (double v : zero.values) CHECK(std::abs(v) < 1e-8);

    const auto u = FourierField::from_modes(8, 24, {{1, 0.3}});
    const auto r = trace_reconstruct(u, 20, zs);
    for (std::size_t i = 0; i < zs.size(); ++i) CHECK(std::abs(r.values[i] - evaluate(u, zs[i])) < 1e-4);
    CHECK(r.resolved);

    const auto shifted = trace_reconstruct(u, 20, zs, {}, 1.0);
    for (std::size_t i = 0; i < zs.size(); ++i) CHECK(std::abs(shifted.values[i] - r.values[i] - 1.0) < 1e-7);
  }

  TEST_CASE("product representation converges with the truncation") {
    const auto u = FourierField::from_modes(8, 24, {{1, 0.2}, {-2, 0.1}});
    const auto s = periodic_spectrum(u, 40);
    HillSpectrum s10 = s, s20 = s;
    s10.n_max = 10;
    s20.n_max = 20;
    for (int n = 1; n <= 3; ++n) {
      const double l = 0.5 * (s.lambda[2 * n - 2] + s.lo(n));
      const auto d = discriminant(u, l);
      const double exact = d.value * d.value - 4.0;
      const double e40 = std::abs(product_representation(s, l) - exact);
      const double e20 = std::abs(product_representation(s20, l) - exact);
      const double e10 = std::abs(product_representation(s10, l) - exact);
      CHECK(e20 < e10);
      CHECK(e40 < e20);
      CHECK(e40 < 0.6 * e10);
    }
  }

  TEST_CASE("eigenvalue asymptotics are square summable") {
    const auto u = FourierField::from_modes(8, 24, {{1, 0.3}, {-3, 0.1}});
    const auto s = periodic_spectrum(u, 15);
    double acc = 0.0;
    for (int n = 1; n <= 15; ++n) {
      const double r1 = s.lo(n) - n * n * kPi * kPi, r2 = s.hi(n) - n * n * kPi * kPi;
      acc += r1 * r1 + r2 * r2;
    }
    CHECK(acc < 1.0);
  }

  TEST_CASE("finite-difference gradients") {
    const auto u = FourierField::from_modes(6, 18, {{1, 0.3}, {-2, 0.1}, {3, 0.05}});
    const auto g = functional_gradient_fd([](const FourierField& f) { return 0.5 * f.l2_norm_squared(); }, u, 1e-4);
    for (int k = 1; k <= 6; ++k) {
      CHECK(std::abs(g[k] - u[k]) < 1e-9);
      CHECK(std::abs(g[-k] - u[-k]) < 1e-9);
    }
    // grad H = -u_xx + 3 u^2 - mean, for H = integral of u_x^2 / 2 + u^3.
    auto H = [](const FourierField& f) {
      const auto p = product_dealiased(f, f);
      const auto cube = product_dealiased(p.field, f);
      return 0.5 * sobolev_norm(f, 1.0) * sobolev_norm(f, 1.0) + cube.mean + 0.0 * p.mean;
    };
    const auto gh = functional_gradient_fd(H, u, 1e-4, true);
    const auto expected = derivative(u, 2) * -1.0 + product_dealiased(u, u).field * 3.0;
    for (int k = 1; k <= 6; ++k) {
      CHECK(std::abs(gh[k] - expected[k]) < 1e-7);
      CHECK(std::abs(gh[-k] - expected[-k]) < 1e-7);
    }
  }

  TEST_CASE("Gardner bracket") {
    const auto f = FourierField::from_modes(4, 12, {{1, 0.3}, {-2, 0.2}});
    CHECK(gardner_bracket(f, f) == 0.0);
    const auto g = FourierField::from_modes(4, 12, {{-1, 0.5}, {2, -0.1}});
    CHECK(gardner_bracket(f, g) == doctest::Approx(-gardner_bracket(g, f)));
    // {(1/2)||u||^2, H} = 0 since ||u||^2 is a Casimir-like integral of KdV.
    const auto u = FourierField::from_modes(6, 18, {{1, 0.3}, {-2, 0.1}});
    const auto grad_m = u;
    const auto grad_h = derivative(u, 2) * -1.0 + product_dealiased(u, u).field * 3.0;
    CHECK(std::abs(gardner_bracket(grad_m, grad_h)) < 1e-12);
  }

  TEST_CASE("discriminants at two spectral values commute") {
    const auto u = FourierField::from_modes(6, 18, {{1, 0.3}, {-2, 0.1}});
    const double l1 = 20.0, l2 = 55.0;
    auto D = [](double l) { return [l](const FourierField& f) { return discriminant(f, l).value; }; };
    const auto g1 = functional_gradient_fd(D(l1), u, 1e-4, true);
    const auto g2 = functional_gradient_fd(D(l2), u, 1e-4, true);
    const double b = gardner_bracket(g1, g2);
    CHECK(std::abs(b) < 1e-5 * sobolev_norm(g1, 0) * sobolev_norm(g2, 0));
  }

  TEST_CASE("fault injection flips the discriminant") {
    const FourierField zero(4, 12);
    fault_injection::flip_discriminant_sign(true);
    const double d = discriminant(zero, 0.0).value;
    CHECK_THROWS_AS(periodic_spectrum(zero, 3), SpectrumError);
    fault_injection::flip_discriminant_sign(false);
    CHECK(std::abs(d + 2.0) < 1e-10);
  }

  TEST_CASE("invalid arguments") {
    CHECK_THROWS_AS(periodic_spectrum(FourierField(4, 12), 0), InvalidArgument);
    CHECK_THROWS_AS(functional_gradient_fd([](const FourierField&) { return 0.0; }, FourierField(4, 12), 0.0),
                    InvalidArgument);
  }
}
