#include "gnls/elliptic.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <doctest.h>

#include "oracles.hpp"

using namespace gnls::elliptic;

namespace {
constexpr double kPi = 3.14159265358979323846;

double quad_K(double k) {
  return oracles::adaptive_simpson(
      [k](double t) { return 1.0 / std::sqrt(1.0 - k * k * std::sin(t) * std::sin(t)); },
      0.0, kPi / 2.0);
}

double quad_E(double k) {
  return oracles::adaptive_simpson(
      [k](double t) { return std::sqrt(1.0 - k * k * std::sin(t) * std::sin(t)); },
      0.0, kPi / 2.0);
}
}  // namespace

TEST_CASE("complete K") {
  CHECK(complete_K(0.0) == doctest::Approx(kPi / 2.0).epsilon(1e-15));
  // frozen from the quadrature oracle
  CHECK(std::abs(complete_K(0.5) - 1.6857503548125960429) < 2e-15);
  CHECK(std::abs(complete_K(0.5) - quad_K(0.5)) < 1e-12);
  CHECK(complete_K(0.999999) > 7.0);
  // dK/dk ~ 7e5 here, so the double rounding of the literal k already
  // moves K by ~1e-11
  CHECK(std::abs(complete_K(0.999999) - 7.947479773562344765) < 1e-10);
  // strictly increasing
  double prev = complete_K(0.0);
  for (double k = 0.05; k < 1.0; k += 0.05) {
    const double K = complete_K(k);
    CHECK(K > prev);
    prev = K;
  }
  CHECK_THROWS_AS(complete_K(1.0), std::domain_error);
  CHECK_THROWS_AS(complete_K(-0.1), std::domain_error);
}

TEST_CASE("complete E") {
  CHECK(complete_E(0.0) == doctest::Approx(kPi / 2.0).epsilon(1e-15));
  CHECK(complete_E(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(complete_E(0.5) - 1.4674622093394271555) < 2e-15);
  CHECK(std::abs(complete_E(0.5) - quad_E(0.5)) < 1e-12);
  CHECK(complete_E(0.9) < complete_E(0.2));
  CHECK_THROWS_AS(complete_E(1.5), std::domain_error);
}

TEST_CASE("incomplete F") {
  CHECK(incomplete_F(0.0, 0.7) == 0.0);
  CHECK(std::abs(incomplete_F(kPi / 4.0, 1.0) - std::log(1.0 + std::sqrt(2.0))) < 1e-14);
  const double oracle = oracles::adaptive_simpson(
      [](double t) { return 1.0 / std::sqrt(1.0 - 0.25 * std::sin(t) * std::sin(t)); },
      0.0, kPi / 4.0);
  CHECK(std::abs(incomplete_F(kPi / 4.0, 0.5) - oracle) < 1e-12);
  CHECK(std::abs(incomplete_F(kPi / 4.0, 0.5) - 0.8043661012320655565) < 2e-15);
  for (double k : {0.1, 0.5, 0.9}) {
    CHECK(std::abs(incomplete_F(kPi / 2.0, k) - complete_K(k)) < 1e-13);
  }
  CHECK_THROWS_AS(incomplete_F(kPi / 2.0, 1.0), std::domain_error);
}

TEST_CASE("jacobi sn cn dn") {
  const auto t0 = jacobi_sn_cn_dn(0.8, 0.0);
  CHECK(t0.sn == doctest::Approx(std::sin(0.8)).epsilon(1e-15));
  CHECK(t0.cn == doctest::Approx(std::cos(0.8)).epsilon(1e-15));
  CHECK(t0.dn == 1.0);

  // dn(K(k), k) = k'
  const double K5 = complete_K(0.5);
  const auto tK = jacobi_sn_cn_dn(K5, 0.5);
  CHECK(std::abs(tK.dn - std::sqrt(0.75)) < 1e-14);

  // ODE oracle at (0.3, 0.7), plus frozen values
  const auto ode = oracles::jacobi_by_ode(0.3, 0.7);
  const auto t = jacobi_sn_cn_dn(0.3, 0.7);
  CHECK(std::abs(t.sn - ode[0]) < 1e-12);
  CHECK(std::abs(t.cn - ode[1]) < 1e-12);
  CHECK(std::abs(t.dn - ode[2]) < 1e-12);
  CHECK(std::abs(t.sn - 0.293454810619917932) < 2e-15);
  CHECK(std::abs(t.cn - 0.955972946334794613) < 2e-15);
  CHECK(std::abs(t.dn - 0.978674253426937645) < 2e-15);

  CHECK_THROWS_AS(jacobi_sn_cn_dn(0.1, 1.0), std::domain_error);
}

TEST_CASE("incomplete F: oddness and amplitude inversion") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uphi(-1.5, 1.5), uk(0.05, 0.95);
  for (int i = 0; i < 200; ++i) {
    const double phi = uphi(rng), k = uk(rng);
    CHECK(std::abs(incomplete_F(-phi, k) + incomplete_F(phi, k)) < 1e-13);
    const double u = incomplete_F(phi, k);
    CHECK(std::abs(jacobi_sn_cn_dn(u, k).sn - std::sin(phi)) < 1e-12);
  }
  // accumulation across the half-period boundary
  CHECK(std::abs(incomplete_F(2.4, 0.6) -
                 (2.0 * complete_K(0.6) + incomplete_F(2.4 - kPi, 0.6))) < 1e-12);
}

TEST_CASE("jacobi identities over random arguments") {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> uk(0.0, 0.999999);
  std::uniform_real_distribution<double> uu(-30.0, 30.0);
  for (int i = 0; i < 10000; ++i) {
    const double k = uk(rng), u = uu(rng);
    const auto t = jacobi_sn_cn_dn(u, k);
    CHECK(std::abs(t.sn * t.sn + t.cn * t.cn - 1.0) <= 1e-12);
    CHECK(std::abs(k * k * t.sn * t.sn + t.dn * t.dn - 1.0) <= 1e-12);
  }
}

TEST_CASE("dn periodicity and evenness") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> uk(0.05, 0.95);
  std::uniform_real_distribution<double> uu(-8.0, 8.0);
  for (int i = 0; i < 200; ++i) {
    const double k = uk(rng), u = uu(rng);
    const double K = complete_K(k);
    CHECK(std::abs(jacobi_sn_cn_dn(u + 2.0 * K, k).dn - jacobi_sn_cn_dn(u, k).dn) <= 1e-12);
    CHECK(std::abs(jacobi_sn_cn_dn(-u, k).dn - jacobi_sn_cn_dn(u, k).dn) <= 1e-12);
  }
  CHECK(jacobi_sn_cn_dn(0.0, 0.6).dn == 1.0);
}

TEST_CASE("amplitude") {
  CHECK(jacobi_am(0.0, 0.4) == 0.0);
  CHECK(std::abs(jacobi_am(complete_K(0.4), 0.4) - kPi / 2.0) < 1e-12);
  const double u = incomplete_F(0.6, 0.4);
  CHECK(std::abs(jacobi_am(u, 0.4) - 0.6) < 1e-10);
  // round-trips across a few moduli
  for (double k : {0.1, 0.5, 0.85}) {
    for (double phi = 0.1; phi < kPi / 2.0; phi += 0.3) {
      CHECK(std::abs(jacobi_am(incomplete_F(phi, k), k) - phi) < 1e-10);
    }
  }
}

TEST_CASE("derivatives of the complete integrals") {
  CHECK(dK_dk(0.0) == 0.0);
  CHECK(dE_dk(0.0) == 0.0);
  const double h = 1e-6;
  const double fdK = oracles::central_diff([](double k) { return complete_K(k); }, 0.5, h);
  CHECK(std::abs(dK_dk(0.5) - fdK) < 1e-6 * std::abs(fdK));
  const double fdE9 = oracles::central_diff([](double k) { return complete_E(k); }, 0.9, h);
  CHECK(std::abs(dE_dk(0.9) - fdE9) < 1e-6 * std::abs(fdE9));
  CHECK(std::abs(dK_dk(0.5) - 0.54173184861328032882) < 1e-12);
  CHECK(std::abs(dE_dk(0.5) - (-0.43657629094633777482)) < 1e-12);
  CHECK(std::abs(dE_dk(0.9) - (-1.2320578729346178483)) < 1e-12);
}

TEST_CASE("dn inflection argument") {
  // x0(k) solves dn^2 = 1 - k^2/2; compare the closed form against a
  // bisection root solve on (0, K)
  for (double k : {0.2, 0.5, 0.8, 0.95}) {
    const double target = 1.0 - k * k / 2.0;
    double lo = 0.0, hi = complete_K(k);
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      const auto t = jacobi_sn_cn_dn(mid, k);
      (t.dn * t.dn > target ? lo : hi) = mid;
    }
    const double x0 = inflection_argument(k);
    CHECK(std::abs(x0 - 0.5 * (lo + hi)) < 1e-10);
    CHECK(x0 > 0.0);
    CHECK(x0 < complete_K(k) / 2.0);
  }
  CHECK(std::abs(inflection_argument(0.5) - 0.804366101232065557) < 2e-15);
}

TEST_CASE("dn derivative matches -k^2 sn cn") {
  for (double k : {0.3, 0.7}) {
    for (double u = -2.0; u <= 2.0; u += 0.37) {
      const auto t = jacobi_sn_cn_dn(u, k);
      const double fd = oracles::central_diff(
          [k](double x) { return jacobi_sn_cn_dn(x, k).dn; }, u, 1e-6);
      CHECK(std::abs(fd - (-k * k * t.sn * t.cn)) < 1e-10);
    }
  }
}

TEST_CASE("K E product increasing in k") {
  double prev = 0.0;
  for (int i = 1; i <= 1000; ++i) {
    const double k = 0.999 * i / 1000.0;
    const double p = complete_K(k) * complete_E(k);
    CHECK(p > prev);
    prev = p;
  }
}
