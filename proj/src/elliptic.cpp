#include "gnls/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gnls::elliptic {

namespace {

constexpr int kMaxAgmIter = 32;
constexpr double kPi = 3.14159265358979323846;

void require_modulus_open(double k) {
  if (!(k >= 0.0 && k < 1.0)) {
    throw std::domain_error("elliptic: modulus must satisfy 0 <= k < 1");
  }
}

double kprime_of(double k) {
  // sqrt((1-k)(1+k)) avoids the cancellation in 1 - k^2 near k = 1.
  return std::sqrt((1.0 - k) * (1.0 + k));
}

struct AgmTable {
  double a[kMaxAgmIter + 1];
  double c[kMaxAgmIter + 1];
  int n;  // last index; a[n] is the AGM limit
};

AgmTable agm(double k, double kprime) {
  AgmTable t{};
  double a = 1.0, b = kprime, c = k;
  t.a[0] = a;
  t.c[0] = c;
  int i = 0;
  const double eps = std::numeric_limits<double>::epsilon();
  while (std::abs(c) > eps * a && i < kMaxAgmIter) {
    const double an = 0.5 * (a + b);
    const double cn = 0.5 * (a - b);
    b = std::sqrt(a * b);
    a = an;
    c = cn;
    ++i;
    t.a[i] = a;
    t.c[i] = c;
  }
  t.n = i;
  return t;
}

// Carlson symmetric integral R_F(x, y, z) by duplication.
double carlson_rf(double x, double y, double z) {
  const double tol = 1e-17;
  double dx, dy, dz;
  double mu;
  int iter = 0;
  do {
    const double sx = std::sqrt(x), sy = std::sqrt(y), sz = std::sqrt(z);
    const double lam = sx * (sy + sz) + sy * sz;
    x = 0.25 * (x + lam);
    y = 0.25 * (y + lam);
    z = 0.25 * (z + lam);
    mu = (x + y + z) / 3.0;
    dx = (mu - x) / mu;
    dy = (mu - y) / mu;
    dz = (mu - z) / mu;
    if (++iter > 200) break;
  } while (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) > tol);
  const double e2 = dx * dy - dz * dz;
  const double e3 = dx * dy * dz;
  return (1.0 + (e2 / 24.0 - 0.1 - 3.0 * e3 / 44.0) * e2 + e3 / 14.0) /
         std::sqrt(mu);
}

double complete_K_core(double k, double kprime) {
  const AgmTable t = agm(k, kprime);
  return kPi / (2.0 * t.a[t.n]);
}

}  // namespace

double complete_K(double k) {
  require_modulus_open(k);
  return complete_K_core(k, kprime_of(k));
}

double complete_K_from_kprime(double kprime) {
  if (!(kprime > 0.0 && kprime <= 1.0)) {
    throw std::domain_error("elliptic: complementary modulus must be in (0, 1]");
  }
  const double k2 = (1.0 - kprime) * (1.0 + kprime);
  const double k = k2 > 0.0 ? std::sqrt(k2) : 0.0;
  return complete_K_core(k, kprime);
}

double complete_E(double k) {
  if (!(k >= 0.0 && k <= 1.0)) {
    throw std::domain_error("elliptic: modulus must satisfy 0 <= k <= 1");
  }
  if (k == 1.0) return 1.0;
  const AgmTable t = agm(k, kprime_of(k));
  double sum = 0.0;
  double pow2 = 0.5;  // 2^{n-1}
  for (int i = 0; i <= t.n; ++i) {
    sum += pow2 * t.c[i] * t.c[i];
    pow2 *= 2.0;
  }
  return complete_K_core(k, kprime_of(k)) * (1.0 - sum);
}

double incomplete_F(double phi, double k) {
  if (!(k >= 0.0 && k <= 1.0)) {
    throw std::domain_error("elliptic: modulus must satisfy 0 <= k <= 1");
  }
  if (k == 1.0 && !(std::abs(phi) < kPi / 2.0)) {
    throw std::domain_error("elliptic: F(phi; 1) requires |phi| < pi/2");
  }
  // Reduce to [-pi/2, pi/2] using F(phi + n pi; k) = F(phi; k) + 2 n K(k).
  const double n = std::round(phi / kPi);
  const double phr = phi - n * kPi;
  double base = 0.0;
  if (n != 0.0) base = 2.0 * n * complete_K(k);
  const double s = std::sin(phr);
  const double c = std::cos(phr);
  if (s == 0.0) return base;
  const double y = 1.0 - k * k * s * s;
  return base + s * carlson_rf(c * c, y, 1.0);
}

namespace {

// Descending Landen backward recurrence for the amplitude phi0 with
// u already reduced so that |u| stays moderate relative to K.
double amplitude_core(double u, const AgmTable& t) {
  double phi = std::ldexp(t.a[t.n] * u, t.n);
  for (int i = t.n; i >= 1; --i) {
    const double ratio = std::clamp(t.c[i] / t.a[i] * std::sin(phi), -1.0, 1.0);
    phi = 0.5 * (phi + std::asin(ratio));
  }
  return phi;
}

JacobiTriple jacobi_core(double u, double k, double kprime) {
  if (k == 0.0) {
    return {std::sin(u), std::cos(u), 1.0};
  }
  const AgmTable t = agm(k, kprime);
  const double K = kPi / (2.0 * t.a[t.n]);
  // Reduce modulo the full period 4K into [-2K, 2K].
  const double period = 4.0 * K;
  double ur = std::remainder(u, period);
  const double phi = amplitude_core(ur, t);
  const double sn = std::sin(phi);
  const double cn = std::cos(phi);
  const double dn2 = 1.0 - (k * sn) * (k * sn);
  const double dn = dn2 > 0.0 ? std::sqrt(dn2) : kprime;
  return {sn, cn, dn};
}

}  // namespace

JacobiTriple jacobi_sn_cn_dn(double u, double k) {
  require_modulus_open(k);
  return jacobi_core(u, k, kprime_of(k));
}

JacobiTriple jacobi_sn_cn_dn_kp(double u, double k, double kprime) {
  require_modulus_open(k);
  if (!(kprime > 0.0 && kprime <= 1.0)) {
    throw std::domain_error("elliptic: complementary modulus must be in (0, 1]");
  }
  return jacobi_core(u, k, kprime);
}

double jacobi_am(double u, double k) {
  require_modulus_open(k);
  if (k == 0.0) return u;
  const AgmTable t = agm(k, kprime_of(k));
  const double K = kPi / (2.0 * t.a[t.n]);
  // am(u + 2K m) = am(u) + pi m
  const double m = std::round(u / (2.0 * K));
  const double ur = u - 2.0 * K * m;
  return amplitude_core(ur, t) + kPi * m;
}

double dK_dk(double k) {
  require_modulus_open(k);
  if (k == 0.0) return 0.0;
  const double kp2 = (1.0 - k) * (1.0 + k);
  return (complete_E(k) - kp2 * complete_K(k)) / (k * kp2);
}

double dE_dk(double k) {
  require_modulus_open(k);
  if (k == 0.0) return 0.0;
  return (complete_E(k) - complete_K(k)) / k;
}

double inflection_argument(double k) {
  require_modulus_open(k);
  return incomplete_F(kPi / 4.0, k);
}

}  // namespace gnls::elliptic
