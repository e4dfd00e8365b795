#ifndef GNLS_TESTS_ORACLES_HPP
#define GNLS_TESTS_ORACLES_HPP

// Test-only numerical oracles, independent of the library implementations
// they check: adaptive quadrature, a high-order ODE marcher and finite
// differences.

#include <array>
#include <cmath>
#include <functional>

namespace oracles {

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a,
                                   double b, double fa, double fm, double fb,
                                   double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol = 1e-14, int depth = 40) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth);
}

// RK4 for the Jacobi system (sn, cn, dn)' = (cn dn, -sn dn, -k^2 sn cn)
// from u = 0 with initial data (0, 1, 1).
inline std::array<double, 3> jacobi_by_ode(double u, double k, int steps = 200000) {
  std::array<double, 3> y{0.0, 1.0, 1.0};
  const double h = u / steps;
  auto rhs = [k](const std::array<double, 3>& s) {
    return std::array<double, 3>{s[1] * s[2], -s[0] * s[2], -k * k * s[0] * s[1]};
  };
  for (int i = 0; i < steps; ++i) {
    const auto k1 = rhs(y);
    std::array<double, 3> t;
    for (int j = 0; j < 3; ++j) t[j] = y[j] + 0.5 * h * k1[j];
    const auto k2 = rhs(t);
    for (int j = 0; j < 3; ++j) t[j] = y[j] + 0.5 * h * k2[j];
    const auto k3 = rhs(t);
    for (int j = 0; j < 3; ++j) t[j] = y[j] + h * k3[j];
    const auto k4 = rhs(t);
    for (int j = 0; j < 3; ++j) {
      y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
  }
  return y;
}

inline double central_diff(const std::function<double(double)>& f, double x,
                           double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// 4th-order central second derivative.
inline double second_diff4(const std::function<double(double)>& f, double x,
                           double h) {
  return (-f(x - 2 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) -
          f(x + 2 * h)) /
         (12.0 * h * h);
}

}  // namespace oracles

#endif  // GNLS_TESTS_ORACLES_HPP
