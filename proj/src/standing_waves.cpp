#include "gnls/standing_waves.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "gnls/elliptic.hpp"

namespace gnls::waves {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrt2 = 1.41421356237309504880;

double kprime_of_eta(double eta, double omega) {
  return eta / std::sqrt(2.0 * omega - eta * eta);
}

}  // namespace

double omega_threshold(double L) { return kPi * kPi / (2.0 * L * L); }

double period_function(double eta, double omega) {
  const double eta1 = std::sqrt(2.0 * omega - eta * eta);
  return kSqrt2 * elliptic::complete_K_from_kprime(kprime_of_eta(eta, omega)) / eta1;
}

DnoidalParams solve_eta(double omega, double L) {
  if (!(omega > omega_threshold(L))) {
    throw std::domain_error(
        "solve_eta: omega must exceed pi^2/(2 L^2); no loop profile of "
        "half-period L exists below the threshold");
  }
  const double root_w = std::sqrt(omega);
  double lo = root_w * 1e-14;
  double hi = root_w * (1.0 - 1e-15);
  // The map is strictly decreasing in eta; sample before bisecting.
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 100; ++i) {
    const double eta = lo + (hi - lo) * i / 101.0;
    const double s = period_function(eta, omega);
    if (!(s < prev)) throw std::logic_error("solve_eta: period map not decreasing");
    prev = s;
  }
  if (!(period_function(hi, omega) < L)) {
    throw std::logic_error("solve_eta: no sign change on the bracket");
  }
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (period_function(mid, omega) > L) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 2.0 * std::numeric_limits<double>::epsilon() * hi) break;
  }
  const double eta2 = 0.5 * (lo + hi);
  DnoidalParams p;
  p.omega = omega;
  p.L = L;
  p.eta2 = eta2;
  p.eta1 = std::sqrt(2.0 * omega - eta2 * eta2);
  p.kprime = eta2 / p.eta1;
  p.k = std::sqrt((1.0 - p.kprime) * (1.0 + p.kprime));
  if (std::abs(period_function(eta2, omega) - L) > 1e-12 * L) {
    throw std::runtime_error("solve_eta: period condition not met to 1e-12 L");
  }
  return p;
}

double dnoidal_value(const DnoidalParams& p, double a, double x) {
  const auto j = elliptic::jacobi_sn_cn_dn_kp(p.eta1 * (x - a) / kSqrt2, p.k, p.kprime);
  return p.eta1 * j.dn;
}

double dnoidal_deriv(const DnoidalParams& p, double a, double x) {
  const auto j = elliptic::jacobi_sn_cn_dn_kp(p.eta1 * (x - a) / kSqrt2, p.k, p.kprime);
  return -(p.eta1 * p.eta1 * p.k * p.k / kSqrt2) * j.sn * j.cn;
}

double tail_shift(double omega, double Z, int N) {
  if (!(Z < 0.0)) throw std::domain_error("tail: requires Z < 0");
  if (!(omega > N * N / (Z * Z))) {
    throw std::domain_error(
        "tail: requires omega > N^2/Z^2 (sharp: no positive decaying tail "
        "exists at or below the threshold)");
  }
  return std::atanh(-N / (Z * std::sqrt(omega)));
}

double tail_value(double omega, double Z, int N, double L, double x) {
  const double g = tail_shift(omega, Z, N);
  const double s = std::sqrt(omega) * (x - L) + g;
  return std::sqrt(2.0 * omega) / std::cosh(s);
}

double tail_deriv(double omega, double Z, int N, double L, double x) {
  const double g = tail_shift(omega, Z, N);
  const double s = std::sqrt(omega) * (x - L) + g;
  return -std::sqrt(2.0 * omega) * std::sqrt(omega) * std::tanh(s) / std::cosh(s);
}

bool AdmissibleInterval::contains(double omega) const {
  for (const auto& [lo, hi] : intervals) {
    if (omega > lo && omega < hi) return true;
  }
  return false;
}

AdmissibleInterval admissible_interval(int N, double Z, double L) {
  if (!(Z < 0.0) || N < 1 || !(L > 0.0)) {
    throw std::domain_error("admissible_interval: requires Z < 0, N >= 1, L > 0");
  }
  AdmissibleInterval I;
  I.loop_threshold = omega_threshold(L);
  I.tail_threshold = N * N / (Z * Z);
  I.inflection_frequency = 2.0 * I.tail_threshold;
  // The modulus map only exists above the loop threshold, so the infimum
  // frequency is clamped before evaluating k0.
  I.k0_frequency = std::max(I.tail_threshold, I.loop_threshold) + 1e-9;
  I.k0 = solve_eta(I.k0_frequency, L).k;
  const double c = Z * Z * std::pow(I.k0, 4) / (16.0 * N * N);
  const double q = I.tail_threshold;
  const double disc = 1.0 - 4.0 * c * q;  // = 1 - k0^4/4, positive for k0 < 1
  if (!(disc > 0.0)) throw std::runtime_error("admissible_interval: no real roots");
  const double sq = std::sqrt(disc);
  I.r2 = 2.0 * q / (1.0 + sq);
  I.r1 = (1.0 + sq) / (2.0 * c);
  if (!(q < I.r2 && I.r2 < 2.0 * q && 2.0 * q < I.r1)) {
    throw std::runtime_error("admissible_interval: root ordering violated");
  }
  const double inf = std::numeric_limits<double>::infinity();
  const double lo1 = std::max(q, I.loop_threshold);
  if (lo1 < I.r2) I.intervals.emplace_back(lo1, I.r2);
  I.intervals.emplace_back(std::max(I.r1, I.loop_threshold), inf);
  return I;
}

double StandingWave::ray_value(double x) const {
  if (!has_tails) return 0.0;
  return tail_value(dn.omega, Z, N, dn.L, x);
}

double StandingWave::ray_deriv(double x) const {
  if (!has_tails) return 0.0;
  return tail_deriv(dn.omega, Z, N, dn.L, x);
}

StandingWave loop_only_wave(double omega, double L, int N) {
  StandingWave w;
  w.dn = solve_eta(omega, L);
  w.a = 0.0;
  w.N = N;
  w.has_tails = false;
  return w;
}

double shift_residual(const DnoidalParams& p, int N, double Z, double a) {
  const double xi = p.eta1 * (p.L - a) / kSqrt2;
  const auto j = elliptic::jacobi_sn_cn_dn_kp(xi, p.k, p.kprime);
  const double rhs =
      std::sqrt(p.omega * Z * Z - N * N) * N * kSqrt2 / (Z * Z);
  return p.k * p.k * p.eta1 * p.eta1 / kSqrt2 * j.cn * j.sn - rhs;
}

StandingWave solve_shift(double omega, int N, double Z, double L, ShiftBranch branch) {
  const AdmissibleInterval I = admissible_interval(N, Z, L);
  if (!I.contains(omega)) {
    std::ostringstream os;
    os << "solve_shift: omega=" << omega << " outside the admissible set ("
       << "loop threshold " << I.loop_threshold << ", tail threshold "
       << I.tail_threshold << ", window (" << std::max(I.tail_threshold, I.loop_threshold)
       << ", " << I.r2 << ") u (" << I.r1 << ", inf))";
    throw std::domain_error(os.str());
  }
  const DnoidalParams p = solve_eta(omega, L);
  const double x0 = elliptic::inflection_argument(p.k);
  const double d0 = kSqrt2 * x0 / p.eta1;  // distance from vertex to inflection
  double lo, hi;  // bracket in a; g has opposite signs at the ends
  const double pad = 1e-13 * L;
  if (branch == ShiftBranch::Inner) {
    lo = L - d0 + pad;
    hi = L - pad;
  } else {
    lo = pad;
    hi = L - d0 - pad;
  }
  const double glo = shift_residual(p, N, Z, lo);
  const double ghi = shift_residual(p, N, Z, hi);
  if (!(glo * ghi < 0.0)) {
    std::ostringstream os;
    os << "solve_shift: no sign change of the matching residual on the bracket "
       << "(g(" << lo << ")=" << glo << ", g(" << hi << ")=" << ghi
       << "); the admissible window is sufficient, not necessary";
    throw std::runtime_error(os.str());
  }
  // Monotone on the bracket (decreasing on Inner, increasing on Outer).
  double prev = glo;
  for (int i = 1; i <= 100; ++i) {
    const double g = shift_residual(p, N, Z, lo + (hi - lo) * i / 101.0);
    if (branch == ShiftBranch::Inner ? !(g < prev) : !(g > prev)) {
      throw std::logic_error("solve_shift: residual not monotone on bracket");
    }
    prev = g;
  }
  double a = 0.0, b = 0.0;
  double flo = glo;
  a = lo;
  b = hi;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (a + b);
    const double g = shift_residual(p, N, Z, mid);
    if ((g > 0.0) == (flo > 0.0)) {
      a = mid;
    } else {
      b = mid;
    }
    if (b - a <= std::numeric_limits<double>::epsilon() * L) break;
  }
  StandingWave w;
  w.dn = p;
  w.a = 0.5 * (a + b);
  w.Z = Z;
  w.N = N;
  w.gamma_star = tail_shift(omega, Z, N);
  w.has_tails = true;
  const double match = dnoidal_deriv(p, w.a, L) - tail_deriv(omega, Z, N, L, L);
  if (std::abs(match) > 1e-9 * std::max(1.0, std::abs(tail_deriv(omega, Z, N, L, L)))) {
    throw std::runtime_error("solve_shift: derivative matching failed");
  }
  return w;
}

std::vector<double> inflection_points(const DnoidalParams& p, double a) {
  const double L = p.L;
  const double d0 = kSqrt2 * elliptic::inflection_argument(p.k) / p.eta1;
  const double tol = 1e-12 * L;
  std::vector<double> pts;
  // Inflections of the periodic profile sit at a +- d0 modulo 2L.
  for (double y : {a + d0, a - d0}) {
    if (y > L + tol) y -= 2.0 * L;
    if (y < -L - tol) y += 2.0 * L;
    if (std::abs(y - L) <= tol || std::abs(y + L) <= tol) {
      // The inflection lands on the vertex; both chart endpoints carry it.
      pts.push_back(-L);
      pts.push_back(L);
    } else {
      pts.push_back(y);
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [&](double u, double v) { return std::abs(u - v) <= tol; }),
            pts.end());
  return pts;
}

double mass(const StandingWave& w) {
  const double loop = 4.0 / w.dn.L * elliptic::complete_K_from_kprime(w.dn.kprime) *
                      elliptic::complete_E(w.dn.k);
  if (!w.has_tails) return loop;
  const double per_tail = 2.0 * std::sqrt(w.dn.omega) + 2.0 * w.N / w.Z;
  return loop + w.N * per_tail;
}

double mass_slope(double omega, int N, double Z, double L, bool with_tails) {
  const double h = 1e-5 * omega;
  auto eval = [&](double w) {
    if (with_tails) return mass(solve_shift(w, N, Z, L));
    return mass(loop_only_wave(w, L, N));
  };
  return (eval(omega + h) - eval(omega - h)) / (2.0 * h);
}

graph::GraphFunction sample_wave(const StandingWave& w, int n0, int n1, double R) {
  graph::GraphSpec g;
  g.kind = graph::GraphKind::LoopingEdge;
  g.L = w.dn.L;
  g.N = w.N;
  g.R = R > 0.0 ? R : 40.0 / std::sqrt(w.dn.omega);
  return graph::sample(
      g, n0, n1, [&](double x) { return graph::Complex(w.loop_value(x), 0.0); },
      [&](int, double x) { return graph::Complex(w.ray_value(x), 0.0); });
}

std::string to_json(const StandingWave& w) {
  nlohmann::json j;
  j["omega"] = w.dn.omega;
  j["L"] = w.dn.L;
  j["N"] = w.N;
  j["eta1"] = w.dn.eta1;
  j["eta2"] = w.dn.eta2;
  j["k"] = w.dn.k;
  j["kprime"] = w.dn.kprime;
  j["a"] = w.a;
  j["has_tails"] = w.has_tails;
  if (w.has_tails) {
    j["Z"] = w.Z;
    j["gamma_star"] = w.gamma_star;
    j["tail_vertex_value"] = w.ray_value(w.dn.L);
    j["tail_vertex_deriv"] = w.ray_deriv(w.dn.L);
  }
  j["mass"] = mass(w);
  return j.dump(2);
}

}  // namespace gnls::waves
