#ifndef GNLS_STANDING_WAVES_HPP
#define GNLS_STANDING_WAVES_HPP

// Closed-form standing-wave profiles of the cubic NLS on a looping-edge
// graph: periodic dn-profiles on the loop, sech tails on the half-lines,
// and the two scalar root solves that glue them (the half-period condition
// fixing the elliptic parameters, and the shift condition matching the
// loop derivative to the tail derivative at the vertex).

#include <string>
#include <vector>

#include "gnls/graph.hpp"

namespace gnls::waves {

// Parameters of the loop profile Phi_w(x) = eta1 dn(eta1 x / sqrt2; k),
// with eta1^2 + eta2^2 = 2 w, k^2 = (eta1^2 - eta2^2)/eta1^2 and the
// half-period condition sqrt2 K(k) / eta1 = L.
struct DnoidalParams {
  double omega = 0.0;
  double eta1 = 0.0;
  double eta2 = 0.0;
  double k = 0.0;
  double kprime = 0.0;  // eta2 / eta1, exact complement of k
  double L = 0.0;
};

// Frequency threshold below which no loop profile of half-period L exists.
double omega_threshold(double L);

// Solves the half-period condition for the unique eta2 in (0, sqrt(w)).
// Bisection on a strictly decreasing map; |period(eta) - L| <= 1e-12 L.
DnoidalParams solve_eta(double omega, double L);

// The half-period map itself (exposed for oracles and monotonicity checks).
double period_function(double eta, double omega);

// Loop profile and its spatial derivative, shifted by a.
double dnoidal_value(const DnoidalParams& p, double a, double x);
double dnoidal_deriv(const DnoidalParams& p, double a, double x);

// Tail profile sqrt(2w) sech(sqrt(w)(x - L) + gamma*) on a half-line,
// with gamma* = atanh(-N / (Z sqrt(w))). Requires Z < 0 and w > N^2/Z^2
// (sharp; no decaying positive tail exists otherwise).
double tail_value(double omega, double Z, int N, double L, double x);
double tail_deriv(double omega, double Z, int N, double L, double x);
double tail_shift(double omega, double Z, int N);  // gamma*

// Frequency window on which the dnoidal-plus-tail family exists.
struct AdmissibleInterval {
  double loop_threshold = 0.0;  // pi^2 / (2 L^2)
  double tail_threshold = 0.0;  // N^2 / Z^2
  double inflection_frequency = 0.0;  // 2 N^2 / Z^2
  double k0 = 0.0;  // modulus at the (clamped) infimum frequency
  double k0_frequency = 0.0;  // where k0 was evaluated
  double r1 = 0.0, r2 = 0.0;  // roots of the tangency polynomial, r1 > r2
  // Intervals (lo, hi) with hi = +inf encoded as infinity().
  std::vector<std::pair<double, double>> intervals;

  bool contains(double omega) const;
};

AdmissibleInterval admissible_interval(int N, double Z, double L);

// Which intersection of the loop orbit with the prescribed vertex
// derivative to take: Inner places the matching point between the vertex
// and the profile's inflection, Outer beyond it.
enum class ShiftBranch { Inner, Outer };

struct StandingWave {
  DnoidalParams dn;
  double a = 0.0;        // loop shift, in (0, L) when tails are present
  double Z = 0.0;        // coupling strength (tails only)
  int N = 1;
  double gamma_star = 0.0;
  bool has_tails = false;

  double loop_value(double x) const { return dnoidal_value(dn, a, x); }
  double loop_deriv(double x) const { return dnoidal_deriv(dn, a, x); }
  double ray_value(double x) const;
  double ray_deriv(double x) const;
};

// The tail-free standing wave (Phi_w, 0).
StandingWave loop_only_wave(double omega, double L, int N);

// Solves the shift condition g(w, eta, a) = 0 for a; the returned wave
// satisfies the derivative matching Phi'_{w,a}(L) = Psi'(L) to ~1e-11 and
// all delta-prime-loop constraints. Throws if g does not change sign on
// the bracket.
StandingWave solve_shift(double omega, int N, double Z, double L,
                         ShiftBranch branch = ShiftBranch::Inner);

// The shift-condition residual g at a given a (exposed for oracles).
double shift_residual(const DnoidalParams& p, int N, double Z, double a);

// Inflection points of the shifted loop profile inside [-L, L].
std::vector<double> inflection_points(const DnoidalParams& p, double a);

// Squared L2 mass: (4/L) K(k) E(k) on the loop plus 2 sqrt(w) + 2N/Z per
// tail. mass_slope differentiates in omega by centered differences with
// step 1e-5 omega, re-solving the profile at each evaluation.
double mass(const StandingWave& w);
double mass_slope(double omega, int N, double Z, double L, bool with_tails);

// Sample the wave onto a GraphFunction (R defaults to 40/sqrt(omega)).
graph::GraphFunction sample_wave(const StandingWave& w, int n0, int n1,
                                 double R = 0.0);

std::string to_json(const StandingWave& w);

}  // namespace gnls::waves

#endif  // GNLS_STANDING_WAVES_HPP
