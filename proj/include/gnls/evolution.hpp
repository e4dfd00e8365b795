#ifndef GNLS_EVOLUTION_HPP
#define GNLS_EVOLUTION_HPP

// Time integration of the cubic NLS i U_t + U_xx + |U|^2 U = 0 under the
// assembled vertex coupling, by Strang splitting: an exact pointwise phase
// rotation for the nonlinearity around a Crank-Nicolson step for the
// linear part. Both sub-steps conserve the discrete mass exactly (up to
// the linear-solver tolerance), so mass drift is a solver health monitor.

#include <complex>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gnls/boundary.hpp"
#include "gnls/spectral.hpp"
#include "gnls/standing_waves.hpp"

namespace gnls::evolution {

struct EvolutionConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  spectral::GridSpec grid;
  int monitor_every = 20;  // monitor cadence in steps
  bool track_membership = false;
};

// Crank-Nicolson + phase-rotation stepper with the factorization cached.
class Stepper {
 public:
  Stepper(const spectral::AssembledOperator& H, double dt);
  void step(Eigen::VectorXcd& u) const;
  // Crank-Nicolson linear sub-step alone (no phase rotation).
  void step_linear(Eigen::VectorXcd& u) const;
  const spectral::AssembledOperator& op() const { return *op_; }
  double dt() const { return dt_; }

 private:
  std::shared_ptr<const spectral::AssembledOperator> op_;
  double dt_;
  Eigen::SparseMatrix<std::complex<double>> Km_;
  Eigen::SparseLU<Eigen::SparseMatrix<std::complex<double>>> lu_;
};

// Discrete mass sum m_i |u_i|^2 and energy
// 1/2 <A u, u> - 1/4 sum m_i |u_i|^4 (A carries the vertex term; for a
// delta-prime coupling that term is (1/Z)|sum_j w_j(L)|^2).
double discrete_mass(const spectral::AssembledOperator& H, const Eigen::VectorXcd& u);
double discrete_energy(const spectral::AssembledOperator& H, const Eigen::VectorXcd& u);

struct OrbitDistance {
  double t = 0.0;
  double theta_star = 0.0;
  double d_h1 = 0.0;
};

struct MonitorRecord {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double d_h1 = 0.0;
  double theta_star = 0.0;
  double max_amplitude = 0.0;
  double membership = -1.0;
};

enum class PerturbationKind {
  // Smooth even bump on the loop, H1-orthogonalized against the profile.
  GenericLoop,
  // The symmetric-subspace ray direction (0, Psi', .., Psi', -Psi', ..)
  // used as the instability probe (N even).
  SymmetricRays,
};

struct ExperimentResult {
  std::vector<MonitorRecord> series;
  double d0 = 0.0;            // injected perturbation size, H1
  double profile_h1 = 0.0;    // ||Theta||_H1
  bool blew_up = false;
  double t_threshold = -1.0;  // first time d >= 50 d0, if any
  std::string verdict;        // STABLE-CONSISTENT / INSTABILITY-CONSISTENT / UNCLASSIFIED
};

// Optimal phase by golden-section minimization of ||u - e^{i theta} ref||_H1,
// seeded at the L2 phase arg<ref, u>.
OrbitDistance orbit_distance(const spectral::AssembledOperator& H,
                             const Eigen::VectorXcd& u, const Eigen::VectorXcd& ref);

// Integrates the perturbed standing wave and classifies the run.
// Verdict heuristics (engineering thresholds, not proved rates):
// STABLE-CONSISTENT when max_t d <= 5 d0, INSTABILITY-CONSISTENT when
// d >= 50 d0 before t_end. Blow-up (amplitude > 10x initial) aborts.
ExperimentResult orbital_experiment(const waves::StandingWave& wave,
                                    const boundary::ExtensionSpec& ext,
                                    PerturbationKind kind, double eps,
                                    const EvolutionConfig& cfg);

// Plain run from given initial data (monitors only, no verdict).
ExperimentResult evolve(const spectral::AssembledOperator& H, Eigen::VectorXcd u,
                        const boundary::ExtensionSpec& ext, const EvolutionConfig& cfg,
                        const Eigen::VectorXcd* reference = nullptr);

// Sample a standing wave onto the dof grid of an assembled operator.
Eigen::VectorXcd sample_on_dofs(const spectral::AssembledOperator& H,
                                const waves::StandingWave& wave);

void write_series_csv(const ExperimentResult& r, std::ostream& os);

}  // namespace gnls::evolution

#endif  // GNLS_EVOLUTION_HPP
