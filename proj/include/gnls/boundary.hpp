#ifndef GNLS_BOUNDARY_HPP
#define GNLS_BOUNDARY_HPP

// Krein boundary-system machinery: the indefinite forms P+/P- on the
// boundary spaces, the unitarity predicate M^H P- M = P+ that certifies a
// boundary matrix as inducing a self-adjoint vertex coupling, canonical
// coupling families (delta, delta-prime, subspace-parameterized), and
// residual checks of boundary traces against a coupling.
//
// Constraint rows act on the full trace vector in the TraceVector layout
//   (phi(-L), phi'(-L), psi_1(L), psi_1'(L), ..., psi_N(L), psi_N'(L),
//    phi(L), phi'(L)),
// i.e. 2(N+1) + 2 columns.

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "gnls/graph.hpp"

namespace gnls::boundary {

using graph::GraphFunction;
using graph::GraphSpec;
using graph::TraceVector;

// Block-diagonal boundary form with 2x2 blocks [[0,1],[-1,0]].
Eigen::MatrixXd krein_P_plus(int N);
Eigen::MatrixXd krein_P_minus(int N);  // P_plus / (N+1)

struct UnitarityReport {
  bool unitary = false;
  double residual = 0.0;       // max-norm of M^H P- M - P+
  double smallest_singular = 0.0;
};

// True iff ||M^H P- M - P+||_max <= 1e-10 and M has full rank
// (all singular values > 1e-10 ||M||). M must be 2(N+1) x 2(N+1).
UnitarityReport is_krein_unitary(const Eigen::MatrixXcd& M, int N);

enum class CouplingKind : std::uint8_t {
  Matrix,
  Delta,
  DeltaPrime,
  DeltaPrimeLoop,
  Subspace,
};

struct ExtensionSpec {
  CouplingKind kind = CouplingKind::Delta;
  GraphSpec graph;
  double Z = 0.0;        // Delta / DeltaPrimeLoop strength
  double Z1 = 0.0, Z2 = 0.0;  // DeltaPrime strengths
  Eigen::MatrixXcd constraints;      // rows on the full trace
  Eigen::MatrixXcd subspace_basis;   // orthonormal columns (Subspace only)
  std::optional<Eigen::MatrixXd> witness;  // Krein-unitary boundary matrix

  int N() const { return graph.N; }
  std::string kind_name() const;
};

// delta coupling of strength Z: all vertex values equal and
// phi'(L) - phi'(-L) = sum_j psi_j'(L) + Z psi_1(L). The witness boundary
// matrix uses the symmetric block family with sum m_ij = (N+1) Z.
ExtensionSpec build_delta(double Z, const GraphSpec& g);

// Two-parameter delta-prime family:
//   phi(L) = phi(-L),  phi'(L) = psi_j'(L) for all j,
//   phi'(L) - phi'(-L) = Z2/(N+1) phi(-L),
//   sum_i psi_i(L) = Z1/(N+1) psi_1'(L).
ExtensionSpec build_delta_prime(double Z1, double Z2, const GraphSpec& g);

// The Z2 = 0, Z1 = (N+1) Z specialization: continuity of phi and of all
// derivatives across the vertex, with sum_i psi_i(L) = Z psi_1'(L).
ExtensionSpec build_delta_prime_loop(double Z, const GraphSpec& g);

// Subspace-parameterized coupling: Uvec in Y and Q Uvec' in Y-perp, where
// Uvec = (phi(-L), phi(L), psi_1(L), ..., psi_N(L)) and
// Q = diag(1, -1, 1, ..., 1). Columns of `generators` span Y; they must be
// linearly independent.
ExtensionSpec build_subspace(const Eigen::MatrixXcd& generators, const GraphSpec& g);

// Coupling defined by a Krein-unitary boundary matrix M via
// M (d phi(-L), d psi(L))^T = (d phi(L), ..., d phi(L))^T.
ExtensionSpec build_matrix(const Eigen::MatrixXd& M, const GraphSpec& g);

// Coupling defined by explicit constraint rows (e.g. the T-shaped examples).
ExtensionSpec build_from_constraints(const Eigen::MatrixXcd& rows, const GraphSpec& g);

// Witness matrices for the canonical families (exposed for property tests).
// msym is the (N+1)x(N+1) symmetric parameter matrix of the delta family.
Eigen::MatrixXd delta_witness(const Eigen::MatrixXd& msym);
// Delta-prime family blocks: m11, the off-row couplings m_1j (j = 2..N+1),
// and the symmetric (N)x(N) block m_ij for i,j >= 2.
Eigen::MatrixXd delta_prime_witness(double m11, const Eigen::VectorXd& m1j,
                                    const Eigen::MatrixXd& msym_tail);

// Max-norm of (constraints * trace(u)); u must live on ext.graph.
double membership_residual(const GraphFunction& u, const ExtensionSpec& ext);
double membership_residual(const TraceVector& t, const ExtensionSpec& ext);

// Draws `trials` random smooth pairs satisfying the coupling constraints
// (traces projected onto the constraint null space, realized by Hermite
// profiles with interior bumps), extracts their traces numerically and
// evaluates the boundary form (P+ x|x')_+ - (P- y|y')_-. Returns the
// maximum absolute defect. Self-adjoint couplings stay below ~1e-6,
// limited by the trace stencils.
double greens_identity_defect(const ExtensionSpec& ext, int trials,
                              std::uint64_t seed = 0x5eed);

// One random smooth function with trace in the constraint null space
// (shared with the evolution module's admissible perturbations).
GraphFunction random_admissible_function(const ExtensionSpec& ext, int n0, int n1,
                                         std::uint64_t seed);

// Boundary form evaluated from two traces:
//   (P+ x_u | x_v) - (P0 b_u | b_v),
// with x the 2(N+1) leading components and b the trailing phi(L) pair.
std::complex<double> boundary_form(const TraceVector& tu, const TraceVector& tv);

// Human-readable rendering of the constraint rows (for CLI reports).
std::string describe_constraints(const ExtensionSpec& ext);

std::string to_json(const ExtensionSpec& ext);
ExtensionSpec from_json(const std::string& text);

}  // namespace gnls::boundary

#endif  // GNLS_BOUNDARY_HPP
