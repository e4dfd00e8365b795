#ifndef GNLS_SPECTRAL_HPP
#define GNLS_SPECTRAL_HPP

// Discretized self-adjoint operators on the graph: the linear Hamiltonian
// with delta or delta-prime coupling and the linearization operators
// around a standing wave, with eigenvalue extraction, Morse/nullity
// counting and a semi-analytic resolvent cross-check.
//
// Assembly is form-based (lumped P1 on uniform grids): the loop block uses
// a periodic wraparound stencil, each half-line a chain with a Dirichlet
// truncation at distance R, and the vertex coupling enters as a rank-one
// boundary term ((1/Z)|sum_j w_j(L)|^2 for delta-prime, -Z|u(v)|^2 for
// delta). The resulting pencil (A, M) is symmetric with M diagonal.

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gnls/boundary.hpp"
#include "gnls/graph.hpp"
#include "gnls/standing_waves.hpp"

namespace gnls::spectral {

using SpMat = Eigen::SparseMatrix<double>;

enum class OperatorKind { HLinear, LPlus, LMinus };

// HalfSplit identifies rays 1..N/2 and rays N/2+1..N pairwise, realizing
// the symmetric subspace used by the instability analysis (N even).
enum class SubspaceMode { Full, HalfSplit };

struct GridSpec {
  int n0 = 400;   // loop cells (periodic) or chain nodes
  int n1 = 400;   // nodes per half-line
  double R = 0.0; // truncation length; 0 = use 40/sqrt(omega)
};

struct AssembledOperator {
  SpMat A;            // stiffness + potential + vertex boundary term
  SpMat S;            // pure stiffness (shared H1 metric for diagnostics)
  Eigen::VectorXd M;  // lumped mass diagonal
  int n0 = 0;         // loop dof count
  int n1 = 0;         // dofs per (effective) ray
  int nrays = 0;      // effective ray count (N, or 2 in HalfSplit)
  double ray_weight = 1.0;
  double h0 = 0.0, h1 = 0.0;
  bool shared_vertex = false;  // delta coupling: dof 0 common to all edges
  graph::GraphSpec graph;
  OperatorKind which = OperatorKind::HLinear;
  SubspaceMode mode = SubspaceMode::Full;
  double omega = 0.0;

  int size() const { return static_cast<int>(A.rows()); }
  int ray_begin(int r) const { return n0 + r * n1; }
  int ray_vertex_dof(int r) const { return shared_vertex ? 0 : ray_begin(r); }
  double loop_x(int i) const;
  double ray_x(int q) const;

  // Map a dof vector to a GraphFunction on endpoint-inclusive grids
  // (HalfSplit vectors are expanded back to all N rays).
  graph::GraphFunction to_graph_function(const Eigen::VectorXcd& u) const;
  Eigen::VectorXcd from_graph_function(const graph::GraphFunction& f) const;
};

// wave may be null for a zero potential (HLinear always ignores it).
AssembledOperator assemble(const waves::StandingWave* wave, OperatorKind which,
                           const boundary::ExtensionSpec& ext, GridSpec grid,
                           SubspaceMode mode = SubspaceMode::Full);

struct EigenPairs {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // columns, M-orthonormal
};

// m smallest eigenpairs of the pencil (A, M): dense below ~1700 dofs,
// shift-invert Lanczos (LDLT-certified shift) above. Residuals satisfy
// ||A v - lambda M v|| <= 1e-9 scale.
EigenPairs lowest_eigenpairs(const SpMat& A, const Eigen::VectorXd& M, int m);
EigenPairs lowest_eigenpairs(const AssembledOperator& op, int m);

// Exact count of pencil eigenvalues below tau via LDLT inertia.
int count_below(const SpMat& A, const Eigen::VectorXd& M, double tau);

// Loop-sector (periodic) and star-sector sub-pencils of a delta-prime
// assembly; the blocks are exactly decoupled in the matrix.
void loop_block(const AssembledOperator& op, SpMat& A, Eigen::VectorXd& M);
void star_block(const AssembledOperator& op, SpMat& A, Eigen::VectorXd& M);

// Ground eigenvalue of the periodic operator -d^2/dx^2 + w - 3 Phi_w^2:
// -w - (2w/(2-k^2)) sqrt(1-k^2+k^4).
double dnoidal_ground_eigenvalue(const waves::DnoidalParams& p);
// Its eigenfunction 1 - (1+k^2-sqrt(1-k^2+k^4)) sn^2(eta1 (x-a)/sqrt2; k).
double dnoidal_ground_eigenfunction(const waves::DnoidalParams& p, double a, double x);

struct SpectralReport {
  std::vector<double> lowest;     // Richardson-extrapolated over (h, h/2)
  std::vector<double> lowest_h;   // coarse-grid values
  std::vector<double> lowest_h2;  // fine-grid values
  int morse_index = -1;
  int nullity = -1;
  int loop_morse = -1, loop_nullity = -1;  // loop-sector counts
  int star_morse = -1, star_nullity = -1;  // star-sector counts
  double tol_neg = 0.0, tol_null = 0.0;
  GridSpec grid;
  bool extrapolated = true;
  bool conclusive = false;  // counts agreed between the two grids
  std::string note;
};

// Counts with tol = 1e-3 omega on grids (h, h/2); requires agreement
// between the grids, otherwise flags the report inconclusive. Frequencies
// within a 1e-6 relative band of N^2/Z^2 or 2N^2/Z^2 are rejected
// (kernel-transition points).
SpectralReport morse_and_nullity(const waves::StandingWave& wave,
                                 const boundary::ExtensionSpec& ext, GridSpec grid,
                                 SubspaceMode mode = SubspaceMode::Full);

struct LMinusReport {
  double lowest = 0.0;
  int kernel_dim = 0;           // eigenvalues within the null tolerance
  double first_positive = 0.0;  // smallest eigenvalue above the tolerance
  // Norm fraction of the profile inside the near-null eigenspace. The
  // block-diagonal realization carries the loop and star kernels
  // separately, so the profile lies in their span.
  double kernel_alignment = 0.0;
  bool nonnegative = false;
};

LMinusReport l_minus_nonnegativity(const waves::StandingWave& wave,
                                   const boundary::ExtensionSpec& ext, GridSpec grid);

struct ResolventReport {
  double residual_rel = 0.0;   // ||(lambda - H) u - f|| / ||f||, max norm
  double ray_leakage = 0.0;    // max ray amplitude for loop-supported f
  graph::GraphFunction solution;
};

// Semi-analytic resolvent for the delta-prime-loop coupling at lambda < 0:
// particular solutions by exponential-kernel quadrature, homogeneous
// coefficients from the per-sector vertex conditions (the loop and star
// sectors decouple; the loop system enforces periodicity, the star system
// the delta-prime conditions). Throws if lambda hits a star eigenvalue.
ResolventReport resolvent_check(const boundary::ExtensionSpec& ext, double lambda,
                                const graph::GraphFunction& f);

std::string to_json(const SpectralReport& rep);

}  // namespace gnls::spectral

#endif  // GNLS_SPECTRAL_HPP
