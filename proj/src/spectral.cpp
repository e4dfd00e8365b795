#include "gnls/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <nlohmann/json.hpp>

#include "gnls/elliptic.hpp"

namespace gnls::spectral {

namespace {

using boundary::CouplingKind;
using boundary::ExtensionSpec;
using graph::Complex;
using waves::StandingWave;

constexpr double kDenseCutoff = 1700;

double potential_loop(const StandingWave* wave, OperatorKind which, double x) {
  if (which == OperatorKind::HLinear) return 0.0;
  const double w = wave->dn.omega;
  const double phi = wave->loop_value(x);
  return which == OperatorKind::LPlus ? w - 3.0 * phi * phi : w - phi * phi;
}

double potential_ray(const StandingWave* wave, OperatorKind which, double x) {
  if (which == OperatorKind::HLinear) return 0.0;
  const double w = wave->dn.omega;
  const double psi = wave->ray_value(x);
  return which == OperatorKind::LPlus ? w - 3.0 * psi * psi : w - psi * psi;
}

}  // namespace

double AssembledOperator::loop_x(int i) const { return -graph.L + h0 * i; }

double AssembledOperator::ray_x(int q) const {
  const double from_vertex = shared_vertex ? (q + 1) * h1 : q * h1;
  return graph.vertex() + from_vertex;
}

AssembledOperator assemble(const StandingWave* wave, OperatorKind which,
                           const ExtensionSpec& ext, GridSpec grid,
                           SubspaceMode mode) {
  if (ext.kind != CouplingKind::DeltaPrimeLoop && ext.kind != CouplingKind::Delta) {
    throw std::invalid_argument(
        "assemble: only delta and delta-prime-loop couplings are discretized");
  }
  if (which != OperatorKind::HLinear && wave == nullptr) {
    throw std::invalid_argument("assemble: linearization needs a standing wave");
  }
  if (mode == SubspaceMode::HalfSplit &&
      (ext.graph.N % 2 != 0 || ext.kind != CouplingKind::DeltaPrimeLoop)) {
    throw std::invalid_argument("assemble: HalfSplit needs even N and delta-prime");
  }
  AssembledOperator op;
  op.graph = ext.graph;
  op.which = which;
  op.mode = mode;
  op.omega = wave != nullptr ? wave->dn.omega : 0.0;
  op.shared_vertex = ext.kind == CouplingKind::Delta;
  if (grid.R <= 0.0) {
    grid.R = op.omega > 0.0 ? 40.0 / std::sqrt(op.omega) : 10.0 * ext.graph.L;
  }
  op.graph.R = grid.R;
  const int N = ext.graph.N;
  op.nrays = mode == SubspaceMode::HalfSplit ? 2 : N;
  op.ray_weight = mode == SubspaceMode::HalfSplit ? N / 2.0 : 1.0;
  op.n0 = grid.n0;
  op.h0 = 2.0 * ext.graph.L / grid.n0;
  op.h1 = grid.R / grid.n1;
  op.n1 = op.shared_vertex ? grid.n1 - 1 : grid.n1;

  const int n = op.n0 + op.nrays * op.n1;
  std::vector<Eigen::Triplet<double>> ts, ss;
  Eigen::VectorXd M = Eigen::VectorXd::Zero(n);
  auto add = [&](int i, int j, double v) { ts.emplace_back(i, j, v); ss.emplace_back(i, j, v); };

  // Loop block: periodic chain through the vertex (dof 0 at x = -L = L).
  for (int i = 0; i < op.n0; ++i) {
    const int j = (i + 1) % op.n0;
    add(i, i, 1.0 / op.h0);
    add(j, j, 1.0 / op.h0);
    add(i, j, -1.0 / op.h0);
    add(j, i, -1.0 / op.h0);
    M(i) += op.h0;
  }
  // Ray blocks with a Dirichlet ghost at the truncation.
  const double w = op.ray_weight;
  for (int r = 0; r < op.nrays; ++r) {
    const int off = op.ray_begin(r);
    const int head = op.shared_vertex ? 0 : off;  // dof adjacent to the vertex
    const int first = op.shared_vertex ? off : off + 1;
    // vertex-side cell
    add(head, head, w / op.h1);
    add(first, first, w / op.h1);
    add(head, first, -w / op.h1);
    add(first, head, -w / op.h1);
    M(head) += w * op.h1 / 2.0;
    for (int q = (op.shared_vertex ? 0 : 1); q < op.n1; ++q) {
      const int i = off + q;
      M(i) += w * op.h1;
      if (q + 1 < op.n1) {
        const int j = i + 1;
        add(i, j, -w / op.h1);
        add(j, i, -w / op.h1);
        add(i, i, w / op.h1);
        add(j, j, w / op.h1);
      } else {
        add(i, i, w / op.h1);  // cell against the Dirichlet ghost
      }
    }
    if (op.n1 == 1) M(off) += 0.0;
  }
  op.S.resize(n, n);
  op.S.setFromTriplets(ss.begin(), ss.end());

  // Potentials (mass-weighted nodal values).
  if (which != OperatorKind::HLinear) {
    for (int i = 0; i < op.n0; ++i) {
      ts.emplace_back(i, i, op.h0 * potential_loop(wave, which, op.loop_x(i)));
    }
    for (int r = 0; r < op.nrays; ++r) {
      const int off = op.ray_begin(r);
      if (op.shared_vertex) {
        // vertex potential: average of the incident edge values (loop value
        // already counted through the loop row above with weight h0)
        ts.emplace_back(0, 0, w * op.h1 / 2.0 * potential_ray(wave, which, op.graph.vertex()));
      }
      for (int q = 0; q < op.n1; ++q) {
        const double wq = (q == 0 && !op.shared_vertex) ? w * op.h1 / 2.0 : w * op.h1;
        ts.emplace_back(off + q, off + q, wq * potential_ray(wave, which, op.ray_x(q)));
      }
    }
  }

  // Vertex boundary term.
  if (ext.kind == CouplingKind::DeltaPrimeLoop) {
    const double Z = ext.Z;
    if (Z == 0.0) {
      throw std::invalid_argument(
          "assemble: Z = 0 turns the value-sum condition essential; it has "
          "no boundary-form representation");
    }
    for (int r = 0; r < op.nrays; ++r) {
      for (int s = 0; s < op.nrays; ++s) {
        ts.emplace_back(op.ray_vertex_dof(r), op.ray_vertex_dof(s), w * w / Z);
      }
    }
  } else {
    ts.emplace_back(0, 0, -ext.Z);
  }

  op.A.resize(n, n);
  op.A.setFromTriplets(ts.begin(), ts.end());
  op.M = std::move(M);
  return op;
}

graph::GraphFunction AssembledOperator::to_graph_function(const Eigen::VectorXcd& u) const {
  graph::GraphFunction f;
  f.spec = graph;
  f.loop_values.resize(n0 + 1);
  for (int i = 0; i < n0; ++i) f.loop_values[i] = u(i);
  f.loop_values[n0] = u(0);
  const int per_ray = shared_vertex ? n1 + 2 : n1 + 1;
  f.ray_values.assign(graph.N, std::vector<Complex>(per_ray));
  for (int j = 0; j < graph.N; ++j) {
    const int r = mode == SubspaceMode::HalfSplit ? (j < graph.N / 2 ? 0 : 1) : j;
    auto& row = f.ray_values[j];
    int q0 = 0;
    if (shared_vertex) row[q0++] = u(0);
    for (int q = 0; q < n1; ++q) row[q0 + q] = u(ray_begin(r) + q);
    row[per_ray - 1] = 0.0;
  }
  return f;
}

Eigen::VectorXcd AssembledOperator::from_graph_function(const graph::GraphFunction& f) const {
  if (f.n0() != n0 + 1) throw std::invalid_argument("from_graph_function: loop grid mismatch");
  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(size());
  for (int i = 0; i < n0; ++i) u(i) = f.loop_values[i];
  for (int r = 0; r < nrays; ++r) {
    const int j = mode == SubspaceMode::HalfSplit ? (r == 0 ? 0 : graph.N / 2) : r;
    const int q0 = shared_vertex ? 1 : 0;
    for (int q = 0; q < n1; ++q) u(ray_begin(r) + q) = f.ray_values[j][q0 + q];
  }
  return u;
}

namespace {

EigenPairs dense_lowest(const SpMat& A, const Eigen::VectorXd& M, int m) {
  const int n = static_cast<int>(A.rows());
  const Eigen::VectorXd isq = M.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd B = Eigen::MatrixXd(A);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) B(i, j) *= isq(i) * isq(j);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
  EigenPairs out;
  const int take = std::min(m, n);
  out.values = es.eigenvalues().head(take);
  out.vectors.resize(n, take);
  for (int c = 0; c < take; ++c) {
    out.vectors.col(c) = es.eigenvectors().col(c).cwiseProduct(isq);
  }
  return out;
}

int ldlt_negative_count(const SpMat& K, double jitter_scale) {
  for (int attempt = 0; attempt < 4; ++attempt) {
    SpMat Kj = K;
    if (attempt > 0) {
      SpMat I(K.rows(), K.cols());
      I.setIdentity();
      Kj = K + I * (jitter_scale * std::pow(10.0, attempt - 9));
    }
    Eigen::SimplicialLDLT<SpMat> ldlt(Kj);
    if (ldlt.info() != Eigen::Success) continue;
    const Eigen::VectorXd d = ldlt.vectorD();
    bool finite = true;
    int neg = 0;
    for (int i = 0; i < d.size(); ++i) {
      if (!std::isfinite(d(i)) || d(i) == 0.0) {
        finite = false;
        break;
      }
      if (d(i) < 0.0) ++neg;
    }
    if (finite) return neg;
  }
  throw std::runtime_error("count_below: LDLT factorization failed");
}

}  // namespace

int count_below(const SpMat& A, const Eigen::VectorXd& M, double tau) {
  SpMat K = A;
  SpMat D(A.rows(), A.cols());
  std::vector<Eigen::Triplet<double>> td;
  for (int i = 0; i < M.size(); ++i) td.emplace_back(i, i, -tau * M(i));
  D.setFromTriplets(td.begin(), td.end());
  K = A + D;
  const double scale = std::max(1.0, K.coeffs().cwiseAbs().maxCoeff());
  return ldlt_negative_count(K, scale);
}

namespace {

// Shift-invert Lanczos in the M-inner product with full reorthogonalization.
EigenPairs lanczos_lowest(const SpMat& A, const Eigen::VectorXd& M, int m) {
  const int n = static_cast<int>(A.rows());
  // Certified lower bound: Gershgorin on the pencil, then LDLT inertia.
  double bound = 0.0;
  {
    Eigen::VectorXd rowsum = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < A.outerSize(); ++k) {
      for (SpMat::InnerIterator it(A, k); it; ++it) {
        if (it.row() == it.col()) {
          diag(it.row()) += it.value();
        } else {
          rowsum(it.row()) += std::abs(it.value());
        }
      }
    }
    bound = ((diag - rowsum).cwiseQuotient(M)).minCoeff() - 1.0;
  }
  double lo = bound;
  for (int tries = 0; tries < 8 && count_below(A, M, lo) != 0; ++tries) {
    lo = 2.0 * lo - 1.0;
  }
  // Walk the certified bound up toward the smallest eigenvalue so the
  // shift-inverted spectrum keeps a usable separation.
  double hi = std::max(1.0, std::abs(lo));
  for (int tries = 0; tries < 8 && count_below(A, M, hi) == 0; ++tries) {
    hi = 2.0 * hi + 1.0;
  }
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (count_below(A, M, mid) == 0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double sigma = lo - 0.01 * (1.0 + std::abs(lo));
  SpMat K = A;
  {
    std::vector<Eigen::Triplet<double>> td;
    for (int i = 0; i < n; ++i) td.emplace_back(i, i, -sigma * M(i));
    SpMat D(n, n);
    D.setFromTriplets(td.begin(), td.end());
    K = A + D;
  }
  Eigen::SimplicialLDLT<SpMat> solver(K);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("lanczos: shifted factorization failed");
  }

  const int maxit = std::min(n, std::max(200, 20 * m + 80));
  std::vector<Eigen::VectorXd> V;
  std::vector<double> alpha, beta;
  std::mt19937_64 rng(20240u);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = gauss(rng);
  v /= std::sqrt(v.dot(M.cwiseProduct(v)));
  V.push_back(v);

  auto ritz = [&](int jdim, bool* converged) {
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(jdim, jdim);
    for (int i = 0; i < jdim; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < jdim) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const int take = std::min(m, jdim);
    EigenPairs out;
    out.values.resize(take);
    out.vectors.resize(n, take);
    *converged = true;
    // Largest theta of the shift-inverted operator <-> smallest lambda.
    for (int c = 0; c < take; ++c) {
      const int idx = jdim - 1 - c;
      const double theta = es.eigenvalues()(idx);
      const double lam = sigma + 1.0 / theta;
      Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < jdim; ++i) y += es.eigenvectors()(i, idx) * V[i];
      y /= std::sqrt(y.dot(M.cwiseProduct(y)));
      out.values(take - 1 - c) = lam;
      out.vectors.col(take - 1 - c) = y;
      const Eigen::VectorXd resid = A * y - lam * M.cwiseProduct(y);
      const double scale = (A * y).norm() + std::abs(lam) * M.cwiseProduct(y).norm();
      if (resid.norm() > 1e-9 * std::max(scale, 1.0)) *converged = false;
    }
    // The largest-theta pairs come out in descending lambda; re-sort.
    std::vector<int> order(take);
    for (int i = 0; i < take; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int p, int q) { return out.values(p) < out.values(q); });
    EigenPairs sorted;
    sorted.values.resize(take);
    sorted.vectors.resize(n, take);
    for (int c = 0; c < take; ++c) {
      sorted.values(c) = out.values(order[c]);
      sorted.vectors.col(c) = out.vectors.col(order[c]);
    }
    return sorted;
  };

  for (int j = 0; j < maxit; ++j) {
    Eigen::VectorXd wv = solver.solve(M.cwiseProduct(V[j]));
    const double a = wv.dot(M.cwiseProduct(V[j]));
    alpha.push_back(a);
    wv -= a * V[j];
    if (j > 0) wv -= beta[j - 1] * V[j - 1];
    for (const auto& q : V) wv -= q.dot(M.cwiseProduct(wv)) * q;  // full reorth
    const double b = std::sqrt(std::max(wv.dot(M.cwiseProduct(wv)), 0.0));
    const int jdim = j + 1;
    const bool breakdown = b < 1e-13;
    const bool check_now =
        breakdown || jdim == maxit || (jdim >= m + 6 && jdim % 10 == 0);
    if (check_now) {
      bool converged = false;
      EigenPairs out = ritz(jdim, &converged);
      if (converged || breakdown) return out;
      if (jdim == maxit) {
        throw std::runtime_error("lanczos: iteration cap reached without convergence");
      }
    }
    if (breakdown) break;
    beta.push_back(b);
    V.push_back(wv / b);
  }
  throw std::runtime_error("lanczos: unexpected exit");
}

}  // namespace

EigenPairs lowest_eigenpairs(const SpMat& A, const Eigen::VectorXd& M, int m) {
  if (m > 20) throw std::invalid_argument("lowest_eigenpairs: m must be <= 20");
  if (A.rows() <= kDenseCutoff) return dense_lowest(A, M, m);
  return lanczos_lowest(A, M, m);
}

EigenPairs lowest_eigenpairs(const AssembledOperator& op, int m) {
  return lowest_eigenpairs(op.A, op.M, m);
}

void loop_block(const AssembledOperator& op, SpMat& A, Eigen::VectorXd& M) {
  if (op.shared_vertex) {
    throw std::invalid_argument("loop_block: delta coupling does not decouple");
  }
  A = op.A.topLeftCorner(op.n0, op.n0);
  M = op.M.head(op.n0);
}

void star_block(const AssembledOperator& op, SpMat& A, Eigen::VectorXd& M) {
  if (op.shared_vertex) {
    throw std::invalid_argument("star_block: delta coupling does not decouple");
  }
  const int ns = op.size() - op.n0;
  A = op.A.bottomRightCorner(ns, ns);
  M = op.M.tail(ns);
}

double dnoidal_ground_eigenvalue(const waves::DnoidalParams& p) {
  const double k2 = p.k * p.k;
  return -p.omega - (2.0 * p.omega / (2.0 - k2)) * std::sqrt(1.0 - k2 + k2 * k2);
}

double dnoidal_ground_eigenfunction(const waves::DnoidalParams& p, double a, double x) {
  const double k2 = p.k * p.k;
  const auto j = elliptic::jacobi_sn_cn_dn_kp(p.eta1 * (x - a) / 1.41421356237309504880,
                                              p.k, p.kprime);
  return 1.0 - (1.0 + k2 - std::sqrt(1.0 - k2 + k2 * k2)) * j.sn * j.sn;
}

namespace {

struct GridCounts {
  int morse = 0;
  int nullity = 0;
};

GridCounts pencil_counts(const SpMat& A, const Eigen::VectorXd& M, double tol) {
  GridCounts c;
  c.morse = count_below(A, M, -tol);
  c.nullity = count_below(A, M, tol) - c.morse;
  return c;
}

}  // namespace

SpectralReport morse_and_nullity(const StandingWave& wave, const ExtensionSpec& ext,
                                 GridSpec grid, SubspaceMode mode) {
  const double w = wave.dn.omega;
  if (ext.kind == CouplingKind::DeltaPrimeLoop && ext.Z != 0.0) {
    const double t1 = wave.N * wave.N / (ext.Z * ext.Z);
    for (const double t : {t1, 2.0 * t1}) {
      if (std::abs(w - t) <= 1e-6 * t) {
        throw std::domain_error(
            "morse_and_nullity: omega inside the guard band of a kernel "
            "transition (N^2/Z^2 or 2N^2/Z^2)");
      }
    }
  }
  SpectralReport rep;
  rep.tol_neg = 1e-3 * w;
  rep.tol_null = 1e-3 * w;
  rep.grid = grid;
  const GridSpec fine{2 * grid.n0, 2 * grid.n1, grid.R};
  const AssembledOperator op1 = assemble(&wave, OperatorKind::LPlus, ext, grid, mode);
  const AssembledOperator op2 = assemble(&wave, OperatorKind::LPlus, ext, fine, mode);
  const GridCounts c1 = pencil_counts(op1.A, op1.M, rep.tol_null);
  const GridCounts c2 = pencil_counts(op2.A, op2.M, rep.tol_null);
  rep.conclusive = c1.morse == c2.morse && c1.nullity == c2.nullity;
  rep.morse_index = c2.morse;
  rep.nullity = c2.nullity;
  if (!op2.shared_vertex) {
    SpMat Al, As;
    Eigen::VectorXd Ml, Ms;
    loop_block(op2, Al, Ml);
    star_block(op2, As, Ms);
    const GridCounts cl = pencil_counts(Al, Ml, rep.tol_null);
    const GridCounts cs = pencil_counts(As, Ms, rep.tol_null);
    rep.loop_morse = cl.morse;
    rep.loop_nullity = cl.nullity;
    rep.star_morse = cs.morse;
    rep.star_nullity = cs.nullity;
  }
  const int m = 8;
  const EigenPairs e1 = lowest_eigenpairs(op1, m);
  const EigenPairs e2 = lowest_eigenpairs(op2, m);
  const int take = std::min<int>(e1.values.size(), e2.values.size());
  rep.lowest_h.assign(e1.values.data(), e1.values.data() + take);
  rep.lowest_h2.assign(e2.values.data(), e2.values.data() + take);
  rep.lowest.resize(take);
  for (int i = 0; i < take; ++i) {
    rep.lowest[i] = (4.0 * e2.values(i) - e1.values(i)) / 3.0;
  }
  if (!rep.conclusive) {
    std::ostringstream os;
    os << "counts differ between grids: (" << c1.morse << "," << c1.nullity
       << ") vs (" << c2.morse << "," << c2.nullity << ")";
    rep.note = os.str();
  }
  return rep;
}

LMinusReport l_minus_nonnegativity(const StandingWave& wave, const ExtensionSpec& ext,
                                   GridSpec grid) {
  if (!(wave.has_tails && wave.Z < 0.0)) {
    throw std::invalid_argument("l_minus_nonnegativity: needs a Z < 0 tail wave");
  }
  const AssembledOperator op = assemble(&wave, OperatorKind::LMinus, ext, grid);
  const EigenPairs e = lowest_eigenpairs(op, 5);
  LMinusReport rep;
  const double tol = 1e-3 * wave.dn.omega;
  rep.lowest = e.values(0);
  Eigen::VectorXd prof(op.size());
  for (int i = 0; i < op.n0; ++i) prof(i) = wave.loop_value(op.loop_x(i));
  for (int r = 0; r < op.nrays; ++r) {
    for (int q = 0; q < op.n1; ++q) {
      prof(op.ray_begin(r) + q) = wave.ray_value(op.ray_x(q));
    }
  }
  const double pn2 = prof.dot(op.M.cwiseProduct(prof));
  double inside = 0.0;
  rep.first_positive = std::numeric_limits<double>::infinity();
  for (int i = 0; i < e.values.size(); ++i) {
    if (std::abs(e.values(i)) <= tol) {
      ++rep.kernel_dim;
      const double c = e.vectors.col(i).dot(op.M.cwiseProduct(prof));
      inside += c * c;
    } else if (e.values(i) > tol) {
      rep.first_positive = std::min(rep.first_positive, e.values(i));
    }
  }
  rep.kernel_alignment = std::sqrt(std::max(inside / pn2, 0.0));
  rep.nonnegative = rep.lowest >= -tol;
  return rep;
}

namespace {

// Cubic midpoint interpolation f(x_i + h/2); one-sided at the ends.
double midpoint(const std::vector<double>& f, int i) {
  const int n = static_cast<int>(f.size());
  if (i == 0) {
    return 0.3125 * f[0] + 0.9375 * f[1] - 0.3125 * f[2] + 0.0625 * f[3];
  }
  if (i + 2 > n - 1) {
    return 0.0625 * f[n - 4] - 0.3125 * f[n - 3] + 0.9375 * f[n - 2] +
           0.3125 * f[n - 1];
  }
  return (-f[i - 1] + 9.0 * f[i] + 9.0 * f[i + 1] - f[i + 2]) / 16.0;
}

}  // namespace

ResolventReport resolvent_check(const ExtensionSpec& ext, double lambda,
                                const graph::GraphFunction& f) {
  if (ext.kind != CouplingKind::DeltaPrimeLoop) {
    throw std::invalid_argument("resolvent_check: delta-prime-loop coupling only");
  }
  if (!(lambda < 0.0)) throw std::invalid_argument("resolvent_check: lambda must be < 0");
  const double kap = std::sqrt(-lambda);
  const int N = f.spec.N;
  const double L = f.spec.L;
  const int n0 = f.n0(), n1 = f.n1();
  const double h0 = f.h_loop(), h1 = f.h_ray();

  // ---- loop sector: u'' - kap^2 u = f with periodic matching ----
  std::vector<double> fl(n0);
  for (int i = 0; i < n0; ++i) fl[i] = f.loop_values[i].real();
  std::vector<double> Ip(n0, 0.0), Im(n0, 0.0);  // int e^{+-kap(x-s)} f ds from -L
  const double ep = std::exp(kap * h0), em = std::exp(-kap * h0);
  const double eph = std::exp(kap * h0 / 2.0), emh = std::exp(-kap * h0 / 2.0);
  for (int i = 0; i + 1 < n0; ++i) {
    const double fm = midpoint(fl, i);
    Ip[i + 1] = ep * Ip[i] + h0 / 6.0 * (ep * fl[i] + 4.0 * eph * fm + fl[i + 1]);
    Im[i + 1] = em * Im[i] + h0 / 6.0 * (em * fl[i] + 4.0 * emh * fm + fl[i + 1]);
  }
  std::vector<double> up(n0), upd(n0);
  for (int i = 0; i < n0; ++i) {
    up[i] = (Ip[i] - Im[i]) / (2.0 * kap);
    upd[i] = (Ip[i] + Im[i]) / 2.0;
  }
  // phi = A e^{kap x} + B e^{-kap x} + u_p, periodic value and derivative.
  Eigen::Matrix2d Mlp;
  Eigen::Vector2d blp;
  const double eL = std::exp(kap * L), eLm = std::exp(-kap * L);
  Mlp << (eLm - eL), (eL - eLm), kap * (eLm - eL), -kap * (eL - eLm);
  blp << up[n0 - 1] - up[0], upd[n0 - 1] - upd[0];
  Eigen::FullPivLU<Eigen::Matrix2d> lu(Mlp);
  if (!lu.isInvertible()) {
    throw std::runtime_error("resolvent_check: singular loop system");
  }
  const Eigen::Vector2d AB = lu.solve(blp);

  // ---- star sector: psi_j = A_j e^{-kap (x-L)} + psi_{j,p} ----
  std::vector<std::vector<double>> psi_p(N, std::vector<double>(n1));
  std::vector<double> psi_p_d0(N), psi_p_v0(N);
  const double ep1 = std::exp(-kap * h1), eph1 = std::exp(-kap * h1 / 2.0);
  bool rays_zero = true;
  for (int j = 0; j < N; ++j) {
    std::vector<double> g(n1);
    for (int q = 0; q < n1; ++q) {
      g[q] = f.ray_values[j][q].real();
      if (g[q] != 0.0) rays_zero = false;
    }
    std::vector<double> Jm(n1, 0.0), Jp(n1, 0.0);
    for (int q = 0; q + 1 < n1; ++q) {
      const double gm = midpoint(g, q);
      Jm[q + 1] = ep1 * Jm[q] + h1 / 6.0 * (ep1 * g[q] + 4.0 * eph1 * gm + g[q + 1]);
    }
    for (int q = n1 - 2; q >= 0; --q) {
      const double gm = midpoint(g, q);
      Jp[q] = ep1 * Jp[q + 1] + h1 / 6.0 * (g[q] + 4.0 * eph1 * gm + ep1 * g[q + 1]);
    }
    for (int q = 0; q < n1; ++q) psi_p[j][q] = -(Jm[q] + Jp[q]) / (2.0 * kap);
    psi_p_v0[j] = psi_p[j][0];
    psi_p_d0[j] = (Jm[0] - Jp[0]) / 2.0;
  }
  // Vertex conditions: all psi_j'(L) equal, sum psi_j(L) = Z psi_1'(L).
  Eigen::MatrixXd Ms = Eigen::MatrixXd::Zero(N, N);
  Eigen::VectorXd bs = Eigen::VectorXd::Zero(N);
  for (int j = 0; j + 1 < N; ++j) {
    Ms(j, j) = -kap;
    Ms(j, j + 1) = kap;
    bs(j) = psi_p_d0[j + 1] - psi_p_d0[j];
  }
  for (int j = 0; j < N; ++j) Ms(N - 1, j) = 1.0;
  Ms(N - 1, 0) += ext.Z * kap;
  double sum_pv = 0.0;
  for (int j = 0; j < N; ++j) sum_pv += psi_p_v0[j];
  bs(N - 1) = ext.Z * psi_p_d0[0] - sum_pv;
  Eigen::FullPivLU<Eigen::MatrixXd> lus(Ms);
  if (!lus.isInvertible()) {
    throw std::runtime_error(
        "resolvent_check: singular star system (lambda at a star eigenvalue)");
  }
  const Eigen::VectorXd Aj = lus.solve(bs);

  // ---- assemble the solution and measure the residual ----
  ResolventReport rep;
  rep.solution.spec = f.spec;
  rep.solution.loop_values.resize(n0);
  for (int i = 0; i < n0; ++i) {
    const double x = f.loop_x(i);
    rep.solution.loop_values[i] =
        AB(0) * std::exp(kap * x) + AB(1) * std::exp(-kap * x) + up[i];
  }
  rep.solution.ray_values.assign(N, std::vector<Complex>(n1));
  double leak = 0.0;
  for (int j = 0; j < N; ++j) {
    for (int q = 0; q < n1; ++q) {
      const double s = q * h1;
      const double val = Aj(j) * std::exp(-kap * s) + psi_p[j][q];
      rep.solution.ray_values[j][q] = val;
      leak = std::max(leak, std::abs(val));
    }
  }
  rep.ray_leakage = rays_zero ? leak : -1.0;

  double fmax = 1e-300, rmax = 0.0;
  for (int i = 0; i < n0; ++i) fmax = std::max(fmax, std::abs(fl[i]));
  for (int j = 0; j < N; ++j) {
    for (int q = 0; q < n1; ++q) {
      fmax = std::max(fmax, std::abs(f.ray_values[j][q].real()));
    }
  }
  auto second_deriv = [](const std::vector<Complex>& u, int i, double h) {
    return (-u[i - 2] + 16.0 * u[i - 1] - 30.0 * u[i] + 16.0 * u[i + 1] - u[i + 2]) /
           (12.0 * h * h);
  };
  for (int i = 2; i + 2 < n0; ++i) {
    const Complex r = lambda * rep.solution.loop_values[i] +
                      second_deriv(rep.solution.loop_values, i, h0) - fl[i];
    rmax = std::max(rmax, std::abs(r));
  }
  for (int j = 0; j < N; ++j) {
    for (int q = 2; q + 2 < n1; ++q) {
      const Complex r = lambda * rep.solution.ray_values[j][q] +
                        second_deriv(rep.solution.ray_values[j], q, h1) -
                        f.ray_values[j][q].real();
      rmax = std::max(rmax, std::abs(r));
    }
  }
  rep.residual_rel = rmax / fmax;
  return rep;
}

std::string to_json(const SpectralReport& rep) {
  nlohmann::json j;
  j["morse_index"] = rep.morse_index;
  j["nullity"] = rep.nullity;
  j["loop_morse"] = rep.loop_morse;
  j["loop_nullity"] = rep.loop_nullity;
  j["star_morse"] = rep.star_morse;
  j["star_nullity"] = rep.star_nullity;
  j["lowest"] = rep.lowest;
  j["lowest_coarse"] = rep.lowest_h;
  j["lowest_fine"] = rep.lowest_h2;
  j["tol_neg"] = rep.tol_neg;
  j["tol_null"] = rep.tol_null;
  j["grid"] = {{"n0", rep.grid.n0}, {"n1", rep.grid.n1}, {"R", rep.grid.R}};
  j["extrapolated"] = rep.extrapolated;
  j["conclusive"] = rep.conclusive;
  j["note"] = rep.note;
  return j.dump(2);
}

}  // namespace gnls::spectral
