#include "gnls/boundary.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace gnls::boundary {

namespace {

using Complex = std::complex<double>;

int trace_dim(int N) { return 2 * (N + 1) + 2; }

// Column indices in the full-trace layout.
int col_phi_a(int) { return 0; }
int col_dphi_a(int) { return 1; }
int col_psi(int, int j) { return 2 + 2 * j; }
int col_dpsi(int, int j) { return 3 + 2 * j; }
int col_phi_b(int N) { return 2 * (N + 1); }
int col_dphi_b(int N) { return 2 * (N + 1) + 1; }

}  // namespace

Eigen::MatrixXd krein_P_plus(int N) {
  const int n = 2 * (N + 1);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (int b = 0; b < N + 1; ++b) {
    P(2 * b, 2 * b + 1) = 1.0;
    P(2 * b + 1, 2 * b) = -1.0;
  }
  return P;
}

Eigen::MatrixXd krein_P_minus(int N) { return krein_P_plus(N) / (N + 1); }

UnitarityReport is_krein_unitary(const Eigen::MatrixXcd& M, int N) {
  const int n = 2 * (N + 1);
  if (M.rows() != n || M.cols() != n) {
    throw std::invalid_argument("is_krein_unitary: matrix must be 2(N+1) square");
  }
  UnitarityReport rep;
  const Eigen::MatrixXcd defect =
      M.adjoint() * krein_P_minus(N) * M - krein_P_plus(N);
  rep.residual = defect.cwiseAbs().maxCoeff();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
  rep.smallest_singular = svd.singularValues().minCoeff();
  const double scale = svd.singularValues().maxCoeff();
  rep.unitary = rep.residual <= 1e-10 && rep.smallest_singular > 1e-10 * scale;
  return rep;
}

std::string ExtensionSpec::kind_name() const {
  switch (kind) {
    case CouplingKind::Matrix: return "matrix";
    case CouplingKind::Delta: return "delta";
    case CouplingKind::DeltaPrime: return "delta_prime";
    case CouplingKind::DeltaPrimeLoop: return "delta_prime_loop";
    case CouplingKind::Subspace: return "subspace";
  }
  return "unknown";
}

ExtensionSpec build_delta(double Z, const GraphSpec& g) {
  g.validate();
  const int N = g.N;
  ExtensionSpec ext;
  ext.kind = CouplingKind::Delta;
  ext.graph = g;
  ext.Z = Z;
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(N + 2, trace_dim(N));
  // Continuity of all values at the vertex.
  A(0, col_phi_a(N)) = 1.0;
  A(0, col_phi_b(N)) = -1.0;
  for (int j = 0; j < N; ++j) {
    A(1 + j, col_psi(N, j)) = 1.0;
    A(1 + j, col_phi_b(N)) = -1.0;
  }
  // Flux rule phi'(L) - phi'(-L) = sum psi_j'(L) + Z psi_1(L).
  const int r = N + 1;
  A(r, col_dphi_b(N)) = 1.0;
  A(r, col_dphi_a(N)) = -1.0;
  for (int j = 0; j < N; ++j) A(r, col_dpsi(N, j)) = -1.0;
  A(r, col_psi(N, 0)) = -Z;
  ext.constraints = std::move(A);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(N + 1, N + 1);
  m.diagonal().setConstant(Z);  // sum m_ij = (N+1) Z
  ext.witness = delta_witness(m);
  return ext;
}

namespace {

ExtensionSpec build_delta_prime_impl(double Z1, double Z2, const GraphSpec& g,
                                     bool loop_variant) {
  g.validate();
  const int N = g.N;
  ExtensionSpec ext;
  ext.kind = loop_variant ? CouplingKind::DeltaPrimeLoop : CouplingKind::DeltaPrime;
  ext.graph = g;
  ext.Z1 = Z1;
  ext.Z2 = Z2;
  if (loop_variant) ext.Z = Z1 / (N + 1);
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(N + 3, trace_dim(N));
  A(0, col_phi_b(N)) = 1.0;
  A(0, col_phi_a(N)) = -1.0;
  for (int j = 0; j < N; ++j) {
    A(1 + j, col_dphi_b(N)) = 1.0;
    A(1 + j, col_dpsi(N, j)) = -1.0;
  }
  // phi'(L) - phi'(-L) = Z2/(N+1) phi(-L)
  A(N + 1, col_dphi_b(N)) = 1.0;
  A(N + 1, col_dphi_a(N)) = -1.0;
  A(N + 1, col_phi_a(N)) = -Z2 / (N + 1);
  // sum psi_i(L) = Z1/(N+1) psi_1'(L)
  for (int j = 0; j < N; ++j) A(N + 2, col_psi(N, j)) = 1.0;
  A(N + 2, col_dpsi(N, 0)) = -Z1 / (N + 1);
  ext.constraints = std::move(A);
  // Witness from the continuous-derivative block family with m_1j = -1:
  // Z2 = m11 and Z1 = sum of the tail block.
  Eigen::VectorXd m1j = Eigen::VectorXd::Constant(N, -1.0);
  Eigen::MatrixXd tail = Eigen::MatrixXd::Zero(N, N);
  tail.diagonal().setConstant(Z1 / N);
  ext.witness = delta_prime_witness(Z2, m1j, tail);
  return ext;
}

}  // namespace

ExtensionSpec build_delta_prime(double Z1, double Z2, const GraphSpec& g) {
  return build_delta_prime_impl(Z1, Z2, g, false);
}

ExtensionSpec build_delta_prime_loop(double Z, const GraphSpec& g) {
  return build_delta_prime_impl((g.N + 1) * Z, 0.0, g, true);
}

ExtensionSpec build_subspace(const Eigen::MatrixXcd& generators, const GraphSpec& g) {
  g.validate();
  const int N = g.N;
  const int dim = N + 2;
  if (generators.rows() != dim || generators.cols() < 1 || generators.cols() > dim) {
    throw std::invalid_argument("build_subspace: generators must be (N+2) x m");
  }
  // Orthonormalize and reject dependent generators.
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(generators);
  const int m = static_cast<int>(generators.cols());
  Eigen::MatrixXcd Rd = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  for (int i = 0; i < m; ++i) {
    if (std::abs(Rd(i, i)) < 1e-12 * std::sqrt(static_cast<double>(dim))) {
      throw std::invalid_argument("build_subspace: dependent generators");
    }
  }
  Eigen::MatrixXcd B = qr.householderQ() * Eigen::MatrixXcd::Identity(dim, m);

  ExtensionSpec ext;
  ext.kind = CouplingKind::Subspace;
  ext.graph = g;
  ext.subspace_basis = B;
  // Uvec = (phi(-L), phi(L), psi_1(L), ..., psi_N(L)); map to trace columns.
  std::vector<int> vcol(dim), dcol(dim);
  vcol[0] = col_phi_a(N);
  dcol[0] = col_dphi_a(N);
  vcol[1] = col_phi_b(N);
  dcol[1] = col_dphi_b(N);
  for (int j = 0; j < N; ++j) {
    vcol[2 + j] = col_psi(N, j);
    dcol[2 + j] = col_dpsi(N, j);
  }
  Eigen::VectorXd qdiag = Eigen::VectorXd::Ones(dim);
  qdiag(1) = -1.0;

  const Eigen::MatrixXcd proj_out = Eigen::MatrixXcd::Identity(dim, dim) - B * B.adjoint();
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(dim - m + m, trace_dim(N));
  // Rows 0..dim-m-1: Uvec in Y, expressed via an orthonormal basis of Y-perp.
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(proj_out, Eigen::ComputeFullU);
  int r = 0;
  for (int i = 0; i < dim && r < dim - m; ++i) {
    if (svd.singularValues()(i) > 0.5) {
      const Eigen::VectorXcd w = svd.matrixU().col(i);
      for (int c = 0; c < dim; ++c) A(r, vcol[c]) = std::conj(w(c));
      ++r;
    }
  }
  // Rows dim-m..dim-1: Q Uvec' orthogonal to Y, i.e. B^H (Q Uvec') = 0.
  for (int i = 0; i < m; ++i, ++r) {
    for (int c = 0; c < dim; ++c) A(r, dcol[c]) = std::conj(B(c, i)) * qdiag(c);
  }
  ext.constraints = std::move(A);
  return ext;
}

ExtensionSpec build_matrix(const Eigen::MatrixXd& M, const GraphSpec& g) {
  g.validate();
  const int N = g.N;
  const int n = 2 * (N + 1);
  if (M.rows() != n || M.cols() != n) {
    throw std::invalid_argument("build_matrix: boundary matrix must be 2(N+1) square");
  }
  ExtensionSpec ext;
  ext.kind = CouplingKind::Matrix;
  ext.graph = g;
  ext.witness = M;
  // M x = (d phi(L), ..., d phi(L)) with x the leading 2(N+1) trace block.
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n, trace_dim(N));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) A(i, j) = M(i, j);
    A(i, i % 2 == 0 ? col_phi_b(N) : col_dphi_b(N)) -= 1.0;
  }
  ext.constraints = std::move(A);
  return ext;
}

ExtensionSpec build_from_constraints(const Eigen::MatrixXcd& rows, const GraphSpec& g) {
  g.validate();
  if (rows.cols() != trace_dim(g.N)) {
    throw std::invalid_argument("build_from_constraints: wrong column count");
  }
  ExtensionSpec ext;
  ext.kind = CouplingKind::Matrix;
  ext.graph = g;
  ext.constraints = rows;
  return ext;
}

Eigen::MatrixXd delta_witness(const Eigen::MatrixXd& msym) {
  const int blocks = static_cast<int>(msym.rows());
  if (msym.cols() != blocks || !msym.isApprox(msym.transpose(), 1e-12)) {
    throw std::invalid_argument("delta_witness: parameter matrix must be symmetric");
  }
  const int N = blocks - 1;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * blocks, 2 * blocks);
  for (int i = 0; i < blocks; ++i) {
    for (int j = 0; j < blocks; ++j) {
      if (i == j) {
        M(2 * i, 2 * i) = 1.0;
        M(2 * i + 1, 2 * i) = msym(i, i);
        M(2 * i + 1, 2 * i + 1) = N + 1;
      } else {
        M(2 * i + 1, 2 * j) = msym(i, j);
      }
    }
  }
  return M;
}

Eigen::MatrixXd delta_prime_witness(double m11, const Eigen::VectorXd& m1j,
                                    const Eigen::MatrixXd& msym_tail) {
  const int N = static_cast<int>(m1j.size());
  if (msym_tail.rows() != N || msym_tail.cols() != N ||
      !msym_tail.isApprox(msym_tail.transpose(), 1e-12)) {
    throw std::invalid_argument("delta_prime_witness: tail block must be N x N symmetric");
  }
  const int blocks = N + 1;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * blocks, 2 * blocks);
  M(0, 0) = 1.0;
  M(1, 0) = m11;
  M(1, 1) = N + 1;
  for (int j = 1; j < blocks; ++j) {
    M(1, 2 * j + 1) = m1j(j - 1);        // A_1j = [[0,0],[0,m_1j]]
    M(2 * j, 0) = -m1j(j - 1);           // A_j1 = [[-m_1j,0],[0,0]]
    M(2 * j, 2 * j) = N + 1;             // A_jj = [[N+1,m_jj],[0,1]]
    M(2 * j, 2 * j + 1) = msym_tail(j - 1, j - 1);
    M(2 * j + 1, 2 * j + 1) = 1.0;
    for (int i = 1; i < blocks; ++i) {
      if (i == j) continue;
      M(2 * i, 2 * j + 1) = msym_tail(i - 1, j - 1);  // A_ij = [[0,0],[0,m_ij]]
    }
  }
  return M;
}

namespace {

Eigen::VectorXcd trace_as_vector(const TraceVector& t) {
  Eigen::VectorXcd v(t.values.size());
  for (size_t i = 0; i < t.values.size(); ++i) v(i) = t.values[i];
  return v;
}

}  // namespace

double membership_residual(const TraceVector& t, const ExtensionSpec& ext) {
  const Eigen::VectorXcd v = trace_as_vector(t);
  if (v.size() != ext.constraints.cols()) {
    throw std::invalid_argument("membership_residual: trace/constraint size mismatch");
  }
  return (ext.constraints * v).cwiseAbs().maxCoeff();
}

double membership_residual(const GraphFunction& u, const ExtensionSpec& ext) {
  return membership_residual(graph::trace(u), ext);
}

std::complex<double> boundary_form(const TraceVector& tu, const TraceVector& tv) {
  const int N = tu.half_lines();
  const Eigen::MatrixXd Pp = krein_P_plus(N);
  const int n = 2 * (N + 1);
  Eigen::VectorXcd xu(n), xv(n);
  for (int i = 0; i < n; ++i) {
    xu(i) = tu.values[i];
    xv(i) = tv.values[i];
  }
  // (a | b) with conjugation on the second argument.
  const Complex plus = (Pp * xu).dot(xv.conjugate());
  // (P- y | y') over the repeated d phi(L) blocks collapses to (P0 b | b').
  const Complex bu_v = tu.phi_b(), bu_d = tu.dphi_b();
  const Complex bv_v = tv.phi_b(), bv_d = tv.dphi_b();
  const Complex minus = bu_d * std::conj(bv_v) - bu_v * std::conj(bv_d);
  return plus - minus;
}

namespace {

// Projects a raw trace onto the null space of the constraint rows.
Eigen::VectorXcd project_to_null(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& t) {
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(A);
  return t - cod.solve(A * t);
}

GraphFunction realize_trace(const GraphSpec& g, const Eigen::VectorXcd& t, int n0,
                            int n1, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const int N = g.N;
  const double a = g.compact_begin(), b = g.compact_end();
  const double len = b - a;
  const Complex va = t(0), da = t(1);
  const Complex vb = t(2 * (N + 1)), db = t(2 * (N + 1) + 1);
  // Cubic Hermite on [a, b] matching both endpoint pairs, plus an interior
  // bump vanishing with its derivative at the endpoints.
  const double amp = unif(rng);
  const int mode = 1 + (rng() % 3);
  auto on_loop = [&](double x) {
    const double s = (x - a) / len;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    const double w = std::sin(M_PI * s);
    const double bump = w * w * std::sin(mode * M_PI * s + 0.7) * amp;
    return va * h00 + da * (len * h10) + vb * h01 + db * (len * h11) + Complex(bump, 0.0);
  };
  std::vector<double> ramp(N), rmode(N);
  for (int j = 0; j < N; ++j) {
    ramp[j] = unif(rng);
    rmode[j] = 1.0 + (rng() % 3);
  }
  auto on_ray = [&](int j, double x) {
    const double s = x - g.vertex();
    const Complex v = t(2 + 2 * j), d = t(3 + 2 * j);
    const Complex base = (v + (d + v) * s) * std::exp(-s);
    const double bump = ramp[j] * s * s * std::exp(-2.0 * s) * std::sin(rmode[j] * s);
    return base + Complex(bump, 0.0);
  };
  return graph::sample(g, n0, n1, on_loop, on_ray);
}

}  // namespace

GraphFunction random_admissible_function(const ExtensionSpec& ext, int n0, int n1,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  // The boundary form only sees the vertex; keep the ray sampling window
  // short so the trace stencils stay fine regardless of the physical R.
  ExtensionSpec local = ext;
  local.graph.R = std::min(ext.graph.R, 6.0);
  const ExtensionSpec& e = local;
  const int dim = static_cast<int>(e.constraints.cols());
  Eigen::VectorXcd raw(dim);
  Eigen::VectorXcd proj;
  // Redraw until the projection is well-scaled (degenerate draws are rare).
  for (int attempt = 0; attempt < 64; ++attempt) {
    for (int i = 0; i < dim; ++i) raw(i) = Complex(unif(rng), 0.0);
    proj = project_to_null(e.constraints, raw);
    const double norm = proj.cwiseAbs().maxCoeff();
    if (norm > 1e-3) {
      proj /= norm;
      break;
    }
  }
  return realize_trace(e.graph, proj, n0, n1, rng);
}

double greens_identity_defect(const ExtensionSpec& ext, int trials, std::uint64_t seed) {
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const GraphFunction u =
        random_admissible_function(ext, 1200, 1200, seed + 2 * trial);
    const GraphFunction v =
        random_admissible_function(ext, 1200, 1200, seed + 2 * trial + 1);
    const auto form = boundary_form(graph::trace(u), graph::trace(v));
    worst = std::max(worst, std::abs(form));
  }
  return worst;
}

std::string describe_constraints(const ExtensionSpec& ext) {
  const int N = ext.N();
  std::vector<std::string> names;
  names.push_back("phi(-L)");
  names.push_back("phi'(-L)");
  for (int j = 0; j < N; ++j) {
    names.push_back("psi_" + std::to_string(j + 1) + "(L)");
    names.push_back("psi_" + std::to_string(j + 1) + "'(L)");
  }
  names.push_back("phi(L)");
  names.push_back("phi'(L)");
  std::ostringstream os;
  for (int r = 0; r < ext.constraints.rows(); ++r) {
    bool first = true;
    for (int c = 0; c < ext.constraints.cols(); ++c) {
      const Complex z = ext.constraints(r, c);
      if (std::abs(z) < 1e-14) continue;
      double coeff = z.real();
      if (std::abs(z.imag()) > 1e-14) {
        os << (first ? "" : " + ") << "(" << z.real() << (z.imag() < 0 ? "-" : "+")
           << std::abs(z.imag()) << "i)*" << names[c];
        first = false;
        continue;
      }
      if (first) {
        if (coeff < 0) os << "-";
      } else {
        os << (coeff < 0 ? " - " : " + ");
      }
      const double mag = std::abs(coeff);
      if (std::abs(mag - 1.0) > 1e-14) os << mag << "*";
      os << names[c];
      first = false;
    }
    os << " = 0\n";
  }
  return os.str();
}

std::string to_json(const ExtensionSpec& ext) {
  nlohmann::json j;
  j["kind"] = ext.kind_name();
  j["N"] = ext.N();
  j["params"] = {{"L", ext.graph.L}, {"R", ext.graph.R}};
  switch (ext.kind) {
    case CouplingKind::Delta:
    case CouplingKind::DeltaPrimeLoop:
      j["params"]["Z"] = ext.Z;
      break;
    case CouplingKind::DeltaPrime:
      j["params"]["Z1"] = ext.Z1;
      j["params"]["Z2"] = ext.Z2;
      break;
    default:
      break;
  }
  if (ext.witness) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < ext.witness->rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < ext.witness->cols(); ++c) row.push_back((*ext.witness)(r, c));
      rows.push_back(std::move(row));
    }
    j["matrix"] = std::move(rows);
  }
  if (ext.kind == CouplingKind::Subspace) {
    nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
    for (int c = 0; c < ext.subspace_basis.cols(); ++c) {
      nlohmann::json cre = nlohmann::json::array(), cim = nlohmann::json::array();
      for (int r = 0; r < ext.subspace_basis.rows(); ++r) {
        cre.push_back(ext.subspace_basis(r, c).real());
        cim.push_back(ext.subspace_basis(r, c).imag());
      }
      re.push_back(std::move(cre));
      im.push_back(std::move(cim));
    }
    j["basis_re"] = std::move(re);
    j["basis_im"] = std::move(im);
  }
  return j.dump(2);
}

ExtensionSpec from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  GraphSpec g;
  g.N = j.at("N");
  if (j.contains("params")) {
    const auto& p = j["params"];
    if (p.contains("L")) g.L = p["L"];
    if (p.contains("R")) g.R = p["R"];
  }
  const std::string kind = j.at("kind");
  if (kind == "delta") return build_delta(j["params"].at("Z"), g);
  if (kind == "delta_prime")
    return build_delta_prime(j["params"].at("Z1"), j["params"].at("Z2"), g);
  if (kind == "delta_prime_loop") return build_delta_prime_loop(j["params"].at("Z"), g);
  if (kind == "subspace") {
    const auto& re = j.at("basis_re");
    const auto& im = j.at("basis_im");
    const int m = static_cast<int>(re.size());
    const int dim = static_cast<int>(re[0].size());
    Eigen::MatrixXcd B(dim, m);
    for (int c = 0; c < m; ++c) {
      for (int r = 0; r < dim; ++r) {
        B(r, c) = Complex(re[c][r], im[c][r]);
      }
    }
    return build_subspace(B, g);
  }
  if (kind == "matrix") {
    const auto& rows = j.at("matrix");
    const int n = static_cast<int>(rows.size());
    Eigen::MatrixXd M(n, n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) M(r, c) = rows[r][c];
    }
    return build_matrix(M, g);
  }
  throw std::invalid_argument("ExtensionSpec: unknown kind " + kind);
}

}  // namespace gnls::boundary
