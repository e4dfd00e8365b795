#include "gnls/spectral.hpp"

#include <cmath>
#include <random>

#include <doctest.h>

#include "gnls/elliptic.hpp"

using namespace gnls::spectral;
using gnls::boundary::build_delta;
using gnls::boundary::build_delta_prime_loop;
using gnls::graph::GraphSpec;
using gnls::waves::loop_only_wave;
using gnls::waves::solve_shift;
namespace elliptic = gnls::elliptic;

namespace {
constexpr double kPi = 3.14159265358979323846;

GraphSpec looping(double L, int N, double R) {
  GraphSpec g;
  g.L = L;
  g.N = N;
  g.R = R;
  return g;
}

std::vector<double> unique_sorted(const Eigen::VectorXd& v, double tol) {
  std::vector<double> out;
  for (int i = 0; i < v.size(); ++i) {
    if (out.empty() || std::abs(v(i) - out.back()) > tol) out.push_back(v(i));
  }
  return out;
}
}  // namespace

TEST_CASE("assembled matrices are symmetric") {
  const auto wave = loop_only_wave(2.0, 2.0, 2);
  const auto ext = build_delta_prime_loop(-1.0, looping(2.0, 2, 20.0));
  for (auto which : {OperatorKind::HLinear, OperatorKind::LPlus, OperatorKind::LMinus}) {
    const auto op = assemble(&wave, which, ext, {200, 200, 20.0});
    const Eigen::MatrixXd A(op.A);
    CHECK((A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * A.cwiseAbs().maxCoeff());
    CHECK(op.M.minCoeff() > 0.0);
  }
  const auto extd = build_delta(1.5, looping(2.0, 2, 20.0));
  const auto opd = assemble(nullptr, OperatorKind::HLinear, extd, {200, 200, 20.0});
  const Eigen::MatrixXd Ad(opd.A);
  CHECK((Ad - Ad.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * Ad.cwiseAbs().maxCoeff());
}

TEST_CASE("loop and star blocks are exactly decoupled") {
  const auto wave = loop_only_wave(2.0, 2.0, 2);
  const auto ext = build_delta_prime_loop(-1.0, looping(2.0, 2, 20.0));
  const auto op = assemble(&wave, OperatorKind::LPlus, ext, {150, 150, 20.0});
  const Eigen::MatrixXd A(op.A);
  CHECK(A.topRightCorner(op.n0, op.size() - op.n0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(A.bottomLeftCorner(op.size() - op.n0, op.n0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("free periodic loop spectrum") {
  const double L = 1.7;
  const auto ext = build_delta_prime_loop(-2.0, looping(L, 1, 10.0));
  const auto op = assemble(nullptr, OperatorKind::HLinear, ext, {400, 64, 10.0});
  SpMat Al;
  Eigen::VectorXd Ml;
  loop_block(op, Al, Ml);
  const auto e = lowest_eigenpairs(Al, Ml, 5);
  CHECK(std::abs(e.values(0)) < 1e-10);
  const double lam1 = kPi * kPi / (L * L);
  CHECK(e.values(1) == doctest::Approx(lam1).epsilon(1e-3));
  CHECK(e.values(2) == doctest::Approx(lam1).epsilon(1e-3));  // double
  CHECK(e.values(3) == doctest::Approx(4.0 * lam1).epsilon(1e-3));
}

TEST_CASE("embedded loop eigenvalues converge at order two") {
  const double L = 2.0;
  const auto ext = build_delta_prime_loop(-2.0, looping(L, 2, 10.0));
  std::vector<std::vector<double>> lam;
  for (const int n0 : {200, 400, 800}) {
    const auto op = assemble(nullptr, OperatorKind::HLinear, ext, {n0, 32, 10.0});
    SpMat Al;
    Eigen::VectorXd Ml;
    loop_block(op, Al, Ml);
    const auto e = lowest_eigenpairs(Al, Ml, 8);
    lam.push_back(unique_sorted(e.values, 1e-6));
  }
  for (int nmode = 1; nmode <= 3; ++nmode) {
    const double exact = nmode * nmode * kPi * kPi / (L * L);
    const double ea = std::abs(lam[0][nmode] - exact);
    const double eb = std::abs(lam[1][nmode] - exact);
    const double ec = std::abs(lam[2][nmode] - exact);
    const double p1 = std::log2(ea / eb), p2 = std::log2(eb / ec);
    CHECK(p1 > 1.8);
    CHECK(p1 < 2.2);
    CHECK(p2 > 1.8);
    CHECK(p2 < 2.2);
  }
}

TEST_CASE("dirichlet segment spectrum checks the solver") {
  // hand-built pencil for -u'' on [0, R] with zero boundary values
  const double R = 3.0;
  const int n = 600;
  const double h = R / n;
  std::vector<Eigen::Triplet<double>> ts;
  for (int i = 0; i < n - 1; ++i) {
    ts.emplace_back(i, i, 2.0 / h);
    if (i + 1 < n - 1) {
      ts.emplace_back(i, i + 1, -1.0 / h);
      ts.emplace_back(i + 1, i, -1.0 / h);
    }
  }
  SpMat A(n - 1, n - 1);
  A.setFromTriplets(ts.begin(), ts.end());
  const Eigen::VectorXd M = Eigen::VectorXd::Constant(n - 1, h);
  const auto e = lowest_eigenpairs(A, M, 3);
  for (int m = 1; m <= 3; ++m) {
    CHECK(e.values(m - 1) == doctest::Approx(m * m * kPi * kPi / (R * R)).epsilon(1e-3));
  }
}

TEST_CASE("delta coupling ground state matches the secular equation") {
  // even bound state: loop A cosh(t x), rays A cosh(t L) e^{-t s};
  // the flux rule gives 2 t tanh(t L) = Z - N t, eigenvalue -t^2
  const double Z = 3.0, L = 1.0;
  const int N = 2;
  double lo = 0.0, hi = Z / N;
  for (int i = 0; i < 200; ++i) {
    const double t = 0.5 * (lo + hi);
    (2.0 * t * std::tanh(t * L) + N * t - Z < 0.0 ? lo : hi) = t;
  }
  const double t_star = 0.5 * (lo + hi);
  const auto ext = gnls::boundary::build_delta(Z, looping(L, N, 25.0));
  std::vector<double> lam;
  for (const int n : {400, 800}) {
    const auto op = assemble(nullptr, OperatorKind::HLinear, ext, {n, n, 25.0});
    lam.push_back(lowest_eigenpairs(op, 1).values(0));
  }
  const double extrap = (4.0 * lam[1] - lam[0]) / 3.0;
  CHECK(extrap == doctest::Approx(-t_star * t_star).epsilon(1e-5));
}

TEST_CASE("count_below agrees with dense counting") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  const int n = 120;
  Eigen::MatrixXd B(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) B(i, j) = B(j, i) = gauss(rng);
  }
  Eigen::VectorXd M = Eigen::VectorXd::Ones(n);
  const SpMat A = B.sparseView();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
  for (const double tau : {-5.0, -1.0, 0.0, 2.0}) {
    const int dense = (es.eigenvalues().array() < tau).count();
    CHECK(count_below(A, M, tau) == dense);
  }
}

TEST_CASE("dnoidal ground state formula and eigenfunction") {
  const double L = kPi;
  for (const double ktarget : {0.5}) {
    const double K = elliptic::complete_K(ktarget);
    const double eta1 = std::sqrt(2.0) * K / L;
    const double w = eta1 * eta1 * (2.0 - ktarget * ktarget) / 2.0;
    const auto wave = loop_only_wave(w, L, 1);
    CHECK(wave.dn.k == doctest::Approx(ktarget).epsilon(1e-10));
    const auto ext = build_delta_prime_loop(-1.0, looping(L, 1, 10.0));
    const auto op = assemble(&wave, OperatorKind::LPlus, ext, {800, 32, 10.0});
    SpMat Al;
    Eigen::VectorXd Ml;
    loop_block(op, Al, Ml);
    const auto e = lowest_eigenpairs(Al, Ml, 2);
    const double lam0 = dnoidal_ground_eigenvalue(wave.dn);
    CHECK(std::abs(e.values(0) - lam0) < 5e-3 * std::abs(lam0));
    // eigenvector against the closed-form ground profile
    Eigen::VectorXd chi(op.n0);
    for (int i = 0; i < op.n0; ++i) {
      chi(i) = dnoidal_ground_eigenfunction(wave.dn, 0.0, op.loop_x(i));
    }
    Eigen::VectorXd v = e.vectors.col(0);
    v /= v.cwiseAbs().maxCoeff();
    if (v(0) * chi(0) < 0.0) v = -v;
    chi /= chi.cwiseAbs().maxCoeff();
    CHECK((v - chi).cwiseAbs().maxCoeff() < 1e-3);
  }
}

TEST_CASE("half-split assembly represents the symmetric subspace form") {
  const auto wave = solve_shift(6.5, 2, -4.0, 5.0);
  const auto ext = build_delta_prime_loop(-4.0, looping(5.0, 2, 15.0));
  const auto full = assemble(&wave, OperatorKind::LPlus, ext, {100, 120, 15.0});
  const auto half = assemble(&wave, OperatorKind::LPlus, ext, {100, 120, 15.0},
                             SubspaceMode::HalfSplit);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd xr(half.size());
  for (int i = 0; i < half.size(); ++i) xr(i) = gauss(rng);
  // expand: rays 0..N/2-1 take the first effective ray, the rest the second
  Eigen::VectorXd xf = Eigen::VectorXd::Zero(full.size());
  xf.head(full.n0) = xr.head(half.n0);
  xf.segment(full.ray_begin(0), full.n1) = xr.segment(half.ray_begin(0), half.n1);
  xf.segment(full.ray_begin(1), full.n1) = xr.segment(half.ray_begin(1), half.n1);
  const double qh = xr.dot(half.A * xr);
  const double qf = xf.dot(full.A * xf);
  CHECK(qh == doctest::Approx(qf).epsilon(1e-12));
  CHECK(xr.dot(half.M.cwiseProduct(xr)) ==
        doctest::Approx(xf.dot(full.M.cwiseProduct(xf))).epsilon(1e-12));
}

TEST_CASE("morse and nullity: loop-plus-trivial-tails wave") {
  // omega = 2, Z = -1, N = 2: the block realization carries the loop pair
  // (ground + translation kernel) and the star bound state at omega - N^2/Z^2.
  const double w = 2.0, L = 2.0, Z = -1.0;
  const auto wave = loop_only_wave(w, L, 2);
  const auto ext = build_delta_prime_loop(Z, looping(L, 2, 28.3));
  const auto rep = morse_and_nullity(wave, ext, {300, 300, 0.0});
  CHECK(rep.conclusive);
  CHECK(rep.loop_morse == 1);
  CHECK(rep.loop_nullity == 1);  // loop translation mode
  CHECK(rep.star_morse == 1);    // vertex bound state at omega - N^2/Z^2 = -2
  CHECK(rep.star_nullity == 0);
  CHECK(rep.morse_index == rep.loop_morse + rep.star_morse);
  CHECK(rep.nullity == rep.loop_nullity + rep.star_nullity);
  // lowest eigenvalue is the loop ground state; the star mode sits at -2
  const double lam0 = dnoidal_ground_eigenvalue(wave.dn);
  CHECK(std::abs(rep.lowest[0] - lam0) < 1e-2 * std::abs(lam0));
  CHECK(std::abs(rep.lowest[1] - (w - 4.0)) < 2e-2);
}

TEST_CASE("lowest eigenfunction around the trivial-tail wave lives on the loop") {
  const auto wave = loop_only_wave(2.0, 2.0, 2);
  const auto ext = build_delta_prime_loop(-1.0, looping(2.0, 2, 28.3));
  const auto op = assemble(&wave, OperatorKind::LPlus, ext, {400, 400, 0.0});
  const auto e = lowest_eigenpairs(op, 1);
  const auto v = e.vectors.col(0);
  const double loop_amp = v.head(op.n0).cwiseAbs().maxCoeff();
  const double ray_amp = v.tail(op.size() - op.n0).cwiseAbs().maxCoeff();
  CHECK(ray_amp <= 1e-6 * loop_amp);
}

TEST_CASE("morse and nullity: dnoidal plus tails below the inflection frequency") {
  const auto wave = solve_shift(0.2550, 2, -4.0, 5.0);
  const auto ext = build_delta_prime_loop(-4.0, looping(5.0, 2, 80.0));
  const auto rep = morse_and_nullity(wave, ext, {400, 700, 0.0});
  CHECK(rep.conclusive);
  CHECK(rep.loop_morse == 1);
  CHECK(rep.loop_nullity == 1);
  CHECK(rep.star_morse == 1);
  CHECK(rep.morse_index == 2);
}

TEST_CASE("morse and nullity: half-split counts above the inflection frequency") {
  const auto wave = solve_shift(6.5, 2, -4.0, 5.0);
  const auto ext = build_delta_prime_loop(-4.0, looping(5.0, 2, 80.0));
  // at coarser grids the loop translation mode straddles the null band
  const auto rep =
      morse_and_nullity(wave, ext, {600, 1200, 0.0}, SubspaceMode::HalfSplit);
  CHECK(rep.conclusive);
  CHECK(rep.loop_morse == 1);
  CHECK(rep.loop_nullity == 1);
  CHECK(rep.star_morse == 2);  // the symmetric-subspace pair
  CHECK(rep.morse_index == 3);
}

TEST_CASE("guard band refuses the kernel transitions") {
  const double Z = -4.0;
  const int N = 2;
  const auto ext = build_delta_prime_loop(Z, looping(5.0, N, 80.0));
  const double t = 2.0 * N * N / (Z * Z);
  const auto wave = solve_shift(0.2550, N, Z, 5.0);
  auto near_wave = wave;
  near_wave.dn.omega = t * (1.0 + 1e-8);
  CHECK_THROWS_AS(morse_and_nullity(near_wave, ext, {100, 100, 0.0}), std::domain_error);
}

TEST_CASE("l-minus nonnegativity and kernel content") {
  const auto wave = solve_shift(0.2550, 2, -4.0, 5.0);
  const auto ext = build_delta_prime_loop(-4.0, looping(5.0, 2, 80.0));
  const auto rep = l_minus_nonnegativity(wave, ext, {700, 1000, 0.0});
  CHECK(rep.nonnegative);
  CHECK(rep.kernel_dim >= 1);
  CHECK(rep.kernel_alignment >= 0.999);
  CHECK(rep.first_positive > 1e-3 * 0.2550);
}

TEST_CASE("jensen vertex form is nonnegative for negative Z") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> gauss;
  const double Z = -2.7;
  const int N = 4;
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd wv(N);
    for (int j = 0; j < N; ++j) wv(j) = gauss(rng);
    const double s = wv.sum();
    const double J = s * s / Z - N * wv.squaredNorm() / Z;
    CHECK(J >= -1e-14);
  }
}

TEST_CASE("resolvent: zero data gives zero") {
  const auto ext = build_delta_prime_loop(-3.0, looping(1.5, 2, 12.0));
  const auto f = gnls::graph::sample(ext.graph, 600, 600,
                                     [](double) { return gnls::graph::Complex(0.0, 0.0); },
                                     [](int, double) { return gnls::graph::Complex(0.0, 0.0); });
  const auto rep = resolvent_check(ext, -1.0, f);
  double amp = 0.0;
  for (const auto& z : rep.solution.loop_values) amp = std::max(amp, std::abs(z));
  CHECK(amp < 1e-14);
}

TEST_CASE("resolvent: loop-supported data never reaches the rays") {
  const auto ext = build_delta_prime_loop(-3.0, looping(1.5, 2, 12.0));
  const auto f = gnls::graph::sample(
      ext.graph, 900, 900,
      [](double x) { return gnls::graph::Complex(std::exp(-4.0 * x * x), 0.0); },
      [](int, double) { return gnls::graph::Complex(0.0, 0.0); });
  const auto rep = resolvent_check(ext, -1.0, f);
  CHECK(rep.ray_leakage >= 0.0);
  CHECK(rep.ray_leakage <= 1e-10);
  CHECK(rep.residual_rel <= 1e-6);
}

TEST_CASE("resolvent: random smooth data satisfies the equation") {
  const auto ext = build_delta_prime_loop(-3.0, looping(1.5, 2, 12.0));
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double a1 = unif(rng), a2 = unif(rng), a3 = unif(rng);
    const double b1 = unif(rng), b2 = unif(rng);
    const auto f = gnls::graph::sample(
        ext.graph, 900, 900,
        [&](double x) {
          return gnls::graph::Complex(
              a1 * std::sin(2.0 * x) + a2 * std::cos(x) + a3 * std::exp(-x * x), 0.0);
        },
        [&](int j, double x) {
          const double s = x - ext.graph.vertex();
          return gnls::graph::Complex(
              (b1 + 0.3 * j + b2 * s) * std::exp(-s * s / 4.0), 0.0);
        });
    const auto rep = resolvent_check(ext, -1.0, f);
    CHECK(rep.residual_rel <= 1e-6);
  }
}

TEST_CASE("resolvent: star eigenvalue is rejected") {
  const double Z = -3.0;
  const int N = 2;
  const auto ext = build_delta_prime_loop(Z, looping(1.5, N, 12.0));
  const auto f = gnls::graph::sample(
      ext.graph, 600, 600,
      [](double x) { return gnls::graph::Complex(std::cos(x), 0.0); },
      [](int, double x) { return gnls::graph::Complex(std::exp(-(x - 1.5)), 0.0); });
  CHECK_THROWS(resolvent_check(ext, -double(N * N) / (Z * Z), f));
}

TEST_CASE("spectral report serializes") {
  const auto wave = loop_only_wave(2.0, 2.0, 2);
  const auto ext = build_delta_prime_loop(-1.0, looping(2.0, 2, 28.3));
  const auto rep = morse_and_nullity(wave, ext, {200, 200, 0.0});
  const auto text = to_json(rep);
  CHECK(text.find("morse_index") != std::string::npos);
  CHECK(text.find("loop_nullity") != std::string::npos);
}
