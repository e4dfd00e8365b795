#include "gnls/evolution.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace gnls::evolution {

namespace {

using Complex = std::complex<double>;
using SpMatC = Eigen::SparseMatrix<Complex>;
using spectral::AssembledOperator;

SpMatC complexify(const spectral::SpMat& A, Complex scale) {
  SpMatC B(A.rows(), A.cols());
  std::vector<Eigen::Triplet<Complex>> ts;
  ts.reserve(A.nonZeros());
  for (int k = 0; k < A.outerSize(); ++k) {
    for (spectral::SpMat::InnerIterator it(A, k); it; ++it) {
      ts.emplace_back(it.row(), it.col(), scale * it.value());
    }
  }
  B.setFromTriplets(ts.begin(), ts.end());
  return B;
}

void add_mass(SpMatC& B, const Eigen::VectorXd& M, Complex scale) {
  SpMatC D(B.rows(), B.cols());
  std::vector<Eigen::Triplet<Complex>> ts;
  for (int i = 0; i < M.size(); ++i) ts.emplace_back(i, i, scale * M(i));
  D.setFromTriplets(ts.begin(), ts.end());
  B += D;
}

}  // namespace

Stepper::Stepper(const AssembledOperator& H, double dt)
    : op_(std::make_shared<AssembledOperator>(H)), dt_(dt) {
  const Complex half(0.0, dt / 2.0);
  SpMatC Kp = complexify(H.A, half);
  add_mass(Kp, H.M, Complex(1.0, 0.0));
  Km_ = complexify(H.A, -half);
  add_mass(Km_, H.M, Complex(1.0, 0.0));
  lu_.compute(Kp);
  if (lu_.info() != Eigen::Success) {
    throw std::runtime_error("Stepper: Crank-Nicolson factorization failed");
  }
}

void Stepper::step(Eigen::VectorXcd& u) const {
  const double half = dt_ / 2.0;
  for (int i = 0; i < u.size(); ++i) {
    u(i) *= std::polar(1.0, std::norm(u(i)) * half);
  }
  step_linear(u);
  for (int i = 0; i < u.size(); ++i) {
    u(i) *= std::polar(1.0, std::norm(u(i)) * half);
  }
}

void Stepper::step_linear(Eigen::VectorXcd& u) const {
  const Eigen::VectorXcd rhs = Km_ * u;
  u = lu_.solve(rhs);
}

double discrete_mass(const AssembledOperator& H, const Eigen::VectorXcd& u) {
  double q = 0.0;
  for (int i = 0; i < u.size(); ++i) q += H.M(i) * std::norm(u(i));
  return q;
}

double discrete_energy(const AssembledOperator& H, const Eigen::VectorXcd& u) {
  const Eigen::VectorXcd Au = H.A * u;
  double e = 0.5 * u.dot(Au).real();
  for (int i = 0; i < u.size(); ++i) e -= 0.25 * H.M(i) * std::norm(u(i)) * std::norm(u(i));
  return e;
}

namespace {

double h1_sq(const AssembledOperator& H, const Eigen::VectorXcd& u) {
  double q = u.dot(Eigen::VectorXcd(H.S * u)).real();
  for (int i = 0; i < u.size(); ++i) q += H.M(i) * std::norm(u(i));
  return q;
}

Complex h1_ip(const AssembledOperator& H, const Eigen::VectorXcd& a,
              const Eigen::VectorXcd& b) {
  Complex q = a.dot(Eigen::VectorXcd(H.S * b));
  for (int i = 0; i < a.size(); ++i) q += H.M(i) * std::conj(a(i)) * b(i);
  return q;
}

}  // namespace

OrbitDistance orbit_distance(const AssembledOperator& H, const Eigen::VectorXcd& u,
                             const Eigen::VectorXcd& ref) {
  OrbitDistance od;
  Complex l2 = 0.0;
  for (int i = 0; i < u.size(); ++i) l2 += H.M(i) * std::conj(ref(i)) * u(i);
  const double seed = std::arg(l2);
  const double uu = h1_sq(H, u), rr = h1_sq(H, ref);
  const Complex cross = h1_ip(H, ref, u);
  auto dist_sq = [&](double th) {
    return uu + rr - 2.0 * std::real(std::polar(1.0, -th) * cross);
  };
  // Golden-section minimization around the L2 seed.
  const double gr = 0.61803398874989484820;
  double a = seed - 1.0, b = seed + 1.0;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  for (int it = 0; it < 80; ++it) {
    if (dist_sq(c) < dist_sq(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - gr * (b - a);
    d = a + gr * (b - a);
  }
  od.theta_star = 0.5 * (a + b);
  // The expanded form cancels near the orbit; difference directly instead.
  const Eigen::VectorXcd diff =
      u - std::polar(1.0, od.theta_star) * ref;
  od.d_h1 = std::sqrt(std::max(h1_sq(H, diff), 0.0));
  return od;
}

Eigen::VectorXcd sample_on_dofs(const AssembledOperator& H, const waves::StandingWave& wave) {
  Eigen::VectorXcd u(H.size());
  for (int i = 0; i < H.n0; ++i) u(i) = wave.loop_value(H.loop_x(i));
  for (int r = 0; r < H.nrays; ++r) {
    for (int q = 0; q < H.n1; ++q) {
      u(H.ray_begin(r) + q) = wave.ray_value(H.ray_x(q));
    }
  }
  return u;
}

ExperimentResult evolve(const AssembledOperator& H, Eigen::VectorXcd u,
                        const boundary::ExtensionSpec& ext, const EvolutionConfig& cfg,
                        const Eigen::VectorXcd* reference) {
  ExperimentResult res;
  const Stepper stepper(H, cfg.dt);
  const int nsteps = static_cast<int>(std::llround(cfg.t_end / cfg.dt));
  const double amp0 = u.cwiseAbs().maxCoeff();
  auto record = [&](double t) {
    MonitorRecord m;
    m.t = t;
    m.mass = discrete_mass(H, u);
    m.energy = discrete_energy(H, u);
    m.max_amplitude = u.cwiseAbs().maxCoeff();
    if (reference != nullptr) {
      const OrbitDistance od = orbit_distance(H, u, *reference);
      m.d_h1 = od.d_h1;
      m.theta_star = od.theta_star;
    }
    if (cfg.track_membership) {
      m.membership = boundary::membership_residual(H.to_graph_function(u), ext);
    }
    res.series.push_back(m);
  };
  record(0.0);
  for (int s = 1; s <= nsteps; ++s) {
    stepper.step(u);
    if (s % cfg.monitor_every == 0 || s == nsteps) {
      record(s * cfg.dt);
      if (res.series.back().max_amplitude > 10.0 * amp0) {
        res.blew_up = true;
        break;
      }
    }
  }
  return res;
}

ExperimentResult orbital_experiment(const waves::StandingWave& wave,
                                    const boundary::ExtensionSpec& ext,
                                    PerturbationKind kind, double eps,
                                    const EvolutionConfig& cfg) {
  const AssembledOperator H =
      spectral::assemble(&wave, spectral::OperatorKind::HLinear, ext, cfg.grid);
  const Eigen::VectorXcd theta = sample_on_dofs(H, wave);
  Eigen::VectorXcd dir = Eigen::VectorXcd::Zero(H.size());
  if (kind == PerturbationKind::GenericLoop) {
    const double L = wave.dn.L;
    for (int i = 0; i < H.n0; ++i) {
      // even about the loop shift a, measured around the circle
      const double d = std::remainder(H.loop_x(i) - wave.a, 2.0 * L);
      dir(i) = std::exp(-(d * d) / (0.09 * L * L));
    }
  } else {
    if (wave.N % 2 != 0 || !wave.has_tails) {
      throw std::invalid_argument("orbital_experiment: symmetric probe needs even N tails");
    }
    for (int r = 0; r < H.nrays; ++r) {
      const double sgn = r < H.nrays / 2 ? 1.0 : -1.0;
      for (int q = 0; q < H.n1; ++q) {
        dir(H.ray_begin(r) + q) = sgn * wave.ray_deriv(H.ray_x(q));
      }
    }
  }
  // H1-orthogonalize against the profile so the optimal phase at t = 0 is 0
  // and d(0) equals the injected size exactly.
  const Complex overlap = h1_ip(H, theta, dir);
  dir -= (overlap / h1_sq(H, theta)) * theta;
  dir /= std::sqrt(h1_sq(H, dir));
  const double profile_h1 = std::sqrt(h1_sq(H, theta));
  const Eigen::VectorXcd u0 = theta + eps * profile_h1 * dir;

  ExperimentResult res = evolve(H, u0, ext, cfg, &theta);
  res.profile_h1 = profile_h1;
  res.d0 = eps * profile_h1;
  double dmax = 0.0;
  for (const auto& m : res.series) {
    dmax = std::max(dmax, m.d_h1);
    if (res.t_threshold < 0.0 && m.d_h1 >= 50.0 * res.d0 && m.t > 0.0) {
      res.t_threshold = m.t;
    }
  }
  if (res.blew_up) {
    res.verdict = "BLOW-UP";
  } else if (res.t_threshold >= 0.0) {
    res.verdict = "INSTABILITY-CONSISTENT";
  } else if (dmax <= 5.0 * res.d0) {
    res.verdict = "STABLE-CONSISTENT";
  } else {
    res.verdict = "UNCLASSIFIED";
  }
  return res;
}

void write_series_csv(const ExperimentResult& r, std::ostream& os) {
  os << "t,mass,energy,d_h1,theta_star,max_amplitude,membership\n";
  char buf[256];
  for (const auto& m : r.series) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  m.t, m.mass, m.energy, m.d_h1, m.theta_star, m.max_amplitude,
                  m.membership);
    os << buf;
  }
}

}  // namespace gnls::evolution
