#ifndef GNLS_GRAPH_HPP
#define GNLS_GRAPH_HPP

// Geometry, per-edge sampling grids and the quadratures and boundary-trace
// extraction the rest of the toolkit consumes.
//
// A looping-edge graph has one compact edge identified with [-L, L] (a loop
// through the single vertex) and N half-lines [L, L+R] after truncation.
// A T-shaped graph has a pendant edge [-L, 0] and N half-lines [0, R].

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

namespace gnls::graph {

using Complex = std::complex<double>;

enum class GraphKind { LoopingEdge, TShaped };

struct GraphSpec {
  GraphKind kind = GraphKind::LoopingEdge;
  double L = 1.0;   // loop half-length, or pendant-edge length for TShaped
  int N = 1;        // number of half-lines
  double R = 10.0;  // half-line truncation length (simulation/spectral use)

  void validate() const;
  // Compact-edge endpoints: [-L, L] for looping-edge, [-L, 0] for T-shaped.
  double compact_begin() const { return -L; }
  double compact_end() const { return kind == GraphKind::LoopingEdge ? L : 0.0; }
  // Coordinate of the common vertex (where the half-lines attach).
  double vertex() const { return compact_end(); }
};

// Boundary data of a function on the graph. Layout follows the vertical
// concatenation convention: first the pair at the compact edge's far end,
// then (value, derivative) pairs for each half-line at the vertex, and
// finally the compact edge's vertex-side pair. For a looping edge:
//   (phi(-L), phi'(-L), psi_1(L), psi_1'(L), ..., psi_N(L), psi_N'(L),
//    phi(L), phi'(L))
// which is the 2(N+1)-vector (d phi(-L), d psi(L)) followed by d phi(L).
struct TraceVector {
  std::vector<Complex> values;  // length 2(N+1) + 2

  int half_lines() const { return static_cast<int>(values.size()) / 2 - 2; }
  Complex phi_a() const { return values[0]; }        // phi(-L)
  Complex dphi_a() const { return values[1]; }       // phi'(-L)
  Complex psi(int j) const { return values[2 + 2 * j]; }
  Complex dpsi(int j) const { return values[3 + 2 * j]; }
  Complex phi_b() const { return values[values.size() - 2]; }  // phi(L)
  Complex dphi_b() const { return values[values.size() - 1]; } // phi'(L)
};

// Complex-valued samples on per-edge uniform grids. Grids include both
// endpoints; the half-line grids run from the vertex to vertex + R.
struct GraphFunction {
  GraphSpec spec;
  std::vector<Complex> loop_values;               // n0 samples on the compact edge
  std::vector<std::vector<Complex>> ray_values;   // N arrays of n1 samples each

  int n0() const { return static_cast<int>(loop_values.size()); }
  int n1() const { return ray_values.empty() ? 0 : static_cast<int>(ray_values[0].size()); }
  double h_loop() const;
  double h_ray() const;
  double loop_x(int i) const;
  double ray_x(int q) const;

  void validate() const;
};

// Sample closed-form edge profiles onto a fresh GraphFunction.
template <typename LoopFn, typename RayFn>
GraphFunction sample(const GraphSpec& spec, int n0, int n1, LoopFn&& on_loop,
                     RayFn&& on_ray) {
  GraphFunction u;
  u.spec = spec;
  u.loop_values.resize(n0);
  const double a = spec.compact_begin(), b = spec.compact_end();
  for (int i = 0; i < n0; ++i) {
    const double x = a + (b - a) * i / (n0 - 1);
    u.loop_values[i] = on_loop(x);
  }
  u.ray_values.assign(spec.N, std::vector<Complex>(n1));
  for (int j = 0; j < spec.N; ++j) {
    for (int q = 0; q < n1; ++q) {
      const double x = spec.vertex() + spec.R * q / (n1 - 1);
      u.ray_values[j][q] = on_ray(j, x);
    }
  }
  return u;
}

// Boundary values (exact endpoint samples) and boundary derivatives
// (one-sided 4th-order stencils). Throws if any edge has fewer than
// 5 grid points.
TraceVector trace(const GraphFunction& u);

// Composite Simpson quadrature of conj(u) v summed over all edges.
Complex inner_product(const GraphFunction& u, const GraphFunction& v);

// L2 norm squared and H1 norm (adds the derivative term via 2nd-order
// differences).
double l2_norm_sq(const GraphFunction& u);
double h1_norm(const GraphFunction& u);

// Quadrature of a sampled real array on a uniform grid (composite Simpson,
// falling back to a 3/8 block when the interval count is odd).
double simpson(const std::vector<double>& f, double h);
Complex simpson(const std::vector<Complex>& f, double h);

// CSV serialization: columns edge_id,x,re,im with 17 significant digits.
// edge_id 0 is the compact edge, 1..N the half-lines.
void write_csv(const GraphFunction& u, std::ostream& os);
GraphFunction read_csv(const GraphSpec& spec, std::istream& is);

std::string to_json(const GraphFunction& u);
GraphFunction from_json(const std::string& text);

}  // namespace gnls::graph

#endif  // GNLS_GRAPH_HPP
