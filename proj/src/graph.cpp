#include "gnls/graph.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace gnls::graph {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// One-sided 4th-order first derivative at the first sample of f.
template <typename It>
Complex forward_d1(It f, double h) {
  return (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) /
         (12.0 * h);
}

template <typename It>
Complex backward_d1(It f, int last, double h) {
  return (25.0 * f[last] - 48.0 * f[last - 1] + 36.0 * f[last - 2] -
          16.0 * f[last - 3] + 3.0 * f[last - 4]) /
         (12.0 * h);
}

}  // namespace

void GraphSpec::validate() const {
  require(L > 0.0, "GraphSpec: L must be positive");
  require(N >= 1, "GraphSpec: N must be at least 1");
  require(R > 0.0, "GraphSpec: R must be positive");
}

double GraphFunction::h_loop() const {
  const double a = spec.compact_begin(), b = spec.compact_end();
  return (b - a) / (n0() - 1);
}

double GraphFunction::h_ray() const { return spec.R / (n1() - 1); }

double GraphFunction::loop_x(int i) const {
  return spec.compact_begin() + h_loop() * i;
}

double GraphFunction::ray_x(int q) const { return spec.vertex() + h_ray() * q; }

void GraphFunction::validate() const {
  spec.validate();
  require(n0() >= 8, "GraphFunction: loop grid needs at least 8 points");
  require(static_cast<int>(ray_values.size()) == spec.N,
          "GraphFunction: ray count mismatch");
  for (const auto& r : ray_values) {
    require(static_cast<int>(r.size()) == n1() && n1() >= 8,
            "GraphFunction: ray grids must match and have at least 8 points");
  }
  for (const auto& z : loop_values) {
    require(std::isfinite(z.real()) && std::isfinite(z.imag()),
            "GraphFunction: non-finite loop value");
  }
}

TraceVector trace(const GraphFunction& u) {
  if (u.n0() < 5 || u.n1() < 5) {
    throw std::invalid_argument("trace: grid too coarse for 4th-order stencils");
  }
  const int N = u.spec.N;
  TraceVector t;
  t.values.resize(2 * (N + 1) + 2);
  const double h0 = u.h_loop(), h1 = u.h_ray();
  const auto& f = u.loop_values;
  const int last = u.n0() - 1;
  t.values[0] = f[0];
  t.values[1] = forward_d1(f.begin(), h0);
  for (int j = 0; j < N; ++j) {
    const auto& g = u.ray_values[j];
    t.values[2 + 2 * j] = g[0];
    t.values[3 + 2 * j] = forward_d1(g.begin(), h1);
  }
  t.values[2 * (N + 1)] = f[last];
  t.values[2 * (N + 1) + 1] = backward_d1(f.begin(), last, h0);
  return t;
}

namespace {

template <typename T>
T simpson_impl(const std::vector<T>& f, double h) {
  const int n = static_cast<int>(f.size()) - 1;  // interval count
  if (n < 3) throw std::invalid_argument("simpson: need at least 4 samples");
  T total{};
  int start = 0;
  if (n % 2 == 1) {
    // Lead with a 3/8 block so the remainder is even.
    total += (3.0 * h / 8.0) * (f[0] + 3.0 * f[1] + 3.0 * f[2] + f[3]);
    start = 3;
  }
  for (int i = start; i + 2 <= n; i += 2) {
    total += (h / 3.0) * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
  }
  return total;
}

}  // namespace

double simpson(const std::vector<double>& f, double h) { return simpson_impl(f, h); }
Complex simpson(const std::vector<Complex>& f, double h) { return simpson_impl(f, h); }

Complex inner_product(const GraphFunction& u, const GraphFunction& v) {
  if (u.n0() != v.n0() || u.n1() != v.n1() || u.spec.N != v.spec.N) {
    throw std::invalid_argument("inner_product: grid mismatch");
  }
  std::vector<Complex> prod(u.n0());
  for (int i = 0; i < u.n0(); ++i) {
    prod[i] = std::conj(u.loop_values[i]) * v.loop_values[i];
  }
  Complex total = simpson(prod, u.h_loop());
  prod.resize(u.n1());
  for (int j = 0; j < u.spec.N; ++j) {
    for (int q = 0; q < u.n1(); ++q) {
      prod[q] = std::conj(u.ray_values[j][q]) * v.ray_values[j][q];
    }
    total += simpson(prod, u.h_ray());
  }
  return total;
}

double l2_norm_sq(const GraphFunction& u) { return inner_product(u, u).real(); }

namespace {

// 2nd-order differences on a uniform grid, one-sided at the ends.
std::vector<Complex> diff2(const std::vector<Complex>& f, double h) {
  const int n = static_cast<int>(f.size());
  std::vector<Complex> d(n);
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  for (int i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
  d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
  return d;
}

double quad_abs2(const std::vector<Complex>& f, double h) {
  std::vector<double> a(f.size());
  for (size_t i = 0; i < f.size(); ++i) a[i] = std::norm(f[i]);
  return simpson(a, h);
}

}  // namespace

double h1_norm(const GraphFunction& u) {
  double total = quad_abs2(u.loop_values, u.h_loop());
  total += quad_abs2(diff2(u.loop_values, u.h_loop()), u.h_loop());
  for (int j = 0; j < u.spec.N; ++j) {
    total += quad_abs2(u.ray_values[j], u.h_ray());
    total += quad_abs2(diff2(u.ray_values[j], u.h_ray()), u.h_ray());
  }
  return std::sqrt(total);
}

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void write_csv(const GraphFunction& u, std::ostream& os) {
  os << "edge_id,x,re,im\n";
  for (int i = 0; i < u.n0(); ++i) {
    os << 0 << ',' << fmt17(u.loop_x(i)) << ',' << fmt17(u.loop_values[i].real())
       << ',' << fmt17(u.loop_values[i].imag()) << '\n';
  }
  for (int j = 0; j < u.spec.N; ++j) {
    for (int q = 0; q < u.n1(); ++q) {
      os << (j + 1) << ',' << fmt17(u.ray_x(q)) << ','
         << fmt17(u.ray_values[j][q].real()) << ','
         << fmt17(u.ray_values[j][q].imag()) << '\n';
    }
  }
}

GraphFunction read_csv(const GraphSpec& spec, std::istream& is) {
  GraphFunction u;
  u.spec = spec;
  u.ray_values.assign(spec.N, {});
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');
    const int edge = std::stoi(tok);
    std::getline(ss, tok, ',');  // x column is redundant; the grid is implied by the GraphSpec
    std::getline(ss, tok, ',');
    const double re = std::stod(tok);
    std::getline(ss, tok, ',');
    const double im = std::stod(tok);
    if (edge == 0) {
      u.loop_values.emplace_back(re, im);
    } else {
      u.ray_values.at(edge - 1).emplace_back(re, im);
    }
  }
  return u;
}

std::string to_json(const GraphFunction& u) {
  nlohmann::json j;
  j["kind"] = u.spec.kind == GraphKind::LoopingEdge ? "looping_edge" : "t_shaped";
  j["L"] = u.spec.L;
  j["N"] = u.spec.N;
  j["R"] = u.spec.R;
  auto pack = [](const std::vector<Complex>& v) {
    nlohmann::json a;
    nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
    for (const auto& z : v) {
      re.push_back(z.real());
      im.push_back(z.imag());
    }
    a["re"] = std::move(re);
    a["im"] = std::move(im);
    return a;
  };
  j["loop"] = pack(u.loop_values);
  j["rays"] = nlohmann::json::array();
  for (const auto& r : u.ray_values) j["rays"].push_back(pack(r));
  return j.dump();
}

GraphFunction from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  GraphFunction u;
  u.spec.kind = j.at("kind") == "t_shaped" ? GraphKind::TShaped : GraphKind::LoopingEdge;
  u.spec.L = j.at("L");
  u.spec.N = j.at("N");
  u.spec.R = j.at("R");
  auto unpack = [](const nlohmann::json& a) {
    std::vector<Complex> v;
    const auto& re = a.at("re");
    const auto& im = a.at("im");
    for (size_t i = 0; i < re.size(); ++i) v.emplace_back(re[i], im[i]);
    return v;
  };
  u.loop_values = unpack(j.at("loop"));
  for (const auto& r : j.at("rays")) u.ray_values.push_back(unpack(r));
  return u;
}

}  // namespace gnls::graph
