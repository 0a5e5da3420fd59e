// Structured space-time mesh of the cylinder (0,1) x (0,T), tensor
// Gauss-Legendre quadrature, and L2 norms of sampled fields and traces.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wavectrl {

// Rectangular cells: cell (i,j) covers [i*dx,(i+1)*dx] x [j*dt,(j+1)*dt],
// indexed c = j*nx + i.
struct SpaceTimeMesh {
  int nx = 0;
  int nt = 0;
  double T = 0.0;
  double dx = 0.0;
  double dt = 0.0;

  int cells() const { return nx * nt; }
  double cell_area() const { return dx * dt; }
  double h() const { return std::sqrt(dx * dx + dt * dt); }
};

inline SpaceTimeMesh build_mesh(int nx, int nt, double T) {
  if (nx < 1 || nt < 1) throw std::invalid_argument("build_mesh: cell counts must be >= 1");
  if (!(T > 0.0)) throw std::invalid_argument("build_mesh: final time must be positive");
  return SpaceTimeMesh{nx, nt, T, 1.0 / nx, T / nt};
}

// Gauss-Legendre rule on the reference interval [0,1]; weights sum to 1,
// exact for polynomials of degree <= 2*order-1.
struct QuadRule {
  int order = 0;
  std::vector<double> points;
  std::vector<double> weights;
};

inline QuadRule tensor_quadrature(int order) {
  if (order < 1 || order > 10) throw std::invalid_argument("tensor_quadrature: order must be in [1,10]");
  QuadRule rule;
  rule.order = order;
  rule.points.resize(order);
  rule.weights.resize(order);
  const int n = order;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Newton on P_n over [-1,1] from the Chebyshev initial guess.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double step = p1 / dp;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // map to [0,1], enforcing the symmetric pair
    rule.points[i] = 0.5 * (1.0 - x);
    rule.points[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[i] = 0.5 * w;
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

// Scalar field sampled at every tensor quadrature point of every cell.
// Carries no smoothness: values live in L2(Q_T). Point index q = qt*order+qx.
struct QuadField {
  int nx = 0;
  int nt = 0;
  int order = 0;
  std::vector<double> values;  // [cell * order^2 + q]

  int points_per_cell() const { return order * order; }
  bool same_shape(const QuadField& o) const { return nx == o.nx && nt == o.nt && order == o.order; }
};

inline void require_shape(const QuadField& f, const SpaceTimeMesh& mesh, const QuadRule& rule, const char* where) {
  if (f.nx != mesh.nx || f.nt != mesh.nt || f.order != rule.order ||
      f.values.size() != static_cast<std::size_t>(mesh.cells()) * f.points_per_cell())
    throw std::invalid_argument(std::string(where) + ": field shape does not match mesh/rule");
}

inline void require_same_shape(const QuadField& a, const QuadField& b, const char* where) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(where) + ": field shapes differ");
}

inline QuadField make_field(const SpaceTimeMesh& mesh, const QuadRule& rule, double fill = 0.0) {
  QuadField f{mesh.nx, mesh.nt, rule.order, {}};
  f.values.assign(static_cast<std::size_t>(mesh.cells()) * rule.order * rule.order, fill);
  return f;
}

// Samples f(x,t) at all quadrature points.
template <class F>
QuadField sample_field(const SpaceTimeMesh& mesh, const QuadRule& rule, F&& f) {
  QuadField out = make_field(mesh, rule);
  const int n = rule.order;
  std::size_t idx = 0;
  for (int j = 0; j < mesh.nt; ++j)
    for (int i = 0; i < mesh.nx; ++i)
      for (int qt = 0; qt < n; ++qt)
        for (int qx = 0; qx < n; ++qx)
          out.values[idx++] = f((i + rule.points[qx]) * mesh.dx, (j + rule.points[qt]) * mesh.dt);
  return out;
}

// Control trace along x=1 sampled at the time quadrature points of each
// time cell; evaluable elsewhere by linear interpolation (see replay).
struct BoundaryTrace {
  int nt = 0;
  int order = 0;
  std::vector<double> times;   // [nt * order], ascending
  std::vector<double> values;  // same layout
};

inline BoundaryTrace make_trace(const SpaceTimeMesh& mesh, const QuadRule& rule) {
  BoundaryTrace tr{mesh.nt, rule.order, {}, {}};
  tr.times.reserve(static_cast<std::size_t>(mesh.nt) * rule.order);
  for (int j = 0; j < mesh.nt; ++j)
    for (int q = 0; q < rule.order; ++q)
      tr.times.push_back((j + rule.points[q]) * mesh.dt);
  tr.values.assign(tr.times.size(), 0.0);
  return tr;
}

// sqrt( sum_cells area * sum_q w_q * v_q^2 ), fixed summation order so the
// result is bit-reproducible.
inline double l2_norm(const SpaceTimeMesh& mesh, const QuadRule& rule, const QuadField& f) {
  require_shape(f, mesh, rule, "l2_norm");
  const int n = rule.order, npt = n * n;
  const double area = mesh.cell_area();
  double total = 0.0;
  std::size_t idx = 0;
  for (int c = 0; c < mesh.cells(); ++c) {
    double cell = 0.0;
    for (int qt = 0; qt < n; ++qt)
      for (int qx = 0; qx < n; ++qx) {
        double v = f.values[idx + qt * n + qx];
        cell += rule.weights[qt] * rule.weights[qx] * v * v;
      }
    total += cell;
    idx += npt;
  }
  return std::sqrt(total * area);
}

inline double l2_norm(const SpaceTimeMesh& mesh, const QuadRule& rule, const BoundaryTrace& tr) {
  if (tr.nt != mesh.nt || tr.order != rule.order)
    throw std::invalid_argument("l2_norm: trace shape does not match mesh/rule");
  double total = 0.0;
  std::size_t idx = 0;
  for (int j = 0; j < mesh.nt; ++j)
    for (int q = 0; q < rule.order; ++q, ++idx) total += rule.weights[q] * tr.values[idx] * tr.values[idx];
  return std::sqrt(total * mesh.dt);
}

// Per-time-point spatial norms ||f(.,t_q)||_{L2(0,1)}; used for the
// norm-vs-time figures.
inline std::pair<std::vector<double>, std::vector<double>> slice_norms(const SpaceTimeMesh& mesh,
                                                                       const QuadRule& rule,
                                                                       const QuadField& f) {
  require_shape(f, mesh, rule, "slice_norms");
  const int n = rule.order, npt = n * n;
  std::vector<double> times, norms;
  times.reserve(static_cast<std::size_t>(mesh.nt) * n);
  norms.reserve(times.capacity());
  for (int j = 0; j < mesh.nt; ++j)
    for (int qt = 0; qt < n; ++qt) {
      double s = 0.0;
      for (int i = 0; i < mesh.nx; ++i) {
        std::size_t base = (static_cast<std::size_t>(j) * mesh.nx + i) * npt + static_cast<std::size_t>(qt) * n;
        for (int qx = 0; qx < n; ++qx) s += rule.weights[qx] * f.values[base + qx] * f.values[base + qx];
      }
      times.push_back((j + rule.points[qt]) * mesh.dt);
      norms.push_back(std::sqrt(s * mesh.dx));
    }
  return {std::move(times), std::move(norms)};
}

}  // namespace wavectrl
