// C1-conforming Hermite bicubic space on the structured space-time mesh:
// degrees of freedom, boundary constraints, Gram/load assembly for the
// dual variational problem, and state/control extraction.
//
// Four dofs per node (value, dx, dt, dxt). Strongly imposed constraints:
// at x=0 the value and dt dofs vanish (p(0,t) = 0 for all t), at x=1 the
// dx and dxt dofs vanish (dx p(1,t) = 0 for all t).
#pragma once

#include "wavectrl/mesh.hpp"
#include "wavectrl/spd.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace wavectrl {

// The four cubic Hermite functions {h00, h10, h01, h11} on [0,1], or their
// d-th reference derivative. Derivative dofs are scaled by the cell length
// at element level, not here.
inline std::array<double, 4> hermite_basis(double xi, int d) {
  switch (d) {
    case 0:
      return {(1.0 + 2.0 * xi) * (1.0 - xi) * (1.0 - xi), xi * (1.0 - xi) * (1.0 - xi),
              xi * xi * (3.0 - 2.0 * xi), xi * xi * (xi - 1.0)};
    case 1:
      return {6.0 * xi * xi - 6.0 * xi, 3.0 * xi * xi - 4.0 * xi + 1.0, 6.0 * xi - 6.0 * xi * xi,
              3.0 * xi * xi - 2.0 * xi};
    case 2:
      return {12.0 * xi - 6.0, 6.0 * xi - 4.0, 6.0 - 12.0 * xi, 6.0 * xi - 2.0};
    default:
      throw std::invalid_argument("hermite_basis: derivative order must be 0, 1 or 2");
  }
}

// Dof numbering is node-major, dof-minor: node(i,j) = j*(nx+1)+i,
// dof = 4*node + type with type 0:value, 1:dx, 2:dt, 3:dxt.
struct C1Space {
  SpaceTimeMesh mesh;
  int total_dofs = 0;
  int free_count = 0;
  std::vector<std::int32_t> free_index;     // total dof -> free dof, -1 if constrained
  std::vector<std::int32_t> free_to_total;  // inverse map

  int node(int i, int j) const { return j * (mesh.nx + 1) + i; }
};

inline C1Space build_c1_space(const SpaceTimeMesh& mesh) {
  C1Space sp;
  sp.mesh = mesh;
  const int nodes = (mesh.nx + 1) * (mesh.nt + 1);
  sp.total_dofs = 4 * nodes;
  sp.free_index.assign(sp.total_dofs, -1);
  sp.free_to_total.clear();
  for (int j = 0; j <= mesh.nt; ++j)
    for (int i = 0; i <= mesh.nx; ++i)
      for (int type = 0; type < 4; ++type) {
        const bool constrained =
            (i == 0 && (type == 0 || type == 2)) || (i == mesh.nx && (type == 1 || type == 3));
        if (constrained) continue;
        const int dof = 4 * sp.node(i, j) + type;
        sp.free_index[dof] = static_cast<std::int32_t>(sp.free_to_total.size());
        sp.free_to_total.push_back(dof);
      }
  sp.free_count = static_cast<int>(sp.free_to_total.size());
  return sp;
}

// Per-cell reference tables; identical for every cell of the uniform mesh.
// Local dof = node_local*4 + type, node_local = 2*(t side) + (x side).
struct ElementTables {
  int order = 0;
  std::vector<double> val;       // [q*16 + loc], q = qt*order + qx
  std::vector<double> lap;       // (d_tt - d_xx) phi, same layout
  std::vector<double> bot_val;   // phi(x, 0)        [qx*16 + loc]
  std::vector<double> bot_dt;    // d_t phi(x, 0)    [qx*16 + loc]
  std::vector<double> right_val; // phi(1, t)        [qt*16 + loc]
};

namespace detail {

// Scaled 1D Hermite pair values: entry [side][deriv-dof-flag] for the d-th
// physical derivative on a cell of length s.
inline std::array<std::array<double, 2>, 2> hermite_pairs(double u, int d, double s) {
  const auto h = hermite_basis(u, d);
  const double ref_to_phys = std::pow(s, -d);
  return {{{h[0] * ref_to_phys, h[1] * s * ref_to_phys}, {h[2] * ref_to_phys, h[3] * s * ref_to_phys}}};
}

}  // namespace detail

inline ElementTables build_element_tables(const SpaceTimeMesh& mesh, const QuadRule& rule) {
  const int n = rule.order;
  ElementTables tb;
  tb.order = n;
  tb.val.assign(static_cast<std::size_t>(n) * n * 16, 0.0);
  tb.lap.assign(tb.val.size(), 0.0);
  tb.bot_val.assign(static_cast<std::size_t>(n) * 16, 0.0);
  tb.bot_dt.assign(tb.bot_val.size(), 0.0);
  tb.right_val.assign(tb.bot_val.size(), 0.0);

  std::vector<std::array<std::array<double, 2>, 2>> x0(n), x2(n), t0(n), t2(n);
  for (int q = 0; q < n; ++q) {
    x0[q] = detail::hermite_pairs(rule.points[q], 0, mesh.dx);
    x2[q] = detail::hermite_pairs(rule.points[q], 2, mesh.dx);
    t0[q] = detail::hermite_pairs(rule.points[q], 0, mesh.dt);
    t2[q] = detail::hermite_pairs(rule.points[q], 2, mesh.dt);
  }
  const auto tb0 = detail::hermite_pairs(0.0, 0, mesh.dt);
  const auto tb1 = detail::hermite_pairs(0.0, 1, mesh.dt);
  const auto xr0 = detail::hermite_pairs(1.0, 0, mesh.dx);

  for (int qt = 0; qt < n; ++qt)
    for (int qx = 0; qx < n; ++qx) {
      const std::size_t base = (static_cast<std::size_t>(qt) * n + qx) * 16;
      for (int bt = 0; bt < 2; ++bt)
        for (int ax = 0; ax < 2; ++ax)
          for (int st = 0; st < 2; ++st)
            for (int sx = 0; sx < 2; ++sx) {
              const int loc = (2 * bt + ax) * 4 + (st * 2 + sx);
              tb.val[base + loc] = x0[qx][ax][sx] * t0[qt][bt][st];
              tb.lap[base + loc] = x0[qx][ax][sx] * t2[qt][bt][st] - x2[qx][ax][sx] * t0[qt][bt][st];
            }
    }
  for (int qx = 0; qx < n; ++qx)
    for (int bt = 0; bt < 2; ++bt)
      for (int ax = 0; ax < 2; ++ax)
        for (int st = 0; st < 2; ++st)
          for (int sx = 0; sx < 2; ++sx) {
            const int loc = (2 * bt + ax) * 4 + (st * 2 + sx);
            tb.bot_val[qx * 16 + loc] = x0[qx][ax][sx] * tb0[bt][st];
            tb.bot_dt[qx * 16 + loc] = x0[qx][ax][sx] * tb1[bt][st];
          }
  for (int qt = 0; qt < n; ++qt)
    for (int bt = 0; bt < 2; ++bt)
      for (int ax = 0; ax < 2; ++ax)
        for (int st = 0; st < 2; ++st)
          for (int sx = 0; sx < 2; ++sx) {
            const int loc = (2 * bt + ax) * 4 + (st * 2 + sx);
            tb.right_val[qt * 16 + loc] = xr0[ax][sx] * t0[qt][bt][st];
          }
  return tb;
}

// Global free dofs of one cell's 16 local dofs (-1 where constrained).
inline void cell_free_dofs(const C1Space& sp, int i, int j, std::int32_t out[16]) {
  const int nodes[4] = {sp.node(i, j), sp.node(i + 1, j), sp.node(i, j + 1), sp.node(i + 1, j + 1)};
  for (int nl = 0; nl < 4; ++nl)
    for (int type = 0; type < 4; ++type) out[nl * 4 + type] = sp.free_index[4 * nodes[nl] + type];
}

// Sparsity pattern of the Gram matrix (upper triangle); rows sorted.
struct SparsityPattern {
  std::vector<int> row_ptr;
  std::vector<int> col;
};

inline SparsityPattern build_pattern(const C1Space& sp) {
  const int nx = sp.mesh.nx, nt = sp.mesh.nt;
  SparsityPattern pat;
  pat.row_ptr.assign(sp.free_count + 1, 0);
  std::vector<int> cols;
  cols.reserve(36);
  // two passes: count, then fill
  for (int pass = 0; pass < 2; ++pass) {
    for (int j = 0; j <= nt; ++j)
      for (int i = 0; i <= nx; ++i)
        for (int type = 0; type < 4; ++type) {
          const int r = sp.free_index[4 * sp.node(i, j) + type];
          if (r < 0) continue;
          cols.clear();
          for (int j2 = std::max(0, j - 1); j2 <= std::min(nt, j + 1); ++j2)
            for (int i2 = std::max(0, i - 1); i2 <= std::min(nx, i + 1); ++i2)
              for (int t2 = 0; t2 < 4; ++t2) {
                const int c = sp.free_index[4 * sp.node(i2, j2) + t2];
                if (c >= r) cols.push_back(c);
              }
          if (pass == 0) {
            pat.row_ptr[r + 1] = static_cast<int>(cols.size());
          } else {
            int at = pat.row_ptr[r];
            for (int c : cols) pat.col[at++] = c;
          }
        }
    if (pass == 0) {
      for (int r = 0; r < sp.free_count; ++r) pat.row_ptr[r + 1] += pat.row_ptr[r];
      pat.col.resize(pat.row_ptr[sp.free_count]);
    }
  }
  return pat;
}

using ScalarFn = std::function<double(double)>;

namespace detail {

inline int csr_find(const SparsityPattern& pat, int r, int c) {
  int lo = pat.row_ptr[r], hi = pat.row_ptr[r + 1] - 1;
  while (lo <= hi) {
    const int mid = (lo + hi) / 2;
    if (pat.col[mid] < c)
      lo = mid + 1;
    else if (pat.col[mid] > c)
      hi = mid - 1;
    else
      return mid;
  }
  throw std::logic_error("assembly: entry outside sparsity pattern");
}

}  // namespace detail

// Gram matrix of the weighted dual scalar product on the free dofs:
//   M_ij = int (L phi_i + A phi_i)(L phi_j + A phi_j) dx dt
//        + int_0^T eta(t)^2 phi_i(1,t) phi_j(1,t) dt,      L = d_tt - d_xx.
// eta = nullptr means the unit weight.
inline SparseSpd assemble_gram(const C1Space& sp, const QuadRule& rule, const ElementTables& tb,
                               const SparsityPattern& pat, const QuadField& A, const ScalarFn& eta) {
  const SpaceTimeMesh& mesh = sp.mesh;
  require_shape(A, mesh, rule, "assemble_gram");
  const int n = rule.order, npt = n * n;
  SparseSpd M;
  M.n = sp.free_count;
  M.row_ptr = pat.row_ptr;
  M.col = pat.col;
  M.val.assign(pat.col.size(), 0.0);

  std::vector<double> eta2(static_cast<std::size_t>(mesh.nt) * n);
  for (int j = 0; j < mesh.nt; ++j)
    for (int q = 0; q < n; ++q) {
      const double t = (j + rule.points[q]) * mesh.dt;
      const double e = eta ? eta(t) : 1.0;
      eta2[static_cast<std::size_t>(j) * n + q] = e * e;
    }

  const double area = mesh.cell_area();
  double elem[16][16];
  double La[16];
  std::int32_t dofs[16];
  for (int j = 0; j < mesh.nt; ++j)
    for (int i = 0; i < mesh.nx; ++i) {
      const int c = j * mesh.nx + i;
      for (auto& row : elem)
        for (double& v : row) v = 0.0;
      const double* Acell = A.values.data() + static_cast<std::size_t>(c) * npt;
      for (int qt = 0; qt < n; ++qt)
        for (int qx = 0; qx < n; ++qx) {
          const int q = qt * n + qx;
          const double w = rule.weights[qt] * rule.weights[qx] * area;
          const double a = Acell[q];
          const double* v = tb.val.data() + static_cast<std::size_t>(q) * 16;
          const double* l = tb.lap.data() + static_cast<std::size_t>(q) * 16;
          for (int loc = 0; loc < 16; ++loc) La[loc] = l[loc] + a * v[loc];
          for (int l1 = 0; l1 < 16; ++l1) {
            const double wl = w * La[l1];
            for (int l2 = l1; l2 < 16; ++l2) elem[l1][l2] += wl * La[l2];
          }
        }
      if (i == mesh.nx - 1) {  // weighted trace block on the x=1 edge
        for (int qt = 0; qt < n; ++qt) {
          const double w = rule.weights[qt] * mesh.dt * eta2[static_cast<std::size_t>(j) * n + qt];
          if (w == 0.0) continue;
          const double* rv = tb.right_val.data() + static_cast<std::size_t>(qt) * 16;
          for (int l1 = 0; l1 < 16; ++l1) {
            if (rv[l1] == 0.0) continue;
            const double wl = w * rv[l1];
            for (int l2 = l1; l2 < 16; ++l2) elem[l1][l2] += wl * rv[l2];
          }
        }
      }
      cell_free_dofs(sp, i, j, dofs);
      for (int l1 = 0; l1 < 16; ++l1) {
        if (dofs[l1] < 0) continue;
        for (int l2 = l1; l2 < 16; ++l2) {
          if (dofs[l2] < 0) continue;
          const int r = std::min(dofs[l1], dofs[l2]);
          const int cc = std::max(dofs[l1], dofs[l2]);
          M.val[detail::csr_find(pat, r, cc)] += elem[l1][l2];
        }
      }
    }
  return M;
}

// Load vector: l_j = int B phi_j dx dt + int u1 phi_j(.,0) dx - int u0 d_t phi_j(.,0) dx.
// The duality pairing against u0 reduces to an integral because discrete
// test functions are smooth.
inline std::vector<double> assemble_load(const C1Space& sp, const QuadRule& rule, const ElementTables& tb,
                                         const QuadField& B, const ScalarFn& u0, const ScalarFn& u1) {
  const SpaceTimeMesh& mesh = sp.mesh;
  require_shape(B, mesh, rule, "assemble_load");
  if (u0 && std::abs(u0(0.0)) > 1e-10)
    throw std::invalid_argument("assemble_load: u0(0) must vanish (H^1_(0) membership)");
  const int n = rule.order, npt = n * n;
  std::vector<double> load(sp.free_count, 0.0);
  const double area = mesh.cell_area();
  std::int32_t dofs[16];
  for (int j = 0; j < mesh.nt; ++j)
    for (int i = 0; i < mesh.nx; ++i) {
      const int c = j * mesh.nx + i;
      const double* Bcell = B.values.data() + static_cast<std::size_t>(c) * npt;
      double le[16] = {0.0};
      bool any = false;
      for (int qt = 0; qt < n; ++qt)
        for (int qx = 0; qx < n; ++qx) {
          const int q = qt * n + qx;
          const double wb = rule.weights[qt] * rule.weights[qx] * area * Bcell[q];
          if (wb == 0.0) continue;
          any = true;
          const double* v = tb.val.data() + static_cast<std::size_t>(q) * 16;
          for (int loc = 0; loc < 16; ++loc) le[loc] += wb * v[loc];
        }
      if (j == 0 && (u0 || u1)) {
        any = true;
        for (int qx = 0; qx < n; ++qx) {
          const double x = (i + rule.points[qx]) * mesh.dx;
          const double w = rule.weights[qx] * mesh.dx;
          const double w1 = u1 ? w * u1(x) : 0.0;
          const double w0 = u0 ? w * u0(x) : 0.0;
          const double* bv = tb.bot_val.data() + static_cast<std::size_t>(qx) * 16;
          const double* bd = tb.bot_dt.data() + static_cast<std::size_t>(qx) * 16;
          for (int loc = 0; loc < 16; ++loc) le[loc] += w1 * bv[loc] - w0 * bd[loc];
        }
      }
      if (!any) continue;
      cell_free_dofs(sp, i, j, dofs);
      for (int loc = 0; loc < 16; ++loc)
        if (dofs[loc] >= 0) load[dofs[loc]] += le[loc];
    }
  return load;
}

struct AssembledSystem {
  SparseSpd gram;
  std::vector<double> load;
};

inline AssembledSystem assemble_system(const C1Space& sp, const QuadRule& rule, const QuadField& A,
                                       const QuadField& B, const ScalarFn& u0, const ScalarFn& u1,
                                       const ScalarFn& eta) {
  const ElementTables tb = build_element_tables(sp.mesh, rule);
  const SparsityPattern pat = build_pattern(sp);
  return {assemble_gram(sp, rule, tb, pat, A, eta), assemble_load(sp, rule, tb, B, u0, u1)};
}

// State y = (d_tt - d_xx) p + A p sampled at every quadrature point.
inline QuadField extract_state(const C1Space& sp, const QuadRule& rule, const ElementTables& tb,
                               const std::vector<double>& p_free, const QuadField& A) {
  const SpaceTimeMesh& mesh = sp.mesh;
  require_shape(A, mesh, rule, "extract_state");
  if (static_cast<int>(p_free.size()) != sp.free_count)
    throw std::invalid_argument("extract_state: coefficient dimension mismatch");
  const int n = rule.order, npt = n * n;
  QuadField y = make_field(mesh, rule);
  std::int32_t dofs[16];
  double coef[16];
  for (int j = 0; j < mesh.nt; ++j)
    for (int i = 0; i < mesh.nx; ++i) {
      const int c = j * mesh.nx + i;
      cell_free_dofs(sp, i, j, dofs);
      for (int loc = 0; loc < 16; ++loc) coef[loc] = dofs[loc] >= 0 ? p_free[dofs[loc]] : 0.0;
      const double* Acell = A.values.data() + static_cast<std::size_t>(c) * npt;
      double* ycell = y.values.data() + static_cast<std::size_t>(c) * npt;
      for (int q = 0; q < npt; ++q) {
        const double* v = tb.val.data() + static_cast<std::size_t>(q) * 16;
        const double* l = tb.lap.data() + static_cast<std::size_t>(q) * 16;
        double lp = 0.0, vp = 0.0;
        for (int loc = 0; loc < 16; ++loc) {
          lp += coef[loc] * l[loc];
          vp += coef[loc] * v[loc];
        }
        ycell[q] = lp + Acell[q] * vp;
      }
    }
  return y;
}

inline QuadField extract_state(const C1Space& sp, const QuadRule& rule, const std::vector<double>& p_free,
                               const QuadField& A) {
  return extract_state(sp, rule, build_element_tables(sp.mesh, rule), p_free, A);
}

// Control v(t) = -eta(t)^2 p(1,t) at the trace quadrature points.
inline BoundaryTrace extract_control(const C1Space& sp, const QuadRule& rule, const ElementTables& tb,
                                     const std::vector<double>& p_free, const ScalarFn& eta) {
  const SpaceTimeMesh& mesh = sp.mesh;
  if (static_cast<int>(p_free.size()) != sp.free_count)
    throw std::invalid_argument("extract_control: coefficient dimension mismatch");
  const int n = rule.order;
  BoundaryTrace tr = make_trace(mesh, rule);
  std::int32_t dofs[16];
  double coef[16];
  for (int j = 0; j < mesh.nt; ++j) {
    cell_free_dofs(sp, mesh.nx - 1, j, dofs);
    for (int loc = 0; loc < 16; ++loc) coef[loc] = dofs[loc] >= 0 ? p_free[dofs[loc]] : 0.0;
    for (int qt = 0; qt < n; ++qt) {
      const double* rv = tb.right_val.data() + static_cast<std::size_t>(qt) * 16;
      double p1 = 0.0;
      for (int loc = 0; loc < 16; ++loc) p1 += coef[loc] * rv[loc];
      const std::size_t k = static_cast<std::size_t>(j) * n + qt;
      const double e = eta ? eta(tr.times[k]) : 1.0;
      tr.values[k] = -e * e * p1;
    }
  }
  return tr;
}

inline BoundaryTrace extract_control(const C1Space& sp, const QuadRule& rule, const std::vector<double>& p_free,
                                     const ScalarFn& eta) {
  return extract_control(sp, rule, build_element_tables(sp.mesh, rule), p_free, eta);
}

}  // namespace wavectrl
