// One weighted linear null-control solve: the inner building block of
// every outer algorithm. The dual coefficients p solve the Galerkin
// restriction of the variational problem; the returned pair (y,v) is the
// discrete minimizer of J(y,v) = ||y||^2 + ||eta^{-1} v||^2 over discrete
// controlled trajectories reaching (0,0) at t=T.
#pragma once

#include "wavectrl/c1space.hpp"
#include "wavectrl/mesh.hpp"
#include "wavectrl/nonlinearity.hpp"
#include "wavectrl/spd.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>

namespace wavectrl {

struct InitialData {
  ScalarFn u0;  // position, must vanish at x=0
  ScalarFn u1;  // velocity

  static InitialData zero() { return {nullptr, nullptr}; }
  static InitialData cosine(double c_u0) {
    return {[c_u0](double x) { return c_u0 * (std::cos(M_PI * x) - 1.0); }, nullptr};
  }
  // u0 = 100 (x-1/2) 1_{(1/2,1]},  u1 = 100 1_{(1/2,1]}
  static InitialData ramp100() {
    return {[](double x) { return x > 0.5 ? 100.0 * (x - 0.5) : 0.0; },
            [](double x) { return x > 0.5 ? 100.0 : 0.0; }};
  }
  static InitialData mixed(double c_u0, double c_u1) {
    return {[c_u0](double x) { return c_u0 * (std::cos(M_PI * x) - 1.0); },
            [c_u1](double x) { return x > 0.5 ? c_u1 : 0.0; }};
  }
};

// Everything that depends only on (mesh, rule): built once per run and
// shared by all inner solves.
struct Discretization {
  SpaceTimeMesh mesh;
  QuadRule rule;
  C1Space space;
  ElementTables tables;
  SparsityPattern pattern;
};

inline Discretization make_discretization(int nx, int nt, double T, int quad_order) {
  Discretization d;
  d.mesh = build_mesh(nx, nt, T);
  d.rule = tensor_quadrature(quad_order);
  d.space = build_c1_space(d.mesh);
  d.tables = build_element_tables(d.mesh, d.rule);
  d.pattern = build_pattern(d.space);
  return d;
}

struct ControlProblem {
  QuadField A;
  QuadField B;
  InitialData data;
  ScalarFn eta;  // nullptr = unit weight
};

struct ControlSolution {
  std::vector<double> p;  // dual coefficients (free dofs)
  QuadField y;
  BoundaryTrace v;
  double cost = 0.0;    // J(y,v) with the 0-weight limit convention
  double norm_y = 0.0;  // ||y||_{L2(Q_T)}
  double norm_v = 0.0;  // ||v||_{L2(0,T)}
};

// Gram operator for a fixed potential A and weight eta, factorized once;
// solves any number of loads (B, data). This is what makes fixed-point
// runs with a constant potential cheap.
class NullControlOperator {
 public:
  NullControlOperator(const Discretization& disc, QuadField A, ScalarFn eta)
      : disc_(&disc), A_(std::move(A)), eta_(std::move(eta)),
        factor_(factorize(assemble_gram(disc.space, disc.rule, disc.tables, disc.pattern, A_, eta_))) {}

  const SpdFactor& factor() const { return factor_; }

  ControlSolution solve(const QuadField& B, const InitialData& data) const {
    const auto& d = *disc_;
    std::vector<double> load = assemble_load(d.space, d.rule, d.tables, B, data.u0, data.u1);
    ControlSolution sol;
    sol.p = wavectrl::solve(factor_, load);
    sol.y = extract_state(d.space, d.rule, d.tables, sol.p, A_);
    sol.v = extract_control(d.space, d.rule, d.tables, sol.p, eta_);
    sol.norm_y = l2_norm(d.mesh, d.rule, sol.y);
    sol.norm_v = l2_norm(d.mesh, d.rule, sol.v);
    // J = ||y||^2 + ||eta p(1,.)||^2: where eta underflows the control is
    // exactly 0 and contributes 0, which avoids the 0/0 of eta^{-1} v.
    double trace_part = 0.0;
    const int n = d.rule.order;
    std::size_t k = 0;
    for (int j = 0; j < d.mesh.nt; ++j)
      for (int q = 0; q < n; ++q, ++k) {
        const double e = eta_ ? eta_(sol.v.times[k]) : 1.0;
        const double ep = e == 0.0 ? 0.0 : sol.v.values[k] / e;  // eta * p(1,t)
        trace_part += d.rule.weights[q] * ep * ep;
      }
    sol.cost = sol.norm_y * sol.norm_y + trace_part * d.mesh.dt;
    return sol;
  }

 private:
  const Discretization* disc_;
  QuadField A_;
  ScalarFn eta_;
  SpdFactor factor_;
};

inline ControlSolution solve_null_control(const Discretization& disc, const ControlProblem& problem) {
  if (!(disc.mesh.T > 2.0))
    throw std::invalid_argument("solve_null_control: controllability time must exceed 2");
  NullControlOperator op(disc, problem.A, problem.eta);
  return op.solve(problem.B, problem.data);
}

}  // namespace wavectrl
