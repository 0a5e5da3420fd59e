// Outer algorithms: damped-Newton least squares (LS), Newton (LS with the
// step forced to 1), and the two fixed-point iterations (PF1, PF2).
// The discrete residual is maintained by the explicit recursion
//   r_{k+1} = (1-lambda_k) r_k + G_k(lambda_k),
// which never forms second derivatives of the iterates; E = ||r||^2 / 2.
#pragma once

#include "wavectrl/control.hpp"
#include "wavectrl/mesh.hpp"
#include "wavectrl/nonlinearity.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wavectrl {

enum class Algorithm { LS, Newton, PF1, PF2 };
enum class RunStatus { Converged, Diverged, MaxIter };
enum class DataFamily { Cosine, Ramp100, Mixed };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::LS: return "ls";
    case Algorithm::Newton: return "newton";
    case Algorithm::PF1: return "pf1";
    case Algorithm::PF2: return "pf2";
  }
  return "?";
}

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "converged";
    case RunStatus::Diverged: return "diverged";
    case RunStatus::MaxIter: return "max_iter";
  }
  return "?";
}

struct IterationRecord {
  int k = 0;
  double sqrt2E = 0.0;
  std::optional<double> lambda;  // absent for k=0 and for PF runs
  double norm_y = 0.0;
  double norm_v = 0.0;
  std::optional<double> rel_dy;
  std::optional<double> rel_dv;
};

struct RunConfig {
  int nx = 100;
  int nt = 300;
  double T = 3.0;
  int quad_order = 4;
  Nonlinearity nonlinearity = Nonlinearity::paper_log2(-1.0);
  DataFamily data_family = DataFamily::Cosine;
  double c_u0 = 20.0;
  double c_u1 = 100.0;
  double tol = 1e-5;
  int kmax = 1000;
  double blowup = 1e10;
  double ls_tol = 1e-3;  // trichotomy interval tolerance
  Algorithm algorithm = Algorithm::LS;

  InitialData initial_data() const {
    switch (data_family) {
      case DataFamily::Cosine: return InitialData::cosine(c_u0);
      case DataFamily::Ramp100: return InitialData::ramp100();
      case DataFamily::Mixed: return InitialData::mixed(c_u0, c_u1);
    }
    return InitialData::zero();
  }

  void validate() const {
    if (!(T > 2.0)) throw std::invalid_argument("controllability time must exceed 2");
    if (nx < 1 || nt < 1) throw std::invalid_argument("cell counts must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
    if (kmax < 1) throw std::invalid_argument("kmax must be >= 1");
    if (!(blowup > 0.0)) throw std::invalid_argument("blowup threshold must be positive");
    if (!(ls_tol > 0.0)) throw std::invalid_argument("line-search tolerance must be positive");
    if (quad_order < 1 || quad_order > 10) throw std::invalid_argument("quadrature order must be in [1,10]");
  }
};

struct RunReport {
  Algorithm algorithm = Algorithm::LS;
  RunStatus status = RunStatus::MaxIter;
  std::vector<IterationRecord> records;
  std::optional<int> k_star;  // iteration at which sqrt(2E) first fell below tol
  QuadField y;                // final state iterate
  BoundaryTrace v;            // final control iterate
};

// r <- (1-lambda) r + G, pointwise.
inline QuadField residual_update(const QuadField& r, const QuadField& G, double lambda) {
  require_same_shape(r, G, "residual_update");
  QuadField out = r;
  const double om = 1.0 - lambda;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = om * r.values[i] + G.values[i];
  return out;
}

// Trichotomy on phi(lambda) = ||(1-lambda) r + G(lambda)||^2 over [0,1]
// down to the interval tolerance, then the best of {midpoint, 1, 0}.
// Checking the endpoints costs two evaluations and makes the terminal
// Newton regime exact: when the minimum sits at lambda=1 the returned step
// is exactly 1 and the linear case annihilates the residual.
// Returns (lambda, E_next = phi(lambda)/2).
inline std::pair<double, double> line_search(const SpaceTimeMesh& mesh, const QuadRule& rule, const QuadField& r,
                                             const QuadField& y, const QuadField& Y, const Nonlinearity& spec,
                                             double tol_interval) {
  require_shape(r, mesh, rule, "line_search");
  require_same_shape(r, y, "line_search");
  require_same_shape(r, Y, "line_search");
  if (!(tol_interval > 0.0)) throw std::invalid_argument("line_search: tol_interval must be positive");

  const std::size_t m = r.values.size();
  std::vector<double> fy(m), fpY(m);
  for (std::size_t i = 0; i < m; ++i) {
    fy[i] = eval_f(spec, y.values[i]);
    fpY[i] = eval_f(spec, y.values[i], 1) * Y.values[i];
  }
  const int n = rule.order, npt = n * n;
  std::vector<double> w2(npt);
  for (int qt = 0; qt < n; ++qt)
    for (int qx = 0; qx < n; ++qx) w2[qt * n + qx] = rule.weights[qt] * rule.weights[qx];
  const double area = mesh.cell_area();

  auto phi = [&](double lam) {
    const double om = 1.0 - lam;
    double total = 0.0;
    std::size_t i = 0;
    for (int c = 0; c < mesh.cells(); ++c) {
      double cell = 0.0;
      for (int q = 0; q < npt; ++q, ++i) {
        const double g = eval_f(spec, y.values[i] - lam * Y.values[i]) - fy[i] + lam * fpY[i];
        const double s = om * r.values[i] + g;
        cell += w2[q] * s * s;
      }
      total += cell;
    }
    return total * area;
  };

  double lo = 0.0, hi = 1.0;
  while (hi - lo > tol_interval) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (phi(m1) < phi(m2))
      hi = m2;
    else
      lo = m1;
  }
  double lambda = 0.5 * (lo + hi);
  double best = phi(lambda);
  const double at_one = phi(1.0);
  if (at_one <= best) {
    lambda = 1.0;
    best = at_one;
  }
  const double at_zero = phi(0.0);
  if (at_zero < best) {
    lambda = 0.0;
    best = at_zero;
  }
  return {lambda, 0.5 * best};
}

namespace detail {

inline double diff_norm(const SpaceTimeMesh& mesh, const QuadRule& rule, const QuadField& a, const QuadField& b) {
  QuadField d = a;
  for (std::size_t i = 0; i < d.values.size(); ++i) d.values[i] -= b.values[i];
  return l2_norm(mesh, rule, d);
}

inline double diff_norm(const SpaceTimeMesh& mesh, const QuadRule& rule, const BoundaryTrace& a,
                        const BoundaryTrace& b) {
  BoundaryTrace d = a;
  for (std::size_t i = 0; i < d.values.size(); ++i) d.values[i] -= b.values[i];
  return l2_norm(mesh, rule, d);
}

struct RunState {
  const Discretization* disc;
  const RunConfig* cfg;
  RunReport report;
  double last_norm_y = 0.0;
  double last_norm_v = 0.0;

  bool diverged(double sqrt2E) const {
    const double cap = cfg->blowup;
    const auto& rec = report.records.back();
    return !std::isfinite(sqrt2E) || !std::isfinite(rec.norm_y) || !std::isfinite(rec.norm_v) ||
           sqrt2E > cap || rec.norm_y > cap || rec.norm_v > cap;
  }

  void push(int k, double sqrt2E, std::optional<double> lambda, const QuadField& y, const BoundaryTrace& v,
            const QuadField* y_prev, const BoundaryTrace* v_prev) {
    IterationRecord rec;
    rec.k = k;
    rec.sqrt2E = sqrt2E;
    rec.lambda = lambda;
    rec.norm_y = l2_norm(disc->mesh, disc->rule, y);
    rec.norm_v = l2_norm(disc->mesh, disc->rule, v);
    if (y_prev && last_norm_y > 0.0) rec.rel_dy = diff_norm(disc->mesh, disc->rule, y, *y_prev) / last_norm_y;
    if (v_prev && last_norm_v > 0.0) rec.rel_dv = diff_norm(disc->mesh, disc->rule, v, *v_prev) / last_norm_v;
    last_norm_y = rec.norm_y;
    last_norm_v = rec.norm_v;
    report.records.push_back(rec);
  }
};

// LS (and Newton when force_full_step): damped-Newton least squares on
// E via the inner null-control solves and the residual recursion.
inline RunReport run_ls_engine(const Discretization& disc, const RunConfig& cfg, bool force_full_step,
                               Algorithm tag) {
  cfg.validate();
  const auto& spec = cfg.nonlinearity;
  const InitialData data = cfg.initial_data();
  const ScalarFn eta = [T = disc.mesh.T](double t) { return eval_eta(t, T); };

  RunState st{&disc, &cfg, {}, 0.0, 0.0};
  st.report.algorithm = tag;

  const QuadField zero = make_field(disc.mesh, disc.rule);
  NullControlOperator op0(disc, zero, eta);
  ControlSolution init = op0.solve(zero, data);
  QuadField y = std::move(init.y);
  BoundaryTrace v = std::move(init.v);

  // r0 = f(y0): the initial pair solves the homogeneous linear problem.
  QuadField r = y;
  for (double& val : r.values) val = eval_f(spec, val);
  double sqrt2E = l2_norm(disc.mesh, disc.rule, r);
  st.push(0, sqrt2E, std::nullopt, y, v, nullptr, nullptr);
  if (sqrt2E <= cfg.tol) {
    st.report.status = RunStatus::Converged;
    st.report.k_star = 0;
  } else if (st.diverged(sqrt2E)) {
    st.report.status = RunStatus::Diverged;
  } else {
    for (int k = 0; k < cfg.kmax; ++k) {
      QuadField A = y;
      for (double& val : A.values) val = eval_f(spec, val, 1);
      ControlSolution desc = [&] {
        try {
          NullControlOperator op(disc, A, eta);
          return op.solve(r, InitialData::zero());
        } catch (const std::exception& e) {
          throw std::runtime_error(std::string(to_string(tag)) + " iteration " + std::to_string(k + 1) +
                                   ": inner solve failed: " + e.what());
        }
      }();
      double lambda = 1.0;
      if (!force_full_step) lambda = line_search(disc.mesh, disc.rule, r, y, desc.y, spec, cfg.ls_tol).first;
      const QuadField G = eval_G(y, desc.y, lambda, spec);
      r = residual_update(r, G, lambda);
      const QuadField y_prev = y;
      for (std::size_t i = 0; i < y.values.size(); ++i) y.values[i] -= lambda * desc.y.values[i];
      const BoundaryTrace v_prev = v;
      for (std::size_t i = 0; i < v.values.size(); ++i) v.values[i] -= lambda * desc.v.values[i];
      sqrt2E = l2_norm(disc.mesh, disc.rule, r);
      st.push(k + 1, sqrt2E, lambda, y, v, &y_prev, &v_prev);
      if (sqrt2E <= cfg.tol) {
        st.report.status = RunStatus::Converged;
        st.report.k_star = k + 1;
        break;
      }
      if (st.diverged(sqrt2E)) {
        st.report.status = RunStatus::Diverged;
        break;
      }
      if (k + 1 == cfg.kmax) st.report.status = RunStatus::MaxIter;
    }
  }
  st.report.y = std::move(y);
  st.report.v = std::move(v);
  return st.report;
}

// PF1: y_{k+1} solves L y + fhat(y_k) y = -f(0);  PF2: y_{k+1} solves
// L y = -f(y_k); both with the original initial data and weight.
// Reported residuals use the defining identity of each iteration:
//   PF1: r_{k+1} = f(y_{k+1}) - f(0) - fhat(y_k) y_{k+1}
//   PF2: r_{k+1} = f(y_{k+1}) - f(y_k)
// which vanish exactly at a fixed point and need no second derivatives.
inline RunReport run_pf_engine(const Discretization& disc, const RunConfig& cfg, Algorithm variant) {
  cfg.validate();
  const auto& spec = cfg.nonlinearity;
  const InitialData data = cfg.initial_data();
  const ScalarFn eta = [T = disc.mesh.T](double t) { return eval_eta(t, T); };
  const bool pf1 = variant == Algorithm::PF1;
  const double f0 = eval_f(spec, 0.0);

  RunState st{&disc, &cfg, {}, 0.0, 0.0};
  st.report.algorithm = variant;

  const QuadField zero = make_field(disc.mesh, disc.rule);
  NullControlOperator op0(disc, zero, eta);
  ControlSolution init = op0.solve(zero, data);
  QuadField y = std::move(init.y);
  BoundaryTrace v = std::move(init.v);

  QuadField fy = y;  // f(y_k)
  for (double& val : fy.values) val = eval_f(spec, val);
  double sqrt2E = l2_norm(disc.mesh, disc.rule, fy);
  // No stopping test at k=0: a fixed-point iterate exists only after one
  // application of the map.
  st.push(0, sqrt2E, std::nullopt, y, v, nullptr, nullptr);
  st.report.status = RunStatus::MaxIter;

  for (int k = 0; k < cfg.kmax; ++k) {
    QuadField B = fy;
    for (double& val : B.values) val = -val;  // PF2 source; PF1 overwrites below
    ControlSolution next = [&] {
      try {
        if (pf1) {
          QuadField Ahat = y;
          for (double& val : Ahat.values) val = eval_fhat(spec, val);
          for (double& val : B.values) val = -f0;
          NullControlOperator op(disc, std::move(Ahat), eta);
          return op.solve(B, data);
        }
        return op0.solve(B, data);
      } catch (const std::exception& e) {
        throw std::runtime_error(std::string(to_string(variant)) + " iteration " + std::to_string(k + 1) +
                                 ": inner solve failed: " + e.what());
      }
    }();
    QuadField r = next.y;
    if (pf1) {
      for (std::size_t i = 0; i < r.values.size(); ++i) {
        const double yn = next.y.values[i];
        r.values[i] = eval_f(spec, yn) - f0 - eval_fhat(spec, y.values[i]) * yn;
      }
    } else {
      QuadField fy_new = next.y;
      for (double& val : fy_new.values) val = eval_f(spec, val);
      for (std::size_t i = 0; i < r.values.size(); ++i) r.values[i] = fy_new.values[i] - fy.values[i];
      fy = std::move(fy_new);
    }
    const QuadField y_prev = std::move(y);
    y = std::move(next.y);
    if (pf1) {
      fy = y;
      for (double& val : fy.values) val = eval_f(spec, val);
    }
    const BoundaryTrace v_prev = std::move(v);
    v = std::move(next.v);
    sqrt2E = l2_norm(disc.mesh, disc.rule, r);
    st.push(k + 1, sqrt2E, std::nullopt, y, v, &y_prev, &v_prev);
    if (sqrt2E <= cfg.tol) {
      st.report.status = RunStatus::Converged;
      st.report.k_star = k + 1;
      break;
    }
    if (st.diverged(sqrt2E)) {
      st.report.status = RunStatus::Diverged;
      break;
    }
  }
  st.report.y = std::move(y);
  st.report.v = std::move(v);
  return st.report;
}

}  // namespace detail

// force_full_step pins lambda = 1, which makes the run coincide with
// run_newton iterate by iterate.
inline RunReport run_ls(const Discretization& disc, const RunConfig& cfg, bool force_full_step = false) {
  return detail::run_ls_engine(disc, cfg, force_full_step, force_full_step ? Algorithm::Newton : Algorithm::LS);
}

inline RunReport run_newton(const Discretization& disc, const RunConfig& cfg) {
  return detail::run_ls_engine(disc, cfg, true, Algorithm::Newton);
}

inline RunReport run_pf(const Discretization& disc, const RunConfig& cfg, Algorithm variant) {
  if (variant != Algorithm::PF1 && variant != Algorithm::PF2)
    throw std::invalid_argument("run_pf: variant must be PF1 or PF2");
  return detail::run_pf_engine(disc, cfg, variant);
}

inline RunReport run(const Discretization& disc, const RunConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::LS: return run_ls(disc, cfg);
    case Algorithm::Newton: return run_newton(disc, cfg);
    case Algorithm::PF1:
    case Algorithm::PF2: return run_pf(disc, cfg, cfg.algorithm);
  }
  throw std::invalid_argument("run: unknown algorithm");
}

inline RunReport run(const RunConfig& cfg) {
  cfg.validate();
  const Discretization disc = make_discretization(cfg.nx, cfg.nt, cfg.T, cfg.quad_order);
  return run(disc, cfg);
}

}  // namespace wavectrl
