// Independent finite-difference forward solver: explicit leapfrog for
// d_tt y - d_xx y + f(y) = 0 on (0,1) with y(0,t)=0 and a Neumann control
// d_x y(1,t) = v(t) imposed through a second-order ghost node. Shares no
// assembly code with the space-time FEM, which is what qualifies it as an
// oracle for the computed controls.
#pragma once

#include "wavectrl/mesh.hpp"
#include "wavectrl/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace wavectrl {

struct ReplayResult {
  int M = 0;          // spatial cells; M+1 nodes
  double dx = 0.0;
  double dt = 0.0;
  double T = 0.0;
  std::vector<double> final_y;   // y(., T) on the nodes
  std::vector<double> final_yt;  // d_t y(., T), second-order one-sided
  std::vector<double> times;     // step times, size steps+1
  std::vector<double> energy;    // ||y(., t_j)||_{L2(0,1)}, same size
};

struct FinalEnergy {
  double value = 0.0;
  bool relative = true;  // false when the initial data vanishes
};

namespace detail {

// Piecewise-linear evaluation of the trace samples; constant beyond the
// first/last sample (the cut-off makes both ends vanish anyway).
inline double trace_at(const std::vector<double>& times, const std::vector<double>& values, double t) {
  if (times.empty()) return 0.0;
  if (t <= times.front()) return values.front();
  if (t >= times.back()) return values.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - times.begin());
  const double t0 = times[hi - 1], t1 = times[hi];
  const double w = (t - t0) / (t1 - t0);
  return (1.0 - w) * values[hi - 1] + w * values[hi];
}

inline double grid_l2(const std::vector<double>& y, double dx) {
  double s = 0.0;
  for (std::size_t m = 0; m + 1 < y.size(); ++m) s += 0.5 * (y[m] * y[m] + y[m + 1] * y[m + 1]);
  return std::sqrt(s * dx);
}

inline double grid_h1_sq(const std::vector<double>& y, double dx) {
  double s = 0.0;
  for (std::size_t m = 0; m + 1 < y.size(); ++m) {
    const double d = (y[m + 1] - y[m]) / dx;
    s += d * d;
  }
  return s * dx;
}

}  // namespace detail

// v = nullptr replays the uncontrolled equation; f = nullptr the linear one.
inline ReplayResult fd_forward(const ScalarFn& u0, const ScalarFn& u1, const BoundaryTrace* v,
                               const Nonlinearity* f, int M, double cfl, double T) {
  if (M < 16) throw std::invalid_argument("fd_forward: need at least 16 spatial cells");
  if (!(cfl > 0.0) || cfl > 1.0) throw std::invalid_argument("fd_forward: cfl must lie in (0,1]");
  if (!(T > 0.0)) throw std::invalid_argument("fd_forward: final time must be positive");

  ReplayResult res;
  res.M = M;
  res.T = T;
  res.dx = 1.0 / M;
  const int steps = static_cast<int>(std::ceil(T / (cfl * res.dx) - 1e-12));
  res.dt = T / steps;

  auto fval = [&](double r) { return f ? eval_f(*f, r) : 0.0; };
  auto vval = [&](double t) { return v ? detail::trace_at(v->times, v->values, t) : 0.0; };

  const double dx2 = res.dx * res.dx;
  const double c2 = res.dt * res.dt / dx2;
  std::vector<double> prev(M + 1), cur(M + 1), next(M + 1);
  for (int m = 0; m <= M; ++m) prev[m] = u0 ? u0(m * res.dx) : 0.0;
  prev[0] = 0.0;

  res.times.reserve(steps + 1);
  res.energy.reserve(steps + 1);
  res.times.push_back(0.0);
  res.energy.push_back(detail::grid_l2(prev, res.dx));

  // first step by Taylor expansion: y^1 = y^0 + dt u1 + dt^2/2 (y''_xx - f(y^0))
  {
    const double v0 = vval(0.0);
    for (int m = 1; m <= M; ++m) {
      const double yl = prev[m - 1];
      const double yr = m == M ? prev[M - 1] + 2.0 * res.dx * v0 : prev[m + 1];
      const double lap = (yl - 2.0 * prev[m] + yr) / dx2;
      const double vel = u1 ? u1(m * res.dx) : 0.0;
      cur[m] = prev[m] + res.dt * vel + 0.5 * res.dt * res.dt * (lap - fval(prev[m]));
    }
    cur[0] = 0.0;
    res.times.push_back(res.dt);
    res.energy.push_back(detail::grid_l2(cur, res.dx));
  }

  std::vector<double> before_last = prev;  // y^{N-2}, for the one-sided velocity
  for (int step = 2; step <= steps; ++step) {
    const double t = (step - 1) * res.dt;  // ghost uses the current level
    const double vn = vval(t);
    for (int m = 1; m <= M; ++m) {
      const double yl = cur[m - 1];
      const double yr = m == M ? cur[M - 1] + 2.0 * res.dx * vn : cur[m + 1];
      next[m] = 2.0 * cur[m] - prev[m] + c2 * (yl - 2.0 * cur[m] + yr) - res.dt * res.dt * fval(cur[m]);
    }
    next[0] = 0.0;
    before_last = prev;
    prev.swap(cur);
    cur.swap(next);
    res.times.push_back(step * res.dt);
    res.energy.push_back(detail::grid_l2(cur, res.dx));
  }

  res.final_y = cur;
  res.final_yt.assign(M + 1, 0.0);
  if (steps >= 2) {
    for (int m = 0; m <= M; ++m)
      res.final_yt[m] = (3.0 * cur[m] - 4.0 * prev[m] + before_last[m]) / (2.0 * res.dt);
  } else if (steps == 1) {
    for (int m = 0; m <= M; ++m) res.final_yt[m] = (cur[m] - prev[m]) / res.dt;
  }
  return res;
}

// ( ||y(.,T)||_{H1}^2 + ||d_t y(.,T)||_{L2}^2 )^{1/2} relative to the same
// measure of (u0, u1); absolute (flagged) when the initial data vanishes.
inline FinalEnergy final_energy(const ReplayResult& res, const ScalarFn& u0, const ScalarFn& u1) {
  if (res.final_y.empty()) throw std::invalid_argument("final_energy: empty replay result");
  const double num =
      std::sqrt(detail::grid_h1_sq(res.final_y, res.dx) +
                std::pow(detail::grid_l2(res.final_yt, res.dx), 2));
  std::vector<double> y0(res.M + 1), y1(res.M + 1);
  for (int m = 0; m <= res.M; ++m) {
    y0[m] = u0 ? u0(m * res.dx) : 0.0;
    y1[m] = u1 ? u1(m * res.dx) : 0.0;
  }
  const double den =
      std::sqrt(detail::grid_h1_sq(y0, res.dx) + std::pow(detail::grid_l2(y1, res.dx), 2));
  if (den < 1e-300) return {num, false};
  return {num / den, true};
}

}  // namespace wavectrl
