// Nonlinearity family f, its derivative, the secant quotient, the
// line-search remainder G, and the time cut-off eta.
#pragma once

#include "wavectrl/mesh.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

namespace wavectrl {

enum class NonlinKind { PaperLog2, Linear, Custom };

// f(r) = c_f * r * ln^2(1+|r|) for PaperLog2, f(r) = c_f * r for Linear,
// user-supplied evaluators for Custom. alpha is Holder metadata only.
struct Nonlinearity {
  NonlinKind kind = NonlinKind::PaperLog2;
  double c_f = -1.0;
  double alpha = 1.0;
  std::function<double(double)> f;   // Custom only
  std::function<double(double)> fp;  // Custom only

  static Nonlinearity paper_log2(double c_f) { return {NonlinKind::PaperLog2, c_f, 1.0, {}, {}}; }
  static Nonlinearity linear(double c) { return {NonlinKind::Linear, c, 1.0, {}, {}}; }
  static Nonlinearity custom(std::function<double(double)> f, std::function<double(double)> fp, double alpha = 1.0) {
    return {NonlinKind::Custom, 0.0, alpha, std::move(f), std::move(fp)};
  }
};

// order 0 -> f(r), order 1 -> f'(r).
inline double eval_f(const Nonlinearity& spec, double r, int order = 0) {
  if (std::isnan(r)) throw std::invalid_argument("eval_f: NaN input");
  if (order != 0 && order != 1) throw std::invalid_argument("eval_f: order must be 0 or 1");
  switch (spec.kind) {
    case NonlinKind::Linear:
      return order == 0 ? spec.c_f * r : spec.c_f;
    case NonlinKind::Custom:
      return order == 0 ? spec.f(r) : spec.fp(r);
    case NonlinKind::PaperLog2: {
      const double a = std::abs(r);
      const double l = std::log1p(a);
      if (order == 0) return spec.c_f * r * l * l;
      return spec.c_f * (l * l + 2.0 * a * l / (1.0 + a));
    }
  }
  return 0.0;
}

// Secant quotient (f(r)-f(0))/r with the f'(0) limit below |r| < 1e-8,
// where the quotient would lose half the significand.
inline double eval_fhat(const Nonlinearity& spec, double r) {
  if (std::isnan(r)) throw std::invalid_argument("eval_fhat: NaN input");
  if (std::abs(r) < 1e-8) return eval_f(spec, 0.0, 1);
  return (eval_f(spec, r, 0) - eval_f(spec, 0.0, 0)) / r;
}

// Pointwise line-search remainder G(lambda) = f(y-lambda*Y) - f(y) + lambda*f'(y)*Y.
inline QuadField eval_G(const QuadField& yk, const QuadField& Yk, double lambda, const Nonlinearity& spec) {
  require_same_shape(yk, Yk, "eval_G");
  if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("eval_G: lambda must lie in [0,1]");
  QuadField out = yk;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const double y = yk.values[i], Y = Yk.values[i];
    out.values[i] = eval_f(spec, y - lambda * Y) - eval_f(spec, y) + lambda * eval_f(spec, y, 1) * Y;
  }
  return out;
}

// Cut-off vanishing at t=0 and t=T; the single-exp form keeps the
// endpoint underflow graceful (exact zero).
inline double eval_eta(double t, double T) {
  if (t < -1e-12 || t > T + 1e-12) throw std::invalid_argument("eval_eta: t outside [0,T]");
  const double eps = 1e-6;
  const double expo = 2.0 / (T + eps) - 0.5 / (t + eps) - 0.5 / (T - t + eps);
  return std::exp(expo);
}

}  // namespace wavectrl
