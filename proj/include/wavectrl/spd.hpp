// Sparse symmetric positive definite storage, banded Cholesky
// factorization and solve, plus a diagonally preconditioned CG fallback.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace wavectrl {

// Upper triangle (including diagonal) in CSR, columns sorted per row.
struct SparseSpd {
  int n = 0;
  std::vector<int> row_ptr;  // size n+1
  std::vector<int> col;
  std::vector<double> val;
};

class NotPositiveDefiniteError : public std::runtime_error {
 public:
  explicit NotPositiveDefiniteError(int pivot_index)
      : std::runtime_error("matrix is not positive definite (pivot " + std::to_string(pivot_index) + ")"),
        pivot_index_(pivot_index) {}
  int pivot_index() const { return pivot_index_; }

 private:
  int pivot_index_;
};

// y = M x with M symmetric stored as upper triangle.
inline std::vector<double> matvec(const SparseSpd& M, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != M.n) throw std::invalid_argument("matvec: dimension mismatch");
  std::vector<double> y(M.n, 0.0);
  for (int r = 0; r < M.n; ++r) {
    double xr = x[r], acc = 0.0;
    for (int k = M.row_ptr[r]; k < M.row_ptr[r + 1]; ++k) {
      int c = M.col[k];
      double v = M.val[k];
      acc += v * x[c];
      if (c != r) y[c] += v * xr;
    }
    y[r] += acc;
  }
  return y;
}

namespace detail {

using BandMap = Eigen::Map<Eigen::MatrixXd, 0, Eigen::OuterStride<>>;
using ConstBandMap = Eigen::Map<const Eigen::MatrixXd, 0, Eigen::OuterStride<>>;

// Lower band storage, column-major: A(i,j) for 0 <= i-j <= kd lives at
// ab[j*(kd+1) + (i-j)]. Any block that stays inside the band is a dense
// matrix with leading dimension kd (the dpbtrf view trick).
inline int band_cholesky_inplace(int n, int kd, double* ab, int nb) {
  const int ldab = kd + 1, ldv = kd;
  if (kd == 0) {
    for (int j = 0; j < n; ++j) {
      double d = ab[j];
      if (!(d > 0.0)) return j + 1;
      ab[j] = std::sqrt(d);
    }
    return 0;
  }
  nb = std::max(1, std::min(nb, kd));
  Eigen::MatrixXd work = Eigen::MatrixXd::Zero(nb, nb);
  for (int i = 0; i < n; i += nb) {
    const int ib = std::min(nb, n - i);
    double* base = ab + static_cast<std::size_t>(i) * ldab;
    BandMap A11(base, ib, ib, Eigen::OuterStride<>(ldv));
    for (int q = 0; q < ib; ++q) {
      double d = A11(q, q);
      for (int k = 0; k < q; ++k) d -= A11(q, k) * A11(q, k);
      if (!(d > 0.0)) return i + q + 1;
      d = std::sqrt(d);
      A11(q, q) = d;
      if (q + 1 < ib) {
        auto tail = A11.col(q).segment(q + 1, ib - q - 1);
        if (q > 0) tail.noalias() -= A11.block(q + 1, 0, ib - q - 1, q) * A11.row(q).head(q).transpose();
        tail /= d;
      }
    }
    if (i + ib >= n) break;
    const int i2 = std::min(kd - ib, n - i - ib);
    const int i3 = std::min(ib, n - i - kd);
    if (i2 > 0) {
      BandMap A21(base + ib, i2, ib, Eigen::OuterStride<>(ldv));
      A11.triangularView<Eigen::Lower>().transpose().solveInPlace<Eigen::OnTheRight>(A21);
      BandMap A22(ab + static_cast<std::size_t>(i + ib) * ldab, i2, i2, Eigen::OuterStride<>(ldv));
      A22.selfadjointView<Eigen::Lower>().rankUpdate(A21, -1.0);
    }
    if (i3 > 0) {
      // The triangle at the band edge is not addressable as a dense block;
      // stage it in `work` exactly as dpbtrf does.
      BandMap A31(base + kd, i3, ib, Eigen::OuterStride<>(ldv));
      auto W = work.topLeftCorner(i3, ib);
      for (int q = 0; q < ib; ++q)
        for (int p = 0; p < i3; ++p) W(p, q) = (p <= q) ? A31(p, q) : 0.0;
      A11.triangularView<Eigen::Lower>().transpose().solveInPlace<Eigen::OnTheRight>(W);
      if (i2 > 0) {
        ConstBandMap A21(base + ib, i2, ib, Eigen::OuterStride<>(ldv));
        BandMap A32(ab + static_cast<std::size_t>(i + ib) * ldab + (kd - ib), i3, i2, Eigen::OuterStride<>(ldv));
        A32.noalias() -= W * A21.transpose();
      }
      BandMap A33(ab + static_cast<std::size_t>(i + kd) * ldab, i3, i3, Eigen::OuterStride<>(ldv));
      A33.selfadjointView<Eigen::Lower>().rankUpdate(W, -1.0);
      for (int q = 0; q < ib; ++q)
        for (int p = 0; p <= std::min(q, i3 - 1); ++p) A31(p, q) = W(p, q);
    }
  }
  return 0;
}

inline void band_solve_inplace(int n, int kd, const double* ab, double* x) {
  const int ldab = kd + 1;
  for (int j = 0; j < n; ++j) {  // L y = b
    const double* colj = ab + static_cast<std::size_t>(j) * ldab;
    double xj = x[j] / colj[0];
    x[j] = xj;
    const int m = std::min(kd, n - 1 - j);
    for (int r = 1; r <= m; ++r) x[j + r] -= colj[r] * xj;
  }
  for (int j = n - 1; j >= 0; --j) {  // L^T x = y
    const double* colj = ab + static_cast<std::size_t>(j) * ldab;
    double s = x[j];
    const int m = std::min(kd, n - 1 - j);
    for (int r = 1; r <= m; ++r) s -= colj[r] * x[j + r];
    x[j] = s / colj[0];
  }
}

inline double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// r = b - M x with long double accumulation; sharpens iterative refinement.
inline std::vector<double> residual_accurate(const SparseSpd& M, const std::vector<double>& x,
                                             const std::vector<double>& b) {
  std::vector<long double> acc(M.n);
  for (int i = 0; i < M.n; ++i) acc[i] = b[i];
  for (int r = 0; r < M.n; ++r) {
    long double xr = x[r];
    for (int k = M.row_ptr[r]; k < M.row_ptr[r + 1]; ++k) {
      const int c = M.col[k];
      const long double v = M.val[k];
      acc[r] -= v * x[c];
      if (c != r) acc[c] -= v * xr;
    }
  }
  std::vector<double> out(M.n);
  for (int i = 0; i < M.n; ++i) out[i] = static_cast<double>(acc[i]);
  return out;
}

}  // namespace detail

// Banded lower Cholesky factor of a SparseSpd, computed after symmetric
// Jacobi equilibration (the Hermite dof scaling spreads the raw diagonal
// over ~10 decades). Keeps the matrix for residual checks and refinement.
class SpdFactor {
 public:
  int dim() const { return n_; }
  int bandwidth() const { return kd_; }
  // Pivots of the unscaled Cholesky factor: chol(M) = D^{1/2} chol(D^{-1/2} M D^{-1/2}).
  double pivot(int i) const { return band_[static_cast<std::size_t>(i) * (kd_ + 1)] / scale_[i]; }
  std::vector<double> pivots() const {
    std::vector<double> p(n_);
    for (int i = 0; i < n_; ++i) p[i] = pivot(i);
    return p;
  }
  // Crude bound from the extreme pivots of the equilibrated factor.
  double condition_estimate() const { return cond_; }
  const SparseSpd& matrix() const { return *matrix_; }

  friend SpdFactor factorize(SparseSpd M, int block);
  friend std::vector<double> solve(const SpdFactor& f, const std::vector<double>& b);

 private:
  void scaled_solve(std::vector<double>& r) const {  // solves M d = r in place
    for (int i = 0; i < n_; ++i) r[i] *= scale_[i];
    detail::band_solve_inplace(n_, kd_, band_.data(), r.data());
    for (int i = 0; i < n_; ++i) r[i] *= scale_[i];
  }

  int n_ = 0;
  int kd_ = 0;
  double cond_ = 0.0;
  std::vector<double> band_;
  std::vector<double> scale_;  // D^{-1/2}
  std::shared_ptr<const SparseSpd> matrix_;
};

inline SpdFactor factorize(SparseSpd M, int block = 48) {
  SpdFactor f;
  f.n_ = M.n;
  f.scale_.assign(M.n, 0.0);
  for (int r = 0; r < M.n; ++r)
    for (int k = M.row_ptr[r]; k < M.row_ptr[r + 1]; ++k)
      if (M.col[k] == r) f.scale_[r] = M.val[k];
  for (int i = 0; i < M.n; ++i) {
    if (!(f.scale_[i] > 0.0)) throw NotPositiveDefiniteError(i);
    f.scale_[i] = 1.0 / std::sqrt(f.scale_[i]);
  }
  int kd = 0;
  for (int r = 0; r < M.n; ++r)
    if (M.row_ptr[r] < M.row_ptr[r + 1]) kd = std::max(kd, M.col[M.row_ptr[r + 1] - 1] - r);
  f.kd_ = kd;
  f.band_.assign(static_cast<std::size_t>(kd + 1) * M.n, 0.0);
  for (int r = 0; r < M.n; ++r)
    for (int k = M.row_ptr[r]; k < M.row_ptr[r + 1]; ++k)
      f.band_[static_cast<std::size_t>(r) * (kd + 1) + (M.col[k] - r)] =
          M.val[k] * f.scale_[r] * f.scale_[M.col[k]];
  int info = detail::band_cholesky_inplace(M.n, kd, f.band_.data(), block);
  if (info != 0) throw NotPositiveDefiniteError(info - 1);
  double pmin = f.band_[0], pmax = pmin;
  for (int i = 1; i < M.n; ++i) {
    const double p = f.band_[static_cast<std::size_t>(i) * (kd + 1)];
    pmin = std::min(pmin, p);
    pmax = std::max(pmax, p);
  }
  f.cond_ = (pmax / pmin) * (pmax / pmin);
  f.matrix_ = std::make_shared<const SparseSpd>(std::move(M));
  return f;
}

// Direct solve with a residual check; iterative refinement (accurate
// residual) while the relative residual exceeds 1e-10. Accepts residuals
// above 1e-8 only when they sit below the double-precision floor
// eps*|| |M||x| || / ||b||: past that point rounding the exact solution
// already produces a larger residual than the computed one.
inline std::vector<double> solve(const SpdFactor& f, const std::vector<double>& b) {
  if (static_cast<int>(b.size()) != f.n_) throw std::invalid_argument("solve: dimension mismatch");
  const double bnorm = detail::norm2(b);
  std::vector<double> x = b;
  if (bnorm == 0.0) return x;  // exact zero solution
  f.scaled_solve(x);
  double relres = 0.0, prev = 0.0;
  for (int pass = 0; pass < 4; ++pass) {
    std::vector<double> r = detail::residual_accurate(*f.matrix_, x, b);
    relres = detail::norm2(r) / bnorm;
    if (relres <= 1e-10) return x;
    if (pass > 0 && relres > 0.5 * prev) break;  // stalled at the floor
    prev = relres;
    f.scaled_solve(r);
    for (int i = 0; i < f.n_; ++i) x[i] += r[i];
    if (pass == 3) {
      r = detail::residual_accurate(*f.matrix_, x, b);
      relres = detail::norm2(r) / bnorm;
    }
  }
  if (relres <= 1e-8) return x;
  std::vector<double> ax(f.n_, 0.0);
  for (int r = 0; r < f.n_; ++r)
    for (int k = f.matrix_->row_ptr[r]; k < f.matrix_->row_ptr[r + 1]; ++k) {
      const int c = f.matrix_->col[k];
      const double v = std::abs(f.matrix_->val[k]);
      ax[r] += v * std::abs(x[c]);
      if (c != r) ax[c] += v * std::abs(x[r]);
    }
  const double floor = 2.22e-16 * detail::norm2(ax) / bnorm;
  if (relres <= floor) return x;
  throw std::runtime_error("solve: residual " + std::to_string(relres) +
                           " above 1e-8 and above the representation floor " + std::to_string(floor));
}

// Jacobi-preconditioned conjugate gradients; fallback for meshes whose
// band factor would not fit in memory.
inline std::vector<double> cg_solve(const SparseSpd& M, const std::vector<double>& b, double tol = 1e-10,
                                    int max_iter = 0) {
  if (static_cast<int>(b.size()) != M.n) throw std::invalid_argument("cg_solve: dimension mismatch");
  if (max_iter <= 0) max_iter = 20 * M.n;
  std::vector<double> diag(M.n, 0.0);
  for (int r = 0; r < M.n; ++r)
    for (int k = M.row_ptr[r]; k < M.row_ptr[r + 1]; ++k)
      if (M.col[k] == r) diag[r] = M.val[k];
  for (int i = 0; i < M.n; ++i)
    if (!(diag[i] > 0.0)) throw NotPositiveDefiniteError(i);
  const double bnorm = detail::norm2(b);
  std::vector<double> x(M.n, 0.0);
  if (bnorm == 0.0) return x;
  std::vector<double> r = b, z(M.n), p(M.n);
  for (int i = 0; i < M.n; ++i) z[i] = r[i] / diag[i];
  p = z;
  double rz = 0.0;
  for (int i = 0; i < M.n; ++i) rz += r[i] * z[i];
  for (int it = 0; it < max_iter; ++it) {
    std::vector<double> q = matvec(M, p);
    double pq = 0.0;
    for (int i = 0; i < M.n; ++i) pq += p[i] * q[i];
    if (!(pq > 0.0)) throw NotPositiveDefiniteError(-1);
    double alpha = rz / pq;
    for (int i = 0; i < M.n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    if (detail::norm2(r) <= tol * bnorm) return x;
    for (int i = 0; i < M.n; ++i) z[i] = r[i] / diag[i];
    double rz_new = 0.0;
    for (int i = 0; i < M.n; ++i) rz_new += r[i] * z[i];
    double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < M.n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw std::runtime_error("cg_solve: no convergence within max_iter");
}

}  // namespace wavectrl
