#pragma once

// Dense linear algebra on row-major buffers. Sizes in this project stay
// small (a few hundred per side at most), so the SVD is a one-sided
// Jacobi: slower than blocked methods but simple and numerically robust.
// The gemm kernels are the hot path of training; they are written so the
// inner loop runs over contiguous memory and auto-vectorizes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "dkc/errors.hpp"
#include "dkc/rng.hpp"
#include "dkc/tensor.hpp"

namespace dkc {

// C[r x n] += A[r x k] * B[k x n]
inline void gemm_acc(const double* __restrict a, const double* __restrict b,
                     double* __restrict c, int r, int k, int n) {
  for (int i = 0; i < r; ++i) {
    const double* ai = a + static_cast<std::size_t>(i) * k;
    double* ci = c + static_cast<std::size_t>(i) * n;
    for (int t = 0; t < k; ++t) {
      const double av = ai[t];
      const double* bt = b + static_cast<std::size_t>(t) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bt[j];
    }
  }
}

// C[r x n] += A[r x k] * B[n x k]^T
inline void gemm_acc_nt(const double* __restrict a, const double* __restrict b,
                        double* __restrict c, int r, int k, int n) {
  for (int i = 0; i < r; ++i) {
    const double* ai = a + static_cast<std::size_t>(i) * k;
    double* ci = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<std::size_t>(j) * k;
      double acc = 0.0;
      for (int t = 0; t < k; ++t) acc += ai[t] * bj[t];
      ci[j] += acc;
    }
  }
}

// C[r x n] += A[k x r]^T * B[k x n]
inline void gemm_acc_tn(const double* __restrict a, const double* __restrict b,
                        double* __restrict c, int r, int k, int n) {
  for (int t = 0; t < k; ++t) {
    const double* at = a + static_cast<std::size_t>(t) * r;
    const double* bt = b + static_cast<std::size_t>(t) * n;
    for (int i = 0; i < r; ++i) {
      const double av = at[i];
      double* ci = c + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bt[j];
    }
  }
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows())
    throw DimError("matmul: incompatible shapes " + shape_str(a) + " * " + shape_str(b));
  Tensor c = Tensor::zeros({a.rows(), b.cols()});
  gemm_acc(a.data.data(), b.data.data(), c.data.data(), a.rows(), a.cols(), b.cols());
  return c;
}

// a * b^T
inline Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols())
    throw DimError("matmul_nt: incompatible shapes " + shape_str(a) + " * " + shape_str(b) + "^T");
  Tensor c = Tensor::zeros({a.rows(), b.rows()});
  gemm_acc_nt(a.data.data(), b.data.data(), c.data.data(), a.rows(), a.cols(), b.rows());
  return c;
}

// a^T * b
inline Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.rows() != b.rows())
    throw DimError("matmul_tn: incompatible shapes " + shape_str(a) + "^T * " + shape_str(b));
  Tensor c = Tensor::zeros({a.cols(), b.cols()});
  gemm_acc_tn(a.data.data(), b.data.data(), c.data.data(), a.cols(), a.rows(), b.cols());
  return c;
}

inline Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw DimError("transpose: rank-2 required");
  Tensor t = Tensor::zeros({a.cols(), a.rows()});
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) t.at(j, i) = a.at(i, j);
  return t;
}

inline Tensor identity(int n) {
  Tensor t = Tensor::zeros({n, n});
  for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

inline Vec matvec(const Tensor& a, const Vec& x) {
  if (a.rank() != 2 || a.cols() != static_cast<int>(x.size()))
    throw DimError("matvec: incompatible shapes");
  Vec y(static_cast<std::size_t>(a.rows()), 0.0);
  for (int i = 0; i < a.rows(); ++i) {
    const double* ai = a.row_ptr(i);
    double acc = 0.0;
    for (int j = 0; j < a.cols(); ++j) acc += ai[j] * x[j];
    y[i] = acc;
  }
  return y;
}

inline double dot(const Vec& a, const Vec& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// ---------------------------------------------------------------------
// Singular value decomposition, one-sided Jacobi.
//
// Factors m = sum_j sigma[j] * outer(ut.row(j), vt.row(j)): ut rows are
// left singular vectors (length m.rows()), vt rows are right singular
// vectors (length m.cols()), sigma descending. Economy size min(r, c).
// ---------------------------------------------------------------------
struct SvdResult {
  Tensor ut;
  std::vector<double> sigma;
  Tensor vt;
};

namespace detail {

// One-sided Jacobi on the rows of w [c x r] (the columns of the input,
// stored contiguously). Rotations accumulate into vt [c x c].
inline void jacobi_orthogonalize(Tensor& w, Tensor& vt) {
  const int c = w.rows();
  const int r = w.cols();
  const double eps = 1e-13;
  const int max_sweeps = 60;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < c - 1; ++p) {
      for (int q = p + 1; q < c; ++q) {
        double* wp = w.row_ptr(p);
        double* wq = w.row_ptr(q);
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (int t = 0; t < r; ++t) {
          alpha += wp[t] * wp[t];
          beta += wq[t] * wq[t];
          gamma += wp[t] * wq[t];
        }
        if (gamma == 0.0 || std::fabs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        for (int i = 0; i < r; ++i) {
          const double a = wp[i], b = wq[i];
          wp[i] = cs * a - sn * b;
          wq[i] = sn * a + cs * b;
        }
        double* vp = vt.row_ptr(p);
        double* vq = vt.row_ptr(q);
        for (int i = 0; i < c; ++i) {
          const double a = vp[i], b = vq[i];
          vp[i] = cs * a - sn * b;
          vq[i] = sn * a + cs * b;
        }
      }
    }
    if (!rotated) break;
  }
}

}  // namespace detail

inline SvdResult svd(const Tensor& m) {
  if (m.rank() != 2) throw DimError("svd: rank-2 required");
  const bool flipped = m.rows() < m.cols();
  const Tensor mm = flipped ? transpose(m) : m;  // rows >= cols
  const int r = mm.rows(), c = mm.cols();

  // w rows are the columns of mm, so the Jacobi inner loops are contiguous.
  Tensor w = transpose(mm);
  Tensor vt = identity(c);
  detail::jacobi_orthogonalize(w, vt);

  std::vector<double> sigma(static_cast<std::size_t>(c), 0.0);
  for (int j = 0; j < c; ++j) {
    const double* wj = w.row_ptr(j);
    double s = 0.0;
    for (int t = 0; t < r; ++t) s += wj[t] * wj[t];
    sigma[static_cast<std::size_t>(j)] = std::sqrt(s);
  }

  std::vector<int> order(static_cast<std::size_t>(c));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return sigma[static_cast<std::size_t>(a)] > sigma[static_cast<std::size_t>(b)]; });

  Tensor ut = Tensor::zeros({c, r});
  Tensor vt_sorted = Tensor::zeros({c, c});
  std::vector<double> sig_sorted(static_cast<std::size_t>(c));
  for (int j = 0; j < c; ++j) {
    const int src = order[static_cast<std::size_t>(j)];
    const double s = sigma[static_cast<std::size_t>(src)];
    sig_sorted[static_cast<std::size_t>(j)] = s;
    const double inv = s > 0.0 ? 1.0 / s : 0.0;
    const double* wsrc = w.row_ptr(src);
    double* udst = ut.row_ptr(j);
    for (int t = 0; t < r; ++t) udst[t] = wsrc[t] * inv;
    const double* vsrc = vt.row_ptr(src);
    double* vdst = vt_sorted.row_ptr(j);
    for (int t = 0; t < c; ++t) vdst[t] = vsrc[t];
  }

  if (flipped) return {std::move(vt_sorted), std::move(sig_sorted), std::move(ut)};
  return {std::move(ut), std::move(sig_sorted), std::move(vt_sorted)};
}

// Moore-Penrose pseudoinverse via SVD; singular values below
// rcond * sigma_max are truncated to zero. All-zero input gives an
// all-zero result.
inline Tensor pinv(const Tensor& m, double rcond = 1e-12) {
  if (m.rank() != 2) throw DimError("pinv: rank-2 required");
  const SvdResult f = svd(m);
  const int r = m.rows(), c = m.cols();
  const int k = static_cast<int>(f.sigma.size());
  const double cutoff = f.sigma.empty() ? 0.0 : rcond * f.sigma[0];
  Tensor out = Tensor::zeros({c, r});
  for (int j = 0; j < k; ++j) {
    const double s = f.sigma[static_cast<std::size_t>(j)];
    if (s <= cutoff || s == 0.0) continue;
    const double inv = 1.0 / s;
    const double* vj = f.vt.row_ptr(j);
    const double* uj = f.ut.row_ptr(j);
    for (int i = 0; i < c; ++i) {
      const double vi = vj[i] * inv;
      double* oi = out.row_ptr(i);
      for (int t = 0; t < r; ++t) oi[t] += vi * uj[t];
    }
  }
  return out;
}

// Closed-form minimizer K = P * G^+ of the one-step regression objective
// whose covariance accumulators are P (cross) and G (auto). G must be
// square; rank deficiency is handled by the pseudoinverse truncation.
inline Tensor least_squares_fit(const Tensor& p, const Tensor& g) {
  if (g.rank() != 2 || g.rows() != g.cols()) throw DimError("least_squares_fit: G must be square");
  if (p.rank() != 2 || p.cols() != g.rows())
    throw DimError("least_squares_fit: P/G shape mismatch " + shape_str(p) + " vs " + shape_str(g));
  return matmul(p, pinv(g));
}

// Lower-triangular Cholesky factor; returns false when the matrix is not
// symmetric positive definite.
inline bool cholesky(const Tensor& m, Tensor& lower) {
  if (m.rank() != 2 || m.rows() != m.cols()) throw DimError("cholesky: square required");
  const int n = m.rows();
  lower = Tensor::zeros({n, n});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = m.at(i, j);
      for (int t = 0; t < j; ++t) s -= lower.at(i, t) * lower.at(j, t);
      if (i == j) {
        if (s <= 0.0 || !std::isfinite(s)) return false;
        lower.at(i, i) = std::sqrt(s);
      } else {
        lower.at(i, j) = s / lower.at(j, j);
      }
    }
  }
  return true;
}

// Solve m * x = rhs for symmetric positive definite m.
inline Tensor spd_solve(const Tensor& m, const Tensor& rhs) {
  if (rhs.rank() != 2 || rhs.rows() != m.rows()) throw DimError("spd_solve: rhs shape mismatch");
  Tensor l;
  if (!cholesky(m, l)) throw DimError("spd_solve: matrix is not positive definite");
  const int n = m.rows(), k = rhs.cols();
  Tensor y = Tensor::zeros({n, k});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) {
      double s = rhs.at(i, j);
      for (int t = 0; t < i; ++t) s -= l.at(i, t) * y.at(t, j);
      y.at(i, j) = s / l.at(i, i);
    }
  Tensor x = Tensor::zeros({n, k});
  for (int i = n - 1; i >= 0; --i)
    for (int j = 0; j < k; ++j) {
      double s = y.at(i, j);
      for (int t = i + 1; t < n; ++t) s -= l.at(t, i) * x.at(t, j);
      x.at(i, j) = s / l.at(i, i);
    }
  return x;
}

// Spectral radius estimate by power iteration with geometric averaging of
// the late growth factors; good enough for stability checks.
inline double spectral_radius_estimate(const Tensor& a, int iters = 300, std::uint64_t seed = 1) {
  if (a.rank() != 2 || a.rows() != a.cols()) throw DimError("spectral_radius_estimate: square required");
  const int n = a.rows();
  if (n == 0) return 0.0;
  Rng rng(derive_seed(seed, "power-iteration"));
  Vec x(static_cast<std::size_t>(n));
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  double log_acc = 0.0;
  int counted = 0;
  const int warmup = iters / 3;
  for (int it = 0; it < iters; ++it) {
    Vec y = matvec(a, x);
    double ny = std::sqrt(dot(y, y));
    if (ny == 0.0 || !std::isfinite(ny)) return ny == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    for (double& v : y) v /= ny;
    if (it >= warmup) {
      log_acc += std::log(ny);
      ++counted;
    }
    x = std::move(y);
  }
  return counted > 0 ? std::exp(log_acc / counted) : 0.0;
}

}  // namespace dkc
