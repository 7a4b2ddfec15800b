#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dgsqp/errors.hpp"

namespace dgsqp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/**
 * Dense real symmetric matrix.
 *
 * Construction checks entries(i, j) == entries(j, i) to within an absolute
 * tolerance of 1e-12 and throws SymmetryError otherwise. The stored matrix is
 * exactly symmetric (the upper and lower triangles are averaged).
 */
class SymmetricMatrix {
 public:
  static constexpr double kSymmetryTolerance = 1e-12;

  explicit SymmetricMatrix(const Matrix& entries) {
    if (entries.rows() != entries.cols() || entries.rows() == 0) {
      throw SymmetryError("symmetric matrix must be square with dim >= 1");
    }
    const double asym = (entries - entries.transpose()).cwiseAbs().maxCoeff();
    if (!(asym <= kSymmetryTolerance)) {
      throw SymmetryError("matrix is not symmetric (max |A - A^T| = " +
                          std::to_string(asym) + ")");
    }
    entries_ = 0.5 * (entries + entries.transpose());
  }

  /// Builds (A + A^T) / 2 from an arbitrary square matrix.
  static SymmetricMatrix symmetric_part(const Matrix& a) {
    return SymmetricMatrix(Matrix(0.5 * (a + a.transpose())));
  }

  int dim() const { return static_cast<int>(entries_.rows()); }
  const Matrix& entries() const { return entries_; }
  double operator()(int i, int j) const { return entries_(i, j); }

 private:
  Matrix entries_;
};

struct EigenDecomposition {
  /// Eigenvalues sorted in descending order.
  Vector values;
  /// Orthonormal eigenvectors stored column-wise, matching `values`.
  Matrix vectors;
};

namespace detail {

inline double off_diagonal_norm(const Matrix& a) {
  double sum = 0.0;
  const Eigen::Index n = a.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i != j) sum += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(sum);
}

}  // namespace detail

/**
 * Symmetric eigendecomposition by cyclic Jacobi rotations.
 *
 * Sweeps until the off-diagonal Frobenius norm drops below 1e-12 times the
 * Frobenius norm of the input (or 1e-300 for the zero matrix), up to 100
 * sweeps.
 */
inline EigenDecomposition sym_eig(const SymmetricMatrix& input) {
  constexpr int kMaxSweeps = 100;
  constexpr double kRelativeTolerance = 1e-12;

  Matrix a = input.entries();
  const int n = input.dim();
  Matrix v = Matrix::Identity(n, n);
  const double threshold =
      std::max(kRelativeTolerance * a.norm(), 1e-300);

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (detail::off_diagonal_norm(a) <= threshold) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(q, p);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        double* col_p = a.col(p).data();
        double* col_q = a.col(q).data();
        for (int k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = col_p[k];
          const double akq = col_q[k];
          col_p[k] = c * akp - s * akq;
          col_q[k] = s * akp + c * akq;
        }
        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          a(p, k) = col_p[k];
          a(q, k) = col_q[k];
        }

        double* vp = v.col(p).data();
        double* vq = v.col(q).data();
        for (int k = 0; k < n; ++k) {
          const double vkp = vp[k];
          const double vkq = vq[k];
          vp[k] = c * vkp - s * vkq;
          vq[k] = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return a(i, i) > a(j, j); });

  EigenDecomposition out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (int i = 0; i < n; ++i) {
    out.values(i) = a(order[i], order[i]);
    out.vectors.col(i) = v.col(order[i]);
  }
  return out;
}

/**
 * Projects a symmetric matrix onto the positive semidefinite cone and shifts
 * it by epsilon: sum_i max(0, s_i) v_i v_i^T + epsilon I.
 */
inline SymmetricMatrix proj_psd(const SymmetricMatrix& a, double epsilon) {
  const EigenDecomposition eig = sym_eig(a);
  const Vector clipped = eig.values.cwiseMax(0.0);
  Matrix out = eig.vectors * clipped.asDiagonal() * eig.vectors.transpose();
  out.diagonal().array() += epsilon;
  return SymmetricMatrix(Matrix(0.5 * (out + out.transpose())));
}

/// Solves A x = b with partial-pivoted LU. Throws SingularMatrixError when a
/// pivot is negligible relative to the largest one.
inline Vector solve_linear(const Matrix& a, const Vector& b) {
  if (a.rows() != a.cols() || a.rows() != b.size()) {
    throw Error("solve_linear: dimension mismatch");
  }
  if (a.rows() == 0) return Vector(0);
  const Eigen::PartialPivLU<Matrix> lu(a);
  const auto u_diag = lu.matrixLU().diagonal().cwiseAbs();
  const double largest = u_diag.maxCoeff();
  if (!(largest > 0.0) || u_diag.minCoeff() <= 1e-14 * largest) {
    throw SingularMatrixError("solve_linear: matrix is singular");
  }
  Vector x = lu.solve(b);
  if (!x.allFinite()) {
    throw SingularMatrixError("solve_linear: non-finite solution");
  }
  return x;
}

}  // namespace dgsqp
