#pragma once

#include "kdrsdl/tensor.hpp"

namespace kdrsdl {

/// Soft thresholding sign(x) * max(|x| - tau, 0). Entries with |x| == tau
/// map to exactly zero. Throws DomainError for tau < 0.
Matrix shrink(const Matrix& x, double tau);
Tensor3 shrink(const Tensor3& x, double tau);

/// The discrete-time Sylvester (Stein) equation X - lhs * X * rhs = constant.
struct SteinProblem {
  Matrix lhs_factor;
  Matrix rhs_factor;
  Matrix constant;
};

/// Smallest |1 - d_i g_j| below which solve_stein reports a singular equation.
inline constexpr double kSteinMargin = 1e-12;

/// Solves a Stein equation whose two factors are symmetric.
///
/// Both factors are diagonalized (lhs = P D P^T, rhs = Q G Q^T), which turns
/// the equation into the elementwise system Z_ij (1 - d_i g_j) = (P^T C Q)_ij.
/// Cost is O(r^3) time and O(r^2) memory.
///
/// Throws AsymmetricInputError for non-symmetric factors, DimensionError for
/// non-square or mismatched operands and SingularEquationError when some
/// |1 - d_i g_j| falls below kSteinMargin.
Matrix solve_stein(const SteinProblem& p);

/// Factor-once form of solve_stein for many right-hand sides sharing the
/// same pair of factors.
class SteinSolver {
 public:
  SteinSolver(const Matrix& lhs_factor, const Matrix& rhs_factor);

  Matrix solve(const Matrix& constant) const;
  Index dim() const noexcept { return left_.rows(); }

 private:
  Matrix left_;
  Matrix right_;
  Matrix inv_denominators_;
};

/// Right division M = target * gram^{-1} for a symmetric positive definite
/// gram, via Cholesky. Throws NotPositiveDefiniteError when the
/// factorization fails.
Matrix solve_gram_system(const Matrix& target, const Matrix& gram);

struct SvdResult {
  Matrix u;
  Vector s;
  Matrix v;
};

/// Thin SVD x = U diag(s) V^T with k = min(rows, cols) columns.
///
/// Singular values are nonincreasing. Signs are normalized so the
/// largest-magnitude entry of each column of U is nonnegative (first such
/// entry on ties); V is flipped alongside. Throws NonFiniteError on NaN/Inf.
SvdResult thin_svd(const Matrix& x);

struct EigResult {
  Matrix q;
  Vector d;
};

/// Eigendecomposition x = Q diag(d) Q^T of a symmetric matrix, d
/// nondecreasing. Rejects input whose asymmetry exceeds 1e-12 relative.
EigResult symmetric_eig(const Matrix& x);

Matrix kron(const Matrix& a, const Matrix& b);

double nuclear_norm(const Matrix& x);

/// True when max|x - x^T| <= tol * max(1e-300, max|x|).
bool is_symmetric(const Matrix& x, double tol = 1e-12);

}  // namespace kdrsdl
