#include "kdrsdl/numerics.hpp"

#include <cmath>
#include <string>

#include "kdrsdl/error.hpp"

namespace kdrsdl {
namespace {

void require_threshold(double tau) {
  if (!(tau >= 0.0)) {
    throw DomainError("shrinkage threshold must be nonnegative, got " +
                      std::to_string(tau));
  }
}

double shrink_scalar(double v, double tau) {
  const double mag = std::abs(v) - tau;
  if (mag <= 0.0) return 0.0;
  return v > 0.0 ? mag : -mag;
}

}  // namespace

Matrix shrink(const Matrix& x, double tau) {
  require_threshold(tau);
  return x.unaryExpr([tau](double v) { return shrink_scalar(v, tau); });
}

Tensor3 shrink(const Tensor3& x, double tau) {
  require_threshold(tau);
  Tensor3 out = x;
  for (double& v : out.data()) v = shrink_scalar(v, tau);
  return out;
}

bool is_symmetric(const Matrix& x, double tol) {
  if (x.rows() != x.cols()) return false;
  if (x.size() == 0) return true;
  const double scale = std::max(1e-300, x.cwiseAbs().maxCoeff());
  return (x - x.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

SteinSolver::SteinSolver(const Matrix& lhs_factor, const Matrix& rhs_factor) {
  const Index r = lhs_factor.rows();
  if (lhs_factor.cols() != r || rhs_factor.rows() != r || rhs_factor.cols() != r) {
    throw DimensionError("Stein equation operands must be square of equal size");
  }
  if (!is_symmetric(lhs_factor) || !is_symmetric(rhs_factor)) {
    throw AsymmetricInputError("solve_stein supports symmetric factors only");
  }
  const EigResult left = symmetric_eig(lhs_factor);
  const EigResult right = symmetric_eig(rhs_factor);
  inv_denominators_.resize(r, r);
  for (Index j = 0; j < r; ++j) {
    for (Index i = 0; i < r; ++i) {
      const double denom = 1.0 - left.d(i) * right.d(j);
      if (!(std::abs(denom) >= kSteinMargin)) {
        throw SingularEquationError(
            "Stein equation is singular: |1 - d_i g_j| = " +
            std::to_string(std::abs(denom)));
      }
      inv_denominators_(i, j) = 1.0 / denom;
    }
  }
  left_ = left.q;
  right_ = right.q;
}

Matrix SteinSolver::solve(const Matrix& constant) const {
  if (constant.rows() != dim() || constant.cols() != dim()) {
    throw DimensionError("Stein constant term has the wrong size");
  }
  const Matrix z =
      (left_.transpose() * constant * right_).cwiseProduct(inv_denominators_);
  return left_ * z * right_.transpose();
}

Matrix solve_stein(const SteinProblem& p) {
  if (p.constant.rows() != p.constant.cols()) {
    throw DimensionError("Stein constant term must be square");
  }
  return SteinSolver(p.lhs_factor, p.rhs_factor).solve(p.constant);
}

Matrix solve_gram_system(const Matrix& target, const Matrix& gram) {
  if (gram.rows() != gram.cols() || target.cols() != gram.rows()) {
    throw DimensionError("solve_gram_system: target.cols() must equal gram size");
  }
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefiniteError("gram matrix is not positive definite");
  }
  // M gram = T  <=>  gram M^T = T^T for symmetric gram.
  return llt.solve(target.transpose()).transpose();
}

SvdResult thin_svd(const Matrix& x) {
  if (!x.allFinite()) {
    throw NonFiniteError("thin_svd: input contains NaN or Inf");
  }
  const Index k = std::min(x.rows(), x.cols());
  SvdResult out;
  if (k == 0) return out;

  Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.u = svd.matrixU();
  out.s = svd.singularValues();
  out.v = svd.matrixV();

  for (Index c = 0; c < k; ++c) {
    Index arg = 0;
    out.u.col(c).cwiseAbs().maxCoeff(&arg);
    if (out.u(arg, c) < 0.0) {
      out.u.col(c) *= -1.0;
      out.v.col(c) *= -1.0;
    }
  }
  return out;
}

EigResult symmetric_eig(const Matrix& x) {
  if (x.rows() != x.cols()) {
    throw DimensionError("symmetric_eig: matrix must be square");
  }
  if (!x.allFinite()) {
    throw NonFiniteError("symmetric_eig: input contains NaN or Inf");
  }
  if (!is_symmetric(x)) {
    throw AsymmetricInputError("symmetric_eig: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(x);
  if (eig.info() != Eigen::Success) {
    throw Error("symmetric_eig: eigensolver did not converge");
  }
  return {eig.eigenvectors(), eig.eigenvalues()};
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

double nuclear_norm(const Matrix& x) {
  if (x.size() == 0) return 0.0;
  return thin_svd(x).s.sum();
}

}  // namespace kdrsdl
