#include "kdrsdl/rpca.hpp"

#include <algorithm>
#include <cmath>

#include "kdrsdl/error.hpp"
#include "kdrsdl/numerics.hpp"

namespace kdrsdl {

Matrix svt(const Matrix& x, double tau) {
  if (!(tau >= 0.0)) throw DomainError("svt threshold must be nonnegative");
  if (x.size() == 0) return x;
  const SvdResult svd = thin_svd(x);
  Index kept = 0;
  while (kept < svd.s.size() && svd.s(kept) > tau) ++kept;
  if (kept == 0) return Matrix::Zero(x.rows(), x.cols());
  const Vector shrunk = svd.s.head(kept).array() - tau;
  return svd.u.leftCols(kept) * shrunk.asDiagonal() * svd.v.leftCols(kept).transpose();
}

RpcaResult rpca_ialm(const Matrix& x, const RpcaOptions& options) {
  if (!x.allFinite()) throw NonFiniteError("rpca_ialm: input contains NaN or Inf");
  if (x.size() == 0) throw DimensionError("rpca_ialm: empty input");
  const double lambda = options.lambda.value_or(
      1.0 / std::sqrt(static_cast<double>(std::max(x.rows(), x.cols()))));
  if (!(lambda > 0.0)) throw DomainError("rpca_ialm: lambda must be positive");
  if (!(options.rho > 1.0)) throw DomainError("rpca_ialm: rho must exceed 1");

  RpcaResult out;
  out.low_rank = Matrix::Zero(x.rows(), x.cols());
  out.sparse = Matrix::Zero(x.rows(), x.cols());
  const double x_norm = x.norm();
  if (x_norm == 0.0) {
    out.converged = true;
    return out;
  }

  const double spectral = thin_svd(x).s(0);
  const double dual_norm = std::max(spectral, x.cwiseAbs().maxCoeff() / lambda);
  Matrix dual = x / dual_norm;
  double mu = options.mu_scale / spectral;
  const double mu_cap = mu * options.mu_cap_factor;

  for (int k = 0; k < options.max_iter; ++k) {
    out.low_rank = svt(x - out.sparse + dual / mu, 1.0 / mu);
    out.sparse = shrink(x - out.low_rank + dual / mu, lambda / mu);
    const Matrix residual = x - out.low_rank - out.sparse;
    dual += mu * residual;
    mu = std::min(mu_cap, options.rho * mu);
    out.iterations = k + 1;
    if (residual.norm() / x_norm <= options.epsilon) {
      out.converged = true;
      break;
    }
  }
  return out;
}

RpcaTensorResult rpca_tensor(const Tensor3& x, const RpcaOptions& options) {
  const RpcaResult res = rpca_ialm(unfold_slices(x), options);
  return {fold_slices(res.low_rank, x.rows(), x.cols()),
          fold_slices(res.sparse, x.rows(), x.cols()), res.iterations, res.converged};
}

}  // namespace kdrsdl
