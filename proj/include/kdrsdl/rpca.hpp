#pragma once

#include <optional>

#include "kdrsdl/tensor.hpp"

namespace kdrsdl {

/// Singular value thresholding U shrink(diag(s), tau) V^T, the proximal
/// operator of tau * nuclear norm. Throws DomainError for tau < 0.
Matrix svt(const Matrix& x, double tau);

struct RpcaOptions {
  std::optional<double> lambda;  ///< default 1/sqrt(max(rows, cols))
  double epsilon = 1e-7;         ///< on ||X - A - E||_F / ||X||_F
  int max_iter = 1000;
  double rho = 1.5;
  double mu_scale = 1.25;        ///< mu0 = mu_scale / sigma_1(X)
  double mu_cap_factor = 1e7;
};

struct RpcaResult {
  Matrix low_rank;
  Matrix sparse;
  int iterations = 0;
  bool converged = false;
};

/// Principal component pursuit min ||A||_* + lambda ||E||_1 s.t. X = A + E
/// by the inexact augmented Lagrange multiplier method. The dual starts at
/// X / max(||X||_2, ||X||_inf / lambda).
RpcaResult rpca_ialm(const Matrix& x, const RpcaOptions& options = {});

struct RpcaTensorResult {
  Tensor3 low_rank;
  Tensor3 sparse;
  int iterations = 0;
  bool converged = false;
};

/// rpca_ialm on the slice-per-column matricization of x.
RpcaTensorResult rpca_tensor(const Tensor3& x, const RpcaOptions& options = {});

}  // namespace kdrsdl
