#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kdrsdl/error.hpp"
#include "kdrsdl/tensor.hpp"

namespace kdrsdl {

/// User-facing solver parameters. Unset `rank` and `lambda` are resolved
/// against the observation size by resolve().
struct SolverConfig {
  std::optional<Index> rank;     ///< core dimension r; default min(m, n)
  std::optional<double> lambda;  ///< outlier weight; default 1/sqrt(max(m, n))
  double alpha = 1e-2;           ///< core sparsity weight
  double eta = 1.25;             ///< scale of the initial step sizes
  double rho = 1.2;              ///< step-size growth factor
  double mu_cap_factor = 1e7;    ///< mu* = mu0 * mu_cap_factor
  double epsilon = 1e-12;        ///< stop when max(err_rec, err_split) <= epsilon
  int max_iter = 1000;
  std::uint64_t seed = 0;        ///< recorded in manifests only
  int num_threads = 1;
};

/// SolverConfig with every field concrete and validated.
struct ResolvedConfig {
  Index rank = 0;
  double lambda = 0.0;
  double alpha = 0.0;
  double eta = 0.0;
  double rho = 0.0;
  double mu_cap_factor = 0.0;
  double epsilon = 0.0;
  int max_iter = 0;
  std::uint64_t seed = 0;
  int num_threads = 1;
};

/// Resolves defaults for an m x n problem. Throws DomainError on invalid
/// parameters (r > min(m, n), rho <= 1, non-positive weights, ...).
ResolvedConfig resolve(const SolverConfig& cfg, Index m, Index n);

/// Iterate of the ADMM on the augmented Lagrangian.
struct SolverState {
  Matrix a;        ///< m x r
  Matrix b;        ///< n x r
  Tensor3 core;    ///< R, r x r x N
  Tensor3 split;   ///< K, r x r x N
  Tensor3 outliers;  ///< E, m x n x N
  Tensor3 dual_rec;    ///< Lambda, m x n x N
  Tensor3 dual_split;  ///< Y, r x r x N
  double mu = 0.0;
  double mu_split = 0.0;
  double mu_cap = 0.0;
  double mu_split_cap = 0.0;
  int iter = 0;
};

struct TraceRecord {
  int iter = 0;
  double err_rec = 0.0;
  double err_split = 0.0;
  double mu = 0.0;        ///< step size used during this iteration
  double mu_split = 0.0;
};

struct ResidualErrors {
  double err_rec = 0.0;
  double err_split = 0.0;
  /// Slices whose ||X_i||_F or ||R_i||_F is zero and used the guarded
  /// denominator.
  std::vector<Index> degenerate_rec;
  std::vector<Index> degenerate_split;
};

/// Result of a solve. The low-rank component is reconstruct(core, a, b).
struct KdrsdlFactorization {
  Matrix a;
  Matrix b;
  Tensor3 core;
  Tensor3 outliers;
  std::vector<TraceRecord> trace;
  bool converged = false;
  int iterations = 0;

  Tensor3 low_rank() const;
};

/// A numerical failure inside the iteration, with the trace recorded so far.
class SolverError : public Error {
 public:
  SolverError(int iteration, const std::string& what,
              std::vector<TraceRecord> trace = {})
      : Error("iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration),
        detail_(what),
        trace_(std::move(trace)) {}

  int iteration() const noexcept { return iteration_; }
  /// The message without the iteration prefix.
  const std::string& detail() const noexcept { return detail_; }
  const std::vector<TraceRecord>& trace() const noexcept { return trace_; }

 private:
  int iteration_;
  std::string detail_;
  std::vector<TraceRecord> trace_;
};

/// SVD-based initialization: A and B average the leading r singular vectors
/// of every slice, R_i holds the leading r singular values, K = R, E and
/// both duals are zero, mu0 = eta N / sum ||X_i||_F and
/// mu_K0 = eta N / sum ||R_i||_F.
SolverState initialize(const Tensor3& x, const ResolvedConfig& cfg);

/// One full ADMM pass (outliers, A, B, K, R, duals, step sizes).
SolverState iterate(SolverState state, const Tensor3& x, const ResolvedConfig& cfg);

/// err_rec = max_i ||X_i - A R_i B^T - E_i||^2 / ||X_i||^2 and
/// err_split = max_i ||R_i - K_i||^2 / ||R_i||^2.
ResidualErrors errors_of(const SolverState& state, const Tensor3& x);

KdrsdlFactorization solve(const Tensor3& x, const SolverConfig& cfg);
KdrsdlFactorization solve(const Tensor3& x, const ResolvedConfig& cfg);

/// Value of the augmented Lagrangian at `state`, with alpha weighting the
/// core and lambda weighting the outliers.
double augmented_lagrangian(const SolverState& state, const Tensor3& x,
                            double lambda, double alpha);

/// The individual block updates of one pass, in the order iterate() applies
/// them. Each one is an exact minimizer of the augmented Lagrangian over
/// its block with the others held fixed. Exposed for testing.
namespace steps {

/// E <- S_{lambda/mu}(X - K x1 A x2 B + Lambda / mu).
void update_outliers(SolverState& s, const Tensor3& x, double lambda,
                     int threads = 1);

/// X - E.
Tensor3 clean_observations(const Tensor3& x, const Tensor3& outliers);

void update_left_basis(SolverState& s, const Tensor3& clean, int threads = 1);
void update_right_basis(SolverState& s, const Tensor3& clean, int threads = 1);

/// Solves the per-slice Stein equation for K.
void update_split(SolverState& s, const Tensor3& clean, int threads = 1);

/// R <- S_{alpha/mu_K}(K - Y / mu_K).
void update_core(SolverState& s, double alpha, int threads = 1);

/// Lambda and Y ascent steps.
void update_duals(SolverState& s, const Tensor3& clean, int threads = 1);

/// mu <- min(mu*, rho mu), mu_K <- min(mu_K*, rho mu_K).
void update_step_sizes(SolverState& s, double rho);

}  // namespace steps

}  // namespace kdrsdl
