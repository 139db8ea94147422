#include "kdrsdl/solver.hpp"

#include <algorithm>
#include <cmath>

#include "kdrsdl/numerics.hpp"
#include "kdrsdl/parallel.hpp"

namespace kdrsdl {
namespace {

constexpr double kDenominatorFloor = 1e-300;

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Sums per-slice terms in ascending slice order so the result does not
// depend on how the terms were scheduled.
Matrix ordered_sum(const std::vector<Matrix>& terms) {
  Matrix total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total += terms[i];
  return total;
}

void require_consistent(const SolverState& s, const Tensor3& x) {
  const Index r = s.a.cols();
  if (s.a.rows() != x.rows() || s.b.rows() != x.cols() || s.b.cols() != r ||
      s.core.rows() != r || s.core.cols() != r || s.core.depth() != x.depth() ||
      !s.split.same_shape(s.core) || !s.dual_split.same_shape(s.core) ||
      !s.outliers.same_shape(x) || !s.dual_rec.same_shape(x)) {
    throw DimensionError("solver state is inconsistent with the observations");
  }
}

}  // namespace

ResolvedConfig resolve(const SolverConfig& cfg, Index m, Index n) {
  if (m <= 0 || n <= 0) throw DimensionError("observation slices are empty");
  ResolvedConfig out;
  out.rank = cfg.rank.value_or(std::min(m, n));
  if (out.rank <= 0 || out.rank > std::min(m, n)) {
    throw DomainError("rank r must satisfy 0 < r <= min(m, n) = " +
                      std::to_string(std::min(m, n)) + ", got " +
                      std::to_string(out.rank));
  }
  out.lambda = cfg.lambda.value_or(1.0 / std::sqrt(static_cast<double>(std::max(m, n))));
  if (!(out.lambda > 0.0)) throw DomainError("lambda must be positive");
  if (!(cfg.alpha > 0.0)) throw DomainError("alpha must be positive");
  if (!(cfg.eta > 0.0)) throw DomainError("eta must be positive");
  if (!(cfg.rho > 1.0)) throw DomainError("rho must exceed 1");
  if (!(cfg.mu_cap_factor >= 1.0)) throw DomainError("mu_cap_factor must be >= 1");
  if (!(cfg.epsilon > 0.0)) throw DomainError("epsilon must be positive");
  if (cfg.max_iter <= 0) throw DomainError("max_iter must be positive");
  out.alpha = cfg.alpha;
  out.eta = cfg.eta;
  out.rho = cfg.rho;
  out.mu_cap_factor = cfg.mu_cap_factor;
  out.epsilon = cfg.epsilon;
  out.max_iter = cfg.max_iter;
  out.seed = cfg.seed;
  out.num_threads = std::max(cfg.num_threads, 1);
  return out;
}

Tensor3 KdrsdlFactorization::low_rank() const { return reconstruct(core, a, b); }

SolverState initialize(const Tensor3& x, const ResolvedConfig& cfg) {
  if (!x.all_finite()) throw NonFiniteError("observations contain NaN or Inf");
  const Index m = x.rows();
  const Index n = x.cols();
  const Index count = x.depth();
  const Index r = cfg.rank;
  if (r <= 0 || r > std::min(m, n)) throw DomainError("rank out of range");

  std::vector<Matrix> lefts(static_cast<std::size_t>(count));
  std::vector<Matrix> rights(static_cast<std::size_t>(count));
  std::vector<Vector> values(static_cast<std::size_t>(count));
  parallel_for(count, cfg.num_threads, [&](Index i) {
    SvdResult svd = thin_svd(x.slice(i));
    const auto k = static_cast<std::size_t>(i);
    lefts[k] = svd.u.leftCols(r);
    rights[k] = svd.v.leftCols(r);
    values[k] = svd.s.head(r);
    // Only exact zeros are padded. Rounding-level singular values are kept:
    // a zero entry of R with zero basis columns is a fixed point of every
    // block update, so those directions could never be recovered.
    for (Index c = 0; c < r; ++c) {
      if (svd.s(c) == 0.0) {
        lefts[k].col(c).setZero();
        rights[k].col(c).setZero();
        values[k](c) = 0.0;
      }
    }
  });

  SolverState s;
  s.a = Matrix::Zero(m, r);
  s.b = Matrix::Zero(n, r);
  s.core = Tensor3(r, r, count);
  double obs_norm_sum = 0.0;
  double core_norm_sum = 0.0;
  for (Index i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    s.a += lefts[k];
    s.b += rights[k];
    s.core.slice(i) = values[k].asDiagonal();
    obs_norm_sum += x.slice(i).norm();
    core_norm_sum += values[k].norm();
  }
  s.a /= static_cast<double>(count);
  s.b /= static_cast<double>(count);
  s.split = s.core;
  s.outliers = Tensor3(m, n, count);
  s.dual_rec = Tensor3(m, n, count);
  s.dual_split = Tensor3(r, r, count);

  // An all-zero observation would divide by zero; fall back to unit norms.
  const double n_slices = static_cast<double>(count);
  s.mu = cfg.eta * n_slices / (obs_norm_sum > 0.0 ? obs_norm_sum : n_slices);
  s.mu_split = cfg.eta * n_slices / (core_norm_sum > 0.0 ? core_norm_sum : n_slices);
  s.mu_cap = s.mu * cfg.mu_cap_factor;
  s.mu_split_cap = s.mu_split * cfg.mu_cap_factor;
  s.iter = 0;
  return s;
}

namespace steps {

void update_outliers(SolverState& s, const Tensor3& x, double lambda, int threads) {
  const double inv_mu = 1.0 / s.mu;
  const double tau = lambda / s.mu;
  parallel_for(x.depth(), threads, [&](Index i) {
    const Matrix residual = x.slice(i) - s.a * s.split.slice(i) * s.b.transpose() +
                            inv_mu * s.dual_rec.slice(i);
    s.outliers.slice(i) = shrink(residual, tau);
  });
}

Tensor3 clean_observations(const Tensor3& x, const Tensor3& outliers) {
  return x - outliers;
}

void update_left_basis(SolverState& s, const Tensor3& clean, int threads) {
  const Index count = clean.depth();
  std::vector<Matrix> targets(static_cast<std::size_t>(count));
  std::vector<Matrix> grams(static_cast<std::size_t>(count));
  const Matrix btb = s.b.transpose() * s.b;
  parallel_for(count, threads, [&](Index i) {
    const auto k = static_cast<std::size_t>(i);
    const auto ki = s.split.slice(i);
    targets[k] = (s.mu * clean.slice(i) + s.dual_rec.slice(i)) * s.b * ki.transpose();
    grams[k] = ki * btb * ki.transpose();
  });
  const Index r = s.a.cols();
  const Matrix gram =
      Matrix::Identity(r, r) + s.mu * symmetrized(ordered_sum(grams));
  s.a = solve_gram_system(ordered_sum(targets), gram);
}

void update_right_basis(SolverState& s, const Tensor3& clean, int threads) {
  const Index count = clean.depth();
  std::vector<Matrix> targets(static_cast<std::size_t>(count));
  std::vector<Matrix> grams(static_cast<std::size_t>(count));
  const Matrix ata = s.a.transpose() * s.a;
  parallel_for(count, threads, [&](Index i) {
    const auto k = static_cast<std::size_t>(i);
    const auto ki = s.split.slice(i);
    targets[k] =
        (s.mu * clean.slice(i) + s.dual_rec.slice(i)).transpose() * s.a * ki;
    grams[k] = ki.transpose() * ata * ki;
  });
  const Index r = s.b.cols();
  const Matrix gram =
      Matrix::Identity(r, r) + s.mu * symmetrized(ordered_sum(grams));
  s.b = solve_gram_system(ordered_sum(targets), gram);
}

void update_split(SolverState& s, const Tensor3& clean, int threads) {
  const Matrix ata = symmetrized(s.a.transpose() * s.a);
  const Matrix btb = symmetrized(s.b.transpose() * s.b);
  const SteinSolver stein(-(s.mu / s.mu_split) * ata, btb);
  const double inv_mu_split = 1.0 / s.mu_split;
  parallel_for(clean.depth(), threads, [&](Index i) {
    const Matrix constant =
        inv_mu_split * (s.a.transpose() *
                            (s.dual_rec.slice(i) + s.mu * clean.slice(i)) * s.b +
                        s.dual_split.slice(i)) +
        s.core.slice(i);
    s.split.slice(i) = stein.solve(constant);
  });
}

void update_core(SolverState& s, double alpha, int threads) {
  const double inv_mu_split = 1.0 / s.mu_split;
  const double tau = alpha / s.mu_split;
  parallel_for(s.core.depth(), threads, [&](Index i) {
    s.core.slice(i) =
        shrink(s.split.slice(i) - inv_mu_split * s.dual_split.slice(i), tau);
  });
}

void update_duals(SolverState& s, const Tensor3& clean, int threads) {
  parallel_for(clean.depth(), threads, [&](Index i) {
    s.dual_rec.slice(i) +=
        s.mu * (clean.slice(i) - s.a * s.split.slice(i) * s.b.transpose());
    s.dual_split.slice(i) += s.mu_split * (s.core.slice(i) - s.split.slice(i));
  });
}

void update_step_sizes(SolverState& s, double rho) {
  s.mu = std::min(s.mu_cap, rho * s.mu);
  s.mu_split = std::min(s.mu_split_cap, rho * s.mu_split);
}

}  // namespace steps

SolverState iterate(SolverState s, const Tensor3& x, const ResolvedConfig& cfg) {
  require_consistent(s, x);
  const int threads = cfg.num_threads;
  try {
    steps::update_outliers(s, x, cfg.lambda, threads);
    const Tensor3 clean = steps::clean_observations(x, s.outliers);
    steps::update_left_basis(s, clean, threads);
    steps::update_right_basis(s, clean, threads);
    steps::update_split(s, clean, threads);
    steps::update_core(s, cfg.alpha, threads);
    steps::update_duals(s, clean, threads);
    steps::update_step_sizes(s, cfg.rho);
  } catch (const SolverError&) {
    throw;
  } catch (const Error& e) {
    throw SolverError(s.iter + 1, e.what());
  }
  ++s.iter;
  return s;
}

ResidualErrors errors_of(const SolverState& s, const Tensor3& x) {
  require_consistent(s, x);
  ResidualErrors out;
  const Matrix bt = s.b.transpose();
  for (Index i = 0; i < x.depth(); ++i) {
    const auto xi = x.slice(i);
    const double obs = xi.squaredNorm();
    if (obs == 0.0) out.degenerate_rec.push_back(i);
    const double rec =
        (xi - s.a * s.core.slice(i) * bt - s.outliers.slice(i)).squaredNorm() /
        std::max(obs, kDenominatorFloor);
    out.err_rec = std::max(out.err_rec, rec);

    const double core = s.core.slice(i).squaredNorm();
    if (core == 0.0) out.degenerate_split.push_back(i);
    const double split = (s.core.slice(i) - s.split.slice(i)).squaredNorm() /
                         std::max(core, kDenominatorFloor);
    out.err_split = std::max(out.err_split, split);
  }
  return out;
}

KdrsdlFactorization solve(const Tensor3& x, const SolverConfig& cfg) {
  return solve(x, resolve(cfg, x.rows(), x.cols()));
}

KdrsdlFactorization solve(const Tensor3& x, const ResolvedConfig& cfg) {
  if (x.empty()) throw DimensionError("observation tensor is empty");
  KdrsdlFactorization out;
  SolverState state = initialize(x, cfg);
  for (int k = 0; k < cfg.max_iter; ++k) {
    TraceRecord rec;
    rec.mu = state.mu;
    rec.mu_split = state.mu_split;
    try {
      state = iterate(std::move(state), x, cfg);
    } catch (const SolverError& e) {
      throw SolverError(e.iteration(), e.detail(), out.trace);
    }
    rec.iter = state.iter;
    const ResidualErrors err = errors_of(state, x);
    rec.err_rec = err.err_rec;
    rec.err_split = err.err_split;
    out.trace.push_back(rec);
    if (!std::isfinite(rec.err_rec) || !std::isfinite(rec.err_split)) {
      throw SolverError(state.iter, "residuals became non-finite", out.trace);
    }
    if (std::max(rec.err_rec, rec.err_split) <= cfg.epsilon) {
      out.converged = true;
      break;
    }
  }
  out.iterations = state.iter;
  out.a = std::move(state.a);
  out.b = std::move(state.b);
  out.core = std::move(state.core);
  out.outliers = std::move(state.outliers);
  return out;
}

double augmented_lagrangian(const SolverState& s, const Tensor3& x, double lambda,
                            double alpha) {
  require_consistent(s, x);
  double value = 0.5 * (s.a.squaredNorm() + s.b.squaredNorm());
  for (double v : s.core.data()) value += alpha * std::abs(v);
  for (double v : s.outliers.data()) value += lambda * std::abs(v);
  const Matrix bt = s.b.transpose();
  for (Index i = 0; i < x.depth(); ++i) {
    const Matrix rec = x.slice(i) - s.a * s.split.slice(i) * bt - s.outliers.slice(i);
    const Matrix split = s.core.slice(i) - s.split.slice(i);
    value += s.dual_rec.slice(i).cwiseProduct(rec).sum() +
             s.dual_split.slice(i).cwiseProduct(split).sum() +
             0.5 * s.mu * rec.squaredNorm() + 0.5 * s.mu_split * split.squaredNorm();
  }
  return value;
}

}  // namespace kdrsdl
