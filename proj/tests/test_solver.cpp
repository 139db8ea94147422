#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>

#include "kdrsdl/numerics.hpp"
#include "kdrsdl/solver.hpp"
#include "kdrsdl/synth.hpp"
#include "test_support.hpp"

using namespace kdrsdl;
using kdrsdl::testing::Random;

namespace {

ResolvedConfig config_for(const Tensor3& x, SolverConfig cfg = {}) {
  return resolve(cfg, x.rows(), x.cols());
}

// A state whose low-rank part reproduces x exactly, with the given step
// sizes and zero outliers and duals.
struct ConsistentInstance {
  Tensor3 x;
  SolverState state;
};

ConsistentInstance consistent_instance(Random& rng, Index m, Index n, Index r, Index count,
                                       double mu) {
  ConsistentInstance out;
  SolverState& s = out.state;
  s.a = rng.matrix(m, r);
  s.b = rng.matrix(n, r);
  s.core = rng.tensor(r, r, count);
  s.split = s.core;
  s.outliers = Tensor3(m, n, count);
  s.dual_rec = Tensor3(m, n, count);
  s.dual_split = Tensor3(r, r, count);
  s.mu = s.mu_cap = mu;
  s.mu_split = s.mu_split_cap = mu;
  out.x = reconstruct(s.core, s.a, s.b);
  return out;
}

bool same_bits(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

bool same_bits(const Tensor3& a, const Tensor3& b) {
  return a.same_shape(b) &&
         std::memcmp(a.data().data(), b.data().data(), sizeof(double) * a.size()) == 0;
}

}  // namespace

TEST_CASE("resolve fills defaults and validates") {
  const ResolvedConfig c = resolve({}, 30, 20);
  CHECK(c.rank == 20);
  CHECK(c.lambda == doctest::Approx(1.0 / std::sqrt(30.0)));
  CHECK(c.alpha == 1e-2);
  CHECK(c.eta == 1.25);
  CHECK(c.rho == 1.2);
  CHECK(c.mu_cap_factor == 1e7);
  CHECK(c.max_iter == 1000);

  SolverConfig bad;
  bad.rank = 21;
  CHECK_THROWS_AS(resolve(bad, 30, 20), DomainError);
  bad = {};
  bad.rho = 1.0;
  CHECK_THROWS_AS(resolve(bad, 30, 20), DomainError);
  bad = {};
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(resolve(bad, 30, 20), DomainError);
  bad = {};
  bad.lambda = -1.0;
  CHECK_THROWS_AS(resolve(bad, 30, 20), DomainError);
  bad = {};
  bad.alpha = 0.0;
  CHECK_THROWS_AS(resolve(bad, 30, 20), DomainError);
  bad = {};
  bad.max_iter = 0;
  CHECK_THROWS_AS(resolve(bad, 30, 20), DomainError);
}

TEST_CASE("initialize step sizes from slice norms") {
  // ||X_1|| = 2, ||X_2|| = 3, eta = 1.25: mu0 = 1.25 * 2 / 5.
  Tensor3 x(3, 3, 2);
  x.slice(0)(0, 0) = 2.0;
  x.slice(1)(1, 2) = 3.0;
  SolverConfig cfg;
  cfg.rank = 2;
  const SolverState s = initialize(x, config_for(x, cfg));
  CHECK(s.mu == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.mu_cap == doctest::Approx(0.5e7).epsilon(1e-15));
  // Core norms are the same singular values.
  CHECK(s.mu_split == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.iter == 0);
}

TEST_CASE("initialize on identical diagonal slices") {
  Tensor3 x(5, 4, 3);
  for (Index i = 0; i < 3; ++i) {
    x.slice(i)(0, 0) = 4.0;
    x.slice(i)(1, 1) = 2.5;
    x.slice(i)(2, 2) = 1.0;
  }
  SolverConfig cfg;
  cfg.rank = 3;
  const SolverState s = initialize(x, config_for(x, cfg));
  CHECK((s.a.transpose() * s.a - Matrix::Identity(3, 3)).norm() <= 1e-12);
  CHECK((s.b.transpose() * s.b - Matrix::Identity(3, 3)).norm() <= 1e-12);
  for (Index i = 0; i < 3; ++i) {
    const Matrix r = s.core.slice(i);
    CHECK(r(0, 0) == doctest::Approx(4.0));
    CHECK(r(1, 1) == doctest::Approx(2.5));
    CHECK(r(2, 2) == doctest::Approx(1.0));
    CHECK((r - Matrix(r.diagonal().asDiagonal())).norm() == 0.0);
  }
  CHECK(s.split == s.core);
  CHECK(s.outliers.squared_norm() == 0.0);
  CHECK(s.dual_rec.squared_norm() == 0.0);
  CHECK(s.dual_split.squared_norm() == 0.0);
}

TEST_CASE("initialize on a random 8x6x4 tensor") {
  Random rng(31);
  const Tensor3 x = rng.tensor(8, 6, 4);
  SolverConfig cfg;
  cfg.rank = 3;
  const SolverState s = initialize(x, config_for(x, cfg));
  CHECK(s.a.rows() == 8);
  CHECK(s.a.cols() == 3);
  CHECK(s.b.rows() == 6);
  CHECK(s.b.cols() == 3);
  for (Index c = 0; c < 3; ++c) {
    CHECK(s.a.col(c).norm() <= 1.0 + 1e-10);
    CHECK(s.b.col(c).norm() <= 1.0 + 1e-10);
  }
  CHECK(s.core.rows() == 3);
  CHECK(s.core.depth() == 4);
}

TEST_CASE("initialize pads exactly zero singular values") {
  Tensor3 x(6, 5, 2);
  x.slice(0)(0, 0) = 3.0;
  x.slice(1)(0, 0) = 2.0;
  SolverConfig cfg;
  cfg.rank = 3;
  const SolverState s = initialize(x, config_for(x, cfg));
  for (Index i = 0; i < 2; ++i) {
    CHECK(s.core.slice(i)(1, 1) == 0.0);
    CHECK(s.core.slice(i)(2, 2) == 0.0);
  }
  CHECK(s.core.slice(0)(0, 0) == 3.0);
  CHECK(s.a.col(1).isZero(0.0));
  CHECK(s.a.col(2).isZero(0.0));
  CHECK(s.b.col(2).isZero(0.0));
  CHECK(std::abs(s.a(0, 0)) == 1.0);
}

TEST_CASE("solve recovers clean rank-deficient data exactly") {
  SyntheticSpec spec;
  spec.m = 30;
  spec.n = 30;
  spec.num_slices = 8;
  spec.rank_a = 3;
  spec.rank_b = 3;
  spec.r = 6;
  spec.zero_prob = 1.0;
  const SyntheticData data = generate(spec);
  SolverConfig cfg;
  cfg.rank = 6;
  const KdrsdlFactorization f = solve(data.observations, cfg);
  CHECK(f.converged);
  CHECK(f.outliers.squared_norm() == 0.0);
  const Tensor3 diff = f.low_rank() - data.truth.low_rank;
  CHECK(diff.norm() / data.truth.low_rank.norm() <= 1e-5);
}

TEST_CASE("initialize never divides by a zero norm") {
  const Tensor3 x(4, 4, 3);
  const SolverState s = initialize(x, config_for(x));
  CHECK(std::isfinite(s.mu));
  CHECK(std::isfinite(s.mu_split));
  CHECK(s.mu == doctest::Approx(1.25));
}

TEST_CASE("iterate from a consistent state stays consistent") {
  Random rng(33);
  ConsistentInstance inst = consistent_instance(rng, 7, 6, 3, 4, 1e10);
  SolverConfig cfg;
  cfg.rank = 3;
  cfg.lambda = 1e6;
  const ResolvedConfig rc = config_for(inst.x, cfg);

  const SolverState next = iterate(inst.state, inst.x, rc);
  CHECK(next.outliers.squared_norm() == 0.0);
  const ResidualErrors err = errors_of(next, inst.x);
  CHECK(err.err_rec <= 1e-12);
  CHECK(err.err_split <= 1e-12);
  // The multipliers only pick up the rounding-level corrections of the
  // regularized basis updates.
  CHECK(next.dual_rec.norm() <= 1e-8 * next.mu * inst.x.norm());
  CHECK(next.dual_split.norm() <= 1e-8 * next.mu_split * inst.state.core.norm());
  CHECK(next.iter == 1);
}

TEST_CASE("iterate on zero data collapses the factorization") {
  const Tensor3 x(6, 5, 3);
  SolverConfig cfg;
  cfg.rank = 4;
  const ResolvedConfig rc = config_for(x, cfg);
  SolverState s = initialize(x, rc);
  for (int k = 0; k < 3; ++k) s = iterate(std::move(s), x, rc);
  const Tensor3 low = reconstruct(s.core, s.a, s.b);
  for (Index i = 0; i < 3; ++i) CHECK(Matrix(low.slice(i)).norm() <= 1e-10);
}

TEST_CASE("split update satisfies the Stein equation") {
  Random rng(34);
  const Tensor3 x = rng.tensor(10, 10, 3);
  SolverConfig cfg;
  cfg.rank = 4;
  const ResolvedConfig rc = config_for(x, cfg);
  // One full pass first so the multipliers are nonzero.
  SolverState s = iterate(initialize(x, rc), x, rc);

  steps::update_outliers(s, x, rc.lambda);
  const Tensor3 clean = steps::clean_observations(x, s.outliers);
  steps::update_left_basis(s, clean);
  steps::update_right_basis(s, clean);
  const SolverState before = s;
  steps::update_split(s, clean);

  const Matrix lhs = -(s.mu / s.mu_split) * (s.a.transpose() * s.a);
  const Matrix rhs = s.b.transpose() * s.b;
  for (Index i = 0; i < 3; ++i) {
    const Matrix c =
        (s.a.transpose() * (before.dual_rec.slice(i) + s.mu * clean.slice(i)) * s.b +
         before.dual_split.slice(i)) /
            s.mu_split +
        before.core.slice(i);
    const Matrix k = s.split.slice(i);
    const double residual = (k - lhs * k * rhs - c).norm();
    CHECK(residual <= 1e-9 * std::max(1.0, c.norm()));
    const Matrix oracle = testing::stein_oracle(0.5 * (lhs + lhs.transpose()),
                                                0.5 * (rhs + rhs.transpose()), c);
    CHECK((k - oracle).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, oracle.norm()));
  }
}

TEST_CASE("basis updates satisfy their normal equations") {
  Random rng(35);
  const Tensor3 x = rng.tensor(9, 7, 3);
  SolverConfig cfg;
  cfg.rank = 3;
  const ResolvedConfig rc = config_for(x, cfg);
  SolverState s = iterate(initialize(x, rc), x, rc);
  steps::update_outliers(s, x, rc.lambda);
  const Tensor3 clean = steps::clean_observations(x, s.outliers);
  steps::update_left_basis(s, clean);

  Matrix target = Matrix::Zero(9, 3);
  Matrix gram = Matrix::Identity(3, 3);
  for (Index i = 0; i < 3; ++i) {
    const Matrix k = s.split.slice(i);
    target += (s.mu * clean.slice(i) + s.dual_rec.slice(i)) * s.b * k.transpose();
    gram += s.mu * k * s.b.transpose() * s.b * k.transpose();
  }
  CHECK((s.a * gram - target).norm() <= 1e-10 * target.norm());

  steps::update_right_basis(s, clean);
  target = Matrix::Zero(7, 3);
  gram = Matrix::Identity(3, 3);
  for (Index i = 0; i < 3; ++i) {
    const Matrix k = s.split.slice(i);
    target += (s.mu * clean.slice(i) + s.dual_rec.slice(i)).transpose() * s.a * k;
    gram += s.mu * k.transpose() * s.a.transpose() * s.a * k;
  }
  CHECK((s.b * gram - target).norm() <= 1e-10 * target.norm());
}

TEST_CASE("every block update is a minimizer of the Lagrangian") {
  Random rng(36);
  const double tol = 1e-8;
  for (int trial = 0; trial < 20; ++trial) {
    SyntheticSpec spec;
    spec.m = 16;
    spec.n = 14;
    spec.num_slices = 5;
    spec.rank_a = 3;
    spec.rank_b = 3;
    spec.r = 5;
    spec.seed = static_cast<std::uint64_t>(trial);
    const Tensor3 x = generate(spec).observations;
    SolverConfig cfg;
    cfg.rank = 6;
    const ResolvedConfig rc = config_for(x, cfg);
    SolverState s = initialize(x, rc);
    const int warmup = rng.integer(0, 6);
    for (int k = 0; k < warmup; ++k) s = iterate(std::move(s), x, rc);

    auto value = [&](const SolverState& st) {
      return augmented_lagrangian(st, x, rc.lambda, rc.alpha);
    };
    auto check_step = [&](const char* name, double before, double after) {
      INFO("trial " << trial << " step " << name);
      CHECK(after <= before + tol * std::max(1.0, std::abs(before)));
    };

    double before = value(s);
    steps::update_outliers(s, x, rc.lambda);
    double after = value(s);
    check_step("outliers", before, after);

    const Tensor3 clean = steps::clean_observations(x, s.outliers);
    before = after;
    steps::update_left_basis(s, clean);
    after = value(s);
    check_step("A", before, after);

    before = after;
    steps::update_right_basis(s, clean);
    after = value(s);
    check_step("B", before, after);

    before = after;
    steps::update_split(s, clean);
    after = value(s);
    check_step("K", before, after);

    before = after;
    steps::update_core(s, rc.alpha);
    after = value(s);
    check_step("R", before, after);
  }
}

TEST_CASE("step sizes follow the capped geometric schedule") {
  SyntheticSpec spec;
  spec.m = 12;
  spec.n = 10;
  spec.num_slices = 4;
  spec.rank_a = 2;
  spec.rank_b = 2;
  spec.r = 3;
  const Tensor3 x = generate(spec).observations;
  SolverConfig cfg;
  cfg.rank = 4;
  cfg.mu_cap_factor = 20.0;
  cfg.max_iter = 40;
  cfg.epsilon = 1e-300;
  const ResolvedConfig rc = config_for(x, cfg);
  const SolverState s0 = initialize(x, rc);
  const KdrsdlFactorization f = solve(x, rc);
  REQUIRE(f.trace.size() == 40);

  double mu = s0.mu;
  double mu_split = s0.mu_split;
  for (std::size_t t = 0; t < f.trace.size(); ++t) {
    CHECK(f.trace[t].mu == mu);
    CHECK(f.trace[t].mu_split == mu_split);
    const double closed = std::min(s0.mu_cap, s0.mu * std::pow(rc.rho, static_cast<double>(t)));
    CHECK(f.trace[t].mu == doctest::Approx(closed).epsilon(1e-12));
    if (t > 0) CHECK(f.trace[t].mu >= f.trace[t - 1].mu);
    CHECK(f.trace[t].mu <= s0.mu_cap);
    mu = std::min(s0.mu_cap, rc.rho * mu);
    mu_split = std::min(s0.mu_split_cap, rc.rho * mu_split);
  }
  CHECK(f.trace.back().mu == s0.mu_cap);
}

TEST_CASE("errors_of") {
  Random rng(37);
  ConsistentInstance inst = consistent_instance(rng, 6, 5, 2, 3, 1.0);
  SUBCASE("exact factorization") {
    const ResidualErrors e = errors_of(inst.state, inst.x);
    CHECK(e.err_rec <= 1e-12);
    CHECK(e.err_split == 0.0);
    CHECK(e.degenerate_rec.empty());
  }
  SUBCASE("perturbing one outlier slice") {
    const ResidualErrors base = errors_of(inst.state, inst.x);
    const Matrix delta = 3.0 * rng.matrix(6, 5);
    inst.state.outliers.slice(1) += delta;
    const ResidualErrors e = errors_of(inst.state, inst.x);
    const double expected = delta.squaredNorm() / Matrix(inst.x.slice(1)).squaredNorm();
    CHECK(e.err_rec - base.err_rec == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("split mismatch") {
    inst.state.split.slice(2) *= 1.5;
    const ResidualErrors e = errors_of(inst.state, inst.x);
    CHECK(e.err_split == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("zero slices are flagged") {
    inst.x.slice(0).setZero();
    inst.state.core.slice(2).setZero();
    inst.state.split.slice(2).setZero();
    inst.state.outliers.slice(0) = -Matrix(
        inst.state.a * inst.state.core.slice(0) * inst.state.b.transpose());
    const ResidualErrors e = errors_of(inst.state, inst.x);
    REQUIRE(e.degenerate_rec.size() == 1);
    CHECK(e.degenerate_rec[0] == 0);
    REQUIRE(e.degenerate_split.size() == 1);
    CHECK(e.degenerate_split[0] == 2);
    CHECK(std::isfinite(e.err_rec));
    CHECK(std::isfinite(e.err_split));
  }
}

TEST_CASE("solve on zero data converges at once") {
  const Tensor3 x(5, 5, 4);
  const KdrsdlFactorization f = solve(x, SolverConfig{});
  CHECK(f.converged);
  CHECK(f.iterations == 1);
  CHECK(f.trace.size() == 1);
  CHECK(f.outliers.squared_norm() == 0.0);
  CHECK(f.low_rank().squared_norm() == 0.0);
}

TEST_CASE("solve recovers a small synthetic instance") {
  SyntheticSpec spec;
  spec.m = 24;
  spec.n = 20;
  spec.num_slices = 8;
  spec.rank_a = 3;
  spec.rank_b = 3;
  spec.r = 4;
  spec.zero_prob = 0.8;
  spec.seed = 5;
  const SyntheticData data = generate(spec);
  SolverConfig cfg;
  cfg.rank = 6;
  const KdrsdlFactorization f = solve(data.observations, cfg);
  CHECK(f.converged);
  CHECK(f.iterations == static_cast<int>(f.trace.size()));
  CHECK(std::max(f.trace.back().err_rec, f.trace.back().err_split) <= cfg.epsilon);
  const Tensor3 diff = f.low_rank() - data.truth.low_rank;
  CHECK(diff.norm() / data.truth.low_rank.norm() <= 1e-5);
  CHECK((f.outliers - data.truth.outliers).norm() / data.truth.outliers.norm() <= 1e-5);
}

TEST_CASE("solve stops at max_iter without converging") {
  Random rng(38);
  const Tensor3 x = rng.tensor(8, 8, 3);
  SolverConfig cfg;
  cfg.max_iter = 3;
  const KdrsdlFactorization f = solve(x, cfg);
  CHECK_FALSE(f.converged);
  CHECK(f.iterations == 3);
  CHECK(f.trace.size() == 3);
}

TEST_CASE("solve is deterministic and thread-count independent") {
  SyntheticSpec spec;
  spec.m = 20;
  spec.n = 18;
  spec.num_slices = 7;
  spec.rank_a = 3;
  spec.rank_b = 2;
  spec.r = 4;
  spec.seed = 9;
  const Tensor3 x = generate(spec).observations;
  SolverConfig cfg;
  cfg.rank = 5;
  const KdrsdlFactorization f1 = solve(x, cfg);
  const KdrsdlFactorization f2 = solve(x, cfg);
  cfg.num_threads = 3;
  const KdrsdlFactorization f3 = solve(x, cfg);
  for (const KdrsdlFactorization* g : {&f2, &f3}) {
    REQUIRE(g->trace.size() == f1.trace.size());
    for (std::size_t t = 0; t < f1.trace.size(); ++t) {
      CHECK(std::memcmp(&g->trace[t].err_rec, &f1.trace[t].err_rec, sizeof(double)) == 0);
      CHECK(std::memcmp(&g->trace[t].err_split, &f1.trace[t].err_split, sizeof(double)) ==
            0);
    }
    CHECK(same_bits(g->a, f1.a));
    CHECK(same_bits(g->b, f1.b));
    CHECK(same_bits(g->core, f1.core));
    CHECK(same_bits(g->outliers, f1.outliers));
  }
}

TEST_CASE("inconsistent state is rejected") {
  Random rng(39);
  ConsistentInstance inst = consistent_instance(rng, 6, 5, 2, 3, 1.0);
  const Tensor3 other = rng.tensor(6, 4, 3);
  CHECK_THROWS_AS(errors_of(inst.state, other), DimensionError);
  CHECK_THROWS_AS(iterate(inst.state, other, resolve({}, 6, 4)), DimensionError);
}

TEST_CASE("SolverError carries the iteration and trace") {
  const SolverError e(4, "boom", {TraceRecord{1, 0.5, 0.25, 1.0, 2.0}});
  CHECK(e.iteration() == 4);
  CHECK(e.detail() == "boom");
  CHECK(std::string(e.what()) == "iteration 4: boom");
  CHECK(e.trace().size() == 1);
}
