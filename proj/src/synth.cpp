#include "kdrsdl/synth.hpp"

#include <cmath>
#include <numbers>

#include "kdrsdl/error.hpp"

namespace kdrsdl {
namespace {

Matrix gaussian(Rng& rng, Index rows, Index cols) {
  Matrix out(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) out(i, j) = rng.normal();
  }
  return out;
}

void validate(const SyntheticSpec& s) {
  if (s.m <= 0 || s.n <= 0 || s.num_slices <= 0 || s.r <= 0) {
    throw DomainError("synthetic dimensions must be positive");
  }
  if (s.rank_a <= 0 || s.rank_a > std::min(s.m, s.r)) {
    throw DomainError("rank_a must lie in [1, min(m, r)]");
  }
  if (s.rank_b <= 0 || s.rank_b > std::min(s.n, s.r)) {
    throw DomainError("rank_b must lie in [1, min(n, r)]");
  }
  if (!(s.zero_prob >= 0.0 && s.zero_prob <= 1.0)) {
    throw DomainError("zero_prob must lie in [0, 1]");
  }
}

}  // namespace

double Rng::normal() {
  // 1 - u lies in (0, 1], so the logarithm is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

SyntheticData generate(const SyntheticSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);

  const Matrix a1 = gaussian(rng, spec.m, spec.rank_a);
  const Matrix a2 = gaussian(rng, spec.r, spec.rank_a);
  const Matrix b1 = gaussian(rng, spec.n, spec.rank_b);
  const Matrix b2 = gaussian(rng, spec.r, spec.rank_b);

  GroundTruth truth;
  truth.a = a1 * a2.transpose();
  truth.b = b1 * b2.transpose();
  truth.core = Tensor3(spec.r, spec.r, spec.num_slices);
  for (Index i = 0; i < spec.num_slices; ++i) {
    truth.core.slice(i) = gaussian(rng, spec.r, spec.r);
  }
  truth.low_rank = reconstruct(truth.core, truth.a, truth.b);

  truth.outliers = Tensor3(spec.m, spec.n, spec.num_slices);
  for (double& v : truth.outliers.data()) {
    if (rng.uniform() < spec.zero_prob) continue;
    v = rng.uniform() < 0.5 ? 1.0 : -1.0;
  }

  SyntheticData out;
  out.observations = truth.low_rank + truth.outliers;
  out.truth = std::move(truth);
  return out;
}

double density(const Tensor3& t, double tol) {
  if (!(tol >= 0.0)) throw DomainError("density tolerance must be nonnegative");
  if (t.empty()) return 0.0;
  Index count = 0;
  for (double v : t.data()) {
    if (std::abs(v) > tol) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(t.size());
}

}  // namespace kdrsdl
