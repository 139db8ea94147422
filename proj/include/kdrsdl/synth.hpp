#pragma once

#include <cstdint>
#include <random>

#include "kdrsdl/tensor.hpp"

namespace kdrsdl {

/// Identifier of the random stream used by generate(), recorded in manifests.
inline constexpr const char* kRngAlgorithm = "mt19937_64+u53+box-muller";

/// Seeded stream with a fully specified output sequence: uniforms take the
/// top 53 bits of mt19937_64, normals use the Box-Muller cosine branch.
/// Unlike std::normal_distribution this is identical across standard
/// libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double normal();

 private:
  std::mt19937_64 engine_;
};

struct SyntheticSpec {
  Index m = 50;
  Index n = 50;
  Index num_slices = 20;
  Index rank_a = 5;
  Index rank_b = 5;
  Index r = 10;          ///< width of the generating bases
  double zero_prob = 0.7;  ///< probability an entry of E is zero
  std::uint64_t seed = 0;
};

struct GroundTruth {
  Tensor3 low_rank;  ///< L = R x1 A x2 B
  Tensor3 outliers;  ///< entries in {-1, 0, +1}
  Matrix a;
  Matrix b;
  Tensor3 core;
};

struct SyntheticData {
  Tensor3 observations;  ///< L + E
  GroundTruth truth;
};

/// Draws A = A1 A2^T (A1 m x rank_a, A2 r x rank_a), B likewise, standard
/// normal core slices and sparse +-1 outliers. Draw order: A1, A2, B1, B2,
/// core slices, then per outlier entry one uniform (zero when < zero_prob)
/// followed, for nonzero entries, by one uniform choosing the sign.
/// Throws DomainError when the spec is inconsistent.
SyntheticData generate(const SyntheticSpec& spec);

/// Fraction of entries with |value| > tol.
double density(const Tensor3& t, double tol);

}  // namespace kdrsdl
