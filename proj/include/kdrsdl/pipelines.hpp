#pragma once

#include <cstdint>
#include <string>

#include "kdrsdl/metrics.hpp"
#include "kdrsdl/rpca.hpp"
#include "kdrsdl/solver.hpp"
#include "kdrsdl/synth.hpp"

namespace kdrsdl {

/// Entries of a recovered outlier tensor count toward its density when
/// |e| > kDensityTolerance * max|x| for the observations x.
inline constexpr double kDensityTolerance = 1e-6;

/// kDensityTolerance scaled by the largest magnitude in `observations`.
double outlier_tolerance(const Tensor3& observations);

struct SynthRecovery {
  SyntheticData data;
  KdrsdlFactorization factorization;
  ResolvedConfig config;
  /// rel_error_L, rel_error_E, density_E, density_E_true, iterations,
  /// converged, err_rec, err_split.
  MetricsReport report;
};

/// Generates a synthetic instance and recovers it. When the true outlier
/// tensor is zero, rel_error_E is ||E_hat||_F / ||X||_F instead.
SynthRecovery run_synth_recovery(const SyntheticSpec& spec, const SolverConfig& cfg);

struct BackgroundSubtraction {
  KdrsdlFactorization factorization;
  ResolvedConfig config;
  Tensor3 foreground;  ///< |E| per pixel per frame
  /// auc (the requested pooling), auc_pooled, auc_per_frame, iterations,
  /// converged.
  MetricsReport report;
};

/// Treats every frame as one slice and scores foreground pixels by |E|.
BackgroundSubtraction run_background_subtraction(const Tensor3& frames,
                                                 const Tensor3& masks,
                                                 const SolverConfig& cfg,
                                                 AucPooling pooling);

enum class DenoiseMethod { kKdrsdl, kRpca };

struct DenoiseOptions {
  double noise_level = 0.1;  ///< fraction of corrupted entries
  std::uint64_t seed = 0;
  DenoiseMethod method = DenoiseMethod::kKdrsdl;
  SolverConfig solver;       ///< alpha is overridden by default_denoise_alpha
  bool alpha_from_noise = true;
  RpcaOptions rpca;
};

/// 1e-3 for noise levels up to 30%, 1e-2 above.
double default_denoise_alpha(double noise_level);

/// Salt-and-pepper corruption: each entry independently, with probability
/// `level`, is replaced by 0 or 1 with equal probability.
Tensor3 salt_and_pepper(const Tensor3& clean, double level, std::uint64_t seed);

struct Denoising {
  Tensor3 corrupted;
  Tensor3 recovered;  ///< low-rank estimate clamped to [0, 1]
  /// psnr_<i> per slice, mean_psnr, mean_psnr_noisy, noise_density.
  MetricsReport report;
};

/// Corrupts `clean` (values in [0, 1]) and restores it. PSNR uses peak 1,
/// the float image of an 8-bit peak of 255.
Denoising run_denoise(const Tensor3& clean, const DenoiseOptions& options);

}  // namespace kdrsdl
