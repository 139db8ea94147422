#include "kdrsdl/pipelines.hpp"

#include <algorithm>
#include <cmath>

#include "kdrsdl/error.hpp"

namespace kdrsdl {

double outlier_tolerance(const Tensor3& observations) {
  double peak = 0.0;
  for (double v : observations.data()) peak = std::max(peak, std::abs(v));
  return kDensityTolerance * peak;
}

SynthRecovery run_synth_recovery(const SyntheticSpec& spec, const SolverConfig& cfg) {
  SynthRecovery out;
  out.data = generate(spec);
  out.config = resolve(cfg, spec.m, spec.n);
  out.factorization = solve(out.data.observations, out.config);

  const Tensor3 low_rank = out.factorization.low_rank();
  const GroundTruth& truth = out.data.truth;
  auto& r = out.report;
  r.set("rel_error_L", relative_error(low_rank, truth.low_rank));
  if (truth.outliers.squared_norm() > 0.0) {
    r.set("rel_error_E", relative_error(out.factorization.outliers, truth.outliers));
  } else {
    r.set("rel_error_E",
          out.factorization.outliers.norm() / out.data.observations.norm());
  }
  r.set("density_E", density(out.factorization.outliers, outlier_tolerance(out.data.observations)));
  r.set("density_E_true", density(truth.outliers, 0.5));
  r.set("iterations", out.factorization.iterations);
  r.set("converged", out.factorization.converged ? 1.0 : 0.0);
  const TraceRecord last = out.factorization.trace.empty()
                               ? TraceRecord{}
                               : out.factorization.trace.back();
  r.set("err_rec", last.err_rec);
  r.set("err_split", last.err_split);
  return out;
}

BackgroundSubtraction run_background_subtraction(const Tensor3& frames,
                                                 const Tensor3& masks,
                                                 const SolverConfig& cfg,
                                                 AucPooling pooling) {
  if (!frames.same_shape(masks)) {
    throw DimensionError("masks must match the frames one to one");
  }
  BackgroundSubtraction out;
  out.config = resolve(cfg, frames.rows(), frames.cols());
  out.factorization = solve(frames, out.config);
  out.foreground = out.factorization.outliers;
  for (double& v : out.foreground.data()) v = std::abs(v);

  const double pooled = foreground_auc(out.foreground, masks, AucPooling::kPooled);
  const double per_frame = foreground_auc(out.foreground, masks, AucPooling::kPerFrame);
  out.report.set("auc", pooling == AucPooling::kPooled ? pooled : per_frame);
  out.report.set("auc_pooled", pooled);
  out.report.set("auc_per_frame", per_frame);
  out.report.set("iterations", out.factorization.iterations);
  out.report.set("converged", out.factorization.converged ? 1.0 : 0.0);
  return out;
}

double default_denoise_alpha(double noise_level) {
  return noise_level <= 0.3 ? 1e-3 : 1e-2;
}

Tensor3 salt_and_pepper(const Tensor3& clean, double level, std::uint64_t seed) {
  if (!(level >= 0.0 && level <= 1.0)) {
    throw DomainError("noise level must lie in [0, 1]");
  }
  Rng rng(seed);
  Tensor3 out = clean;
  for (double& v : out.data()) {
    if (rng.uniform() < level) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
  }
  return out;
}

Denoising run_denoise(const Tensor3& clean, const DenoiseOptions& options) {
  Denoising out;
  out.corrupted = salt_and_pepper(clean, options.noise_level, options.seed);

  if (options.method == DenoiseMethod::kKdrsdl) {
    SolverConfig cfg = options.solver;
    if (options.alpha_from_noise) cfg.alpha = default_denoise_alpha(options.noise_level);
    out.recovered = solve(out.corrupted, cfg).low_rank();
  } else {
    out.recovered = rpca_tensor(out.corrupted, options.rpca).low_rank;
  }
  for (double& v : out.recovered.data()) v = std::clamp(v, 0.0, 1.0);

  double total = 0.0;
  double total_noisy = 0.0;
  for (Index i = 0; i < clean.depth(); ++i) {
    const Matrix ref = clean.slice(i);
    const double p = psnr(out.recovered.slice(i), ref, 1.0);
    out.report.set("psnr_" + std::to_string(i), p);
    total += p;
    total_noisy += psnr(out.corrupted.slice(i), ref, 1.0);
  }
  const auto count = static_cast<double>(clean.depth());
  out.report.set("mean_psnr", total / count);
  out.report.set("mean_psnr_noisy", total_noisy / count);
  Index changed = 0;
  for (Index k = 0; k < clean.size(); ++k) {
    if (clean.data()[k] != out.corrupted.data()[k]) ++changed;
  }
  out.report.set("noise_density",
                 static_cast<double>(changed) / static_cast<double>(clean.size()));
  return out;
}

}  // namespace kdrsdl
