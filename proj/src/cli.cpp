#include "kdrsdl/cli.hpp"

#include <glob.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "kdrsdl/error.hpp"
#include "kdrsdl/pipelines.hpp"
#include "kdrsdl/rpca.hpp"
#include "kdrsdl/storage.hpp"
#include "kdrsdl/synth.hpp"

namespace kdrsdl::cli {
namespace {

using nlohmann::ordered_json;

constexpr const char* kToolVersion = "0.1.0";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct SolverFlags {
  std::optional<Index> rank;
  std::optional<double> lambda;
  std::optional<double> alpha;
  double epsilon = SolverConfig{}.epsilon;
  int max_iter = SolverConfig{}.max_iter;
  int threads = 1;

  void add_to(CLI::App* app, bool with_alpha = true) {
    app->add_option("--r", rank, "Core dimension r (default min(m, n))")
        ->check(CLI::PositiveNumber);
    app->add_option("--lambda", lambda, "Outlier weight (default 1/sqrt(max(m, n)))")
        ->check(CLI::PositiveNumber);
    if (with_alpha) {
      app->add_option("--alpha", alpha, "Core sparsity weight")->check(CLI::PositiveNumber);
    }
    app->add_option("--epsilon", epsilon, "Convergence tolerance")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_option("--max-iter", max_iter, "Iteration cap")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_option("--threads", threads, "Worker threads for per-slice steps")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  }

  SolverConfig config(double default_alpha, std::uint64_t seed = 0) const {
    SolverConfig cfg;
    cfg.rank = rank;
    cfg.lambda = lambda;
    cfg.alpha = alpha.value_or(default_alpha);
    cfg.epsilon = epsilon;
    cfg.max_iter = max_iter;
    cfg.seed = seed;
    cfg.num_threads = threads;
    return cfg;
  }
};

fs::path require_file(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("path not found: " + path);
  return path;
}

std::vector<fs::path> require_glob(const std::string& pattern, const char* flag) {
  const auto matches = expand_glob(pattern);
  if (matches.empty()) {
    throw UsageError(std::string(flag) + ": path not found, no files match '" + pattern + "'");
  }
  return {matches.begin(), matches.end()};
}

ordered_json manifest_header(const std::string& command) {
  ordered_json j;
  j["tool"] = "kdrsdl";
  j["version"] = kToolVersion;
  j["command"] = command;
  return j;
}

void write_timing(const fs::path& dir, double seconds) {
  MetricsReport timing;
  timing.set("wall_time_s", seconds);
  write_metrics_csv(dir / "timing.csv", timing);
}

std::string frame_name(const char* prefix, Index i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%04ld.%s", prefix, static_cast<long>(i), ext);
  return buf;
}

std::vector<std::string> paths_as_strings(const std::vector<fs::path>& paths) {
  std::vector<std::string> out;
  for (const auto& p : paths) out.push_back(p.string());
  return out;
}

// ---------------------------------------------------------------------------

struct SynthCommand {
  SyntheticSpec spec;
  SolverFlags solver;
  std::string out_dir = ".";

  void add_to(CLI::App* app) {
    app->add_option("--m", spec.m, "Rows per slice")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--n", spec.n, "Columns per slice")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--num-slices", spec.num_slices, "Number of slices N")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_option("--rank-a", spec.rank_a, "Rank of the generating A")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_option("--rank-b", spec.rank_b, "Rank of the generating B")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_option("--gen-r", spec.r, "Width of the generating bases (default: --r)")
        ->check(CLI::PositiveNumber);
    app->add_option("--zero-prob", spec.zero_prob, "Probability an outlier entry is zero")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    app->add_option("--seed", spec.seed, "Random seed")->capture_default_str();
    app->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
    solver.add_to(app);
  }

  int run(CLI::App* app, std::ostream& out) {
    if (app->count("--gen-r") == 0) spec.r = solver.rank.value_or(spec.r);
    if (!solver.rank) solver.rank = spec.r;
    const SolverConfig cfg = solver.config(SolverConfig{}.alpha, spec.seed);

    const fs::path dir = out_dir;
    fs::create_directories(dir);
    Stopwatch clock;
    const SynthRecovery res = run_synth_recovery(spec, cfg);
    const double elapsed = clock.seconds();

    write_tensor(dir / "observations.kdt", res.data.observations);
    write_tensor(dir / "truth_L.kdt", res.data.truth.low_rank);
    write_tensor(dir / "truth_E.kdt", res.data.truth.outliers);
    ordered_json manifest = manifest_header("synth");
    manifest["synthetic"] = {{"m", spec.m},           {"n", spec.n},
                             {"num_slices", spec.num_slices},
                             {"rank_a", spec.rank_a}, {"rank_b", spec.rank_b},
                             {"r", spec.r},           {"zero_prob", spec.zero_prob},
                             {"seed", spec.seed},     {"rng", kRngAlgorithm}};
    write_bundle(dir, res.factorization, res.config, manifest);
    write_metrics_csv(dir / "metrics.csv", res.report);
    write_timing(dir, elapsed);

    out << "synth: rel_error_L=" << format_double(res.report.at("rel_error_L"))
        << " rel_error_E=" << format_double(res.report.at("rel_error_E"))
        << " density_E=" << format_double(res.report.at("density_E"))
        << " iterations=" << res.factorization.iterations << "\n";
    return kExitOk;
  }
};

struct DecomposeCommand {
  std::string input;
  SolverFlags solver;
  std::string out_dir = ".";

  void add_to(CLI::App* app) {
    app->add_option("--input", input, "Observation tensor (.kdt)")->required();
    app->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
    solver.add_to(app);
  }

  int run(std::ostream& out) {
    const Tensor3 x = read_tensor(require_file(input));
    const ResolvedConfig cfg = resolve(solver.config(SolverConfig{}.alpha), x.rows(), x.cols());

    const fs::path dir = out_dir;
    fs::create_directories(dir);
    Stopwatch clock;
    const KdrsdlFactorization f = solve(x, cfg);
    const double elapsed = clock.seconds();

    ordered_json manifest = manifest_header("decompose");
    manifest["input"] = input;
    write_bundle(dir, f, cfg, manifest);
    write_tensor(dir / "L.kdt", f.low_rank());

    MetricsReport report;
    report.set("iterations", f.iterations);
    report.set("converged", f.converged ? 1.0 : 0.0);
    report.set("err_rec", f.trace.empty() ? 0.0 : f.trace.back().err_rec);
    report.set("err_split", f.trace.empty() ? 0.0 : f.trace.back().err_split);
    report.set("density_E", density(f.outliers, outlier_tolerance(x)));
    write_metrics_csv(dir / "metrics.csv", report);
    write_timing(dir, elapsed);

    out << "decompose: iterations=" << f.iterations
        << " converged=" << (f.converged ? "yes" : "no") << "\n";
    return kExitOk;
  }
};

struct RpcaCommand {
  std::string input;
  std::optional<double> lambda;
  double epsilon = RpcaOptions{}.epsilon;
  int max_iter = RpcaOptions{}.max_iter;
  std::string out_dir = ".";

  void add_to(CLI::App* app) {
    app->add_option("--input", input, "Observation tensor (.kdt)")->required();
    app->add_option("--lambda", lambda, "Sparse weight (default 1/sqrt(max dims))")
        ->check(CLI::PositiveNumber);
    app->add_option("--epsilon", epsilon, "Relative residual tolerance")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_option("--max-iter", max_iter, "Iteration cap")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
  }

  int run(std::ostream& out) {
    const Tensor3 x = read_tensor(require_file(input));
    RpcaOptions opts;
    opts.lambda = lambda;
    opts.epsilon = epsilon;
    opts.max_iter = max_iter;

    const fs::path dir = out_dir;
    fs::create_directories(dir);
    Stopwatch clock;
    const RpcaTensorResult res = rpca_tensor(x, opts);
    const double elapsed = clock.seconds();

    write_tensor(dir / "L.kdt", res.low_rank);
    write_tensor(dir / "E.kdt", res.sparse);
    MetricsReport report;
    report.set("iterations", res.iterations);
    report.set("converged", res.converged ? 1.0 : 0.0);
    report.set("density_E", density(res.sparse, outlier_tolerance(x)));
    write_metrics_csv(dir / "metrics.csv", report);
    write_timing(dir, elapsed);

    ordered_json manifest = manifest_header("rpca");
    manifest["input"] = input;
    const Index max_dim = std::max(x.rows() * x.cols(), x.depth());
    manifest["lambda"] = lambda.value_or(1.0 / std::sqrt(static_cast<double>(max_dim)));
    manifest["epsilon"] = epsilon;
    manifest["max_iter"] = max_iter;
    manifest["rho"] = opts.rho;
    manifest["mu_scale"] = opts.mu_scale;
    manifest["mu_cap_factor"] = opts.mu_cap_factor;
    write_json(dir / "manifest.json", manifest);

    out << "rpca: iterations=" << res.iterations
        << " converged=" << (res.converged ? "yes" : "no") << "\n";
    return kExitOk;
  }
};

struct BgsubCommand {
  std::string frames;
  std::string masks;
  std::string pooling = "pooled";
  SolverFlags solver;
  std::string out_dir = ".";

  void add_to(CLI::App* app) {
    app->add_option("--frames", frames, "Glob of grayscale PGM frames")->required();
    app->add_option("--mask-frames", masks, "Glob of PGM ground-truth masks")->required();
    app->add_option("--pooling", pooling, "AUC pooling")
        ->capture_default_str()
        ->check(CLI::IsMember({"pooled", "per-frame"}));
    app->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
    solver.add_to(app);
  }

  int run(std::ostream& out) {
    const auto frame_paths = require_glob(frames, "--frames");
    const auto mask_paths = require_glob(masks, "--mask-frames");
    if (frame_paths.size() != mask_paths.size()) {
      throw UsageError("found " + std::to_string(frame_paths.size()) + " frames but " +
                       std::to_string(mask_paths.size()) + " masks");
    }
    const Tensor3 x = read_image_stack(frame_paths);
    const Tensor3 m = read_image_stack(mask_paths);
    if (!x.same_shape(m)) throw UsageError("masks and frames differ in size");
    {
      const auto [lo, hi] = std::minmax_element(m.data().begin(), m.data().end());
      if (!(*lo <= 0.5 && *hi > 0.5)) {
        throw UsageError("masks contain a single class; AUC is undefined");
      }
    }
    const AucPooling mode = pooling == "pooled" ? AucPooling::kPooled : AucPooling::kPerFrame;
    // Background subtraction uses alpha = 1e-2.
    const SolverConfig cfg = solver.config(1e-2);

    const fs::path dir = out_dir;
    fs::create_directories(dir);
    Stopwatch clock;
    const BackgroundSubtraction res = run_background_subtraction(x, m, cfg, mode);
    const double elapsed = clock.seconds();

    for (Index i = 0; i < res.foreground.depth(); ++i) {
      write_image(dir / frame_name("foreground", i, "pgm"), res.foreground.slice(i));
    }
    ordered_json manifest = manifest_header("bgsub");
    manifest["frames"] = paths_as_strings(frame_paths);
    manifest["masks"] = paths_as_strings(mask_paths);
    manifest["pooling"] = pooling;
    write_bundle(dir, res.factorization, res.config, manifest);
    write_metrics_csv(dir / "metrics.csv", res.report);
    write_timing(dir, elapsed);

    out << "bgsub: auc=" << format_double(res.report.at("auc")) << " (" << pooling << ")\n";
    return kExitOk;
  }
};

struct DenoiseCommand {
  std::string images;
  double noise_level = 0.1;
  std::uint64_t seed = 0;
  std::string method = "kdrsdl";
  SolverFlags solver;
  std::string out_dir = ".";

  void add_to(CLI::App* app) {
    app->add_option("--images", images, "Glob of PGM images or one PPM image")->required();
    app->add_option("--noise-level", noise_level, "Fraction of corrupted entries")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    app->add_option("--seed", seed, "Noise seed")->capture_default_str();
    app->add_option("--method", method, "Restoration method")
        ->capture_default_str()
        ->check(CLI::IsMember({"kdrsdl", "rpca"}));
    app->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
    solver.add_to(app);
  }

  int run(std::ostream& out) {
    const auto paths = require_glob(images, "--images");
    const Tensor3 clean = read_image_stack(paths);
    const bool color = paths.size() == 1 && clean.depth() == 3;

    DenoiseOptions opts;
    opts.noise_level = noise_level;
    opts.seed = seed;
    opts.method = method == "rpca" ? DenoiseMethod::kRpca : DenoiseMethod::kKdrsdl;
    opts.solver = solver.config(default_denoise_alpha(noise_level), seed);
    opts.alpha_from_noise = !solver.alpha.has_value();

    const fs::path dir = out_dir;
    fs::create_directories(dir);
    Stopwatch clock;
    const Denoising res = run_denoise(clean, opts);
    const double elapsed = clock.seconds();

    if (color) {
      write_color_image(dir / "noisy.ppm", res.corrupted);
      write_color_image(dir / "recovered.ppm", res.recovered);
    } else {
      for (Index i = 0; i < clean.depth(); ++i) {
        write_image(dir / frame_name("noisy", i, "pgm"), res.corrupted.slice(i));
        write_image(dir / frame_name("recovered", i, "pgm"), res.recovered.slice(i));
      }
    }
    write_metrics_csv(dir / "metrics.csv", res.report);
    write_timing(dir, elapsed);

    ordered_json manifest = manifest_header("denoise");
    manifest["images"] = paths_as_strings(paths);
    manifest["noise_level"] = noise_level;
    manifest["seed"] = seed;
    manifest["rng"] = kRngAlgorithm;
    manifest["method"] = method;
    if (opts.method == DenoiseMethod::kKdrsdl) {
      SolverConfig cfg = opts.solver;
      if (opts.alpha_from_noise) cfg.alpha = default_denoise_alpha(noise_level);
      manifest["config"] = config_to_json(resolve(cfg, clean.rows(), clean.cols()));
    }
    write_json(dir / "manifest.json", manifest);

    out << "denoise: mean_psnr=" << format_double(res.report.at("mean_psnr"))
        << " noisy=" << format_double(res.report.at("mean_psnr_noisy")) << "\n";
    return kExitOk;
  }
};

struct EvalCommand {
  std::string estimate;
  std::string reference;
  std::string labels;
  std::string pooling = "pooled";
  std::string out_dir = ".";

  void add_to(CLI::App* app) {
    app->add_option("--estimate", estimate, "Estimated tensor (.kdt)")->required();
    app->add_option("--reference", reference, "Reference tensor (.kdt)");
    app->add_option("--labels", labels, "Binary label tensor (.kdt) for AUC of |estimate|");
    app->add_option("--pooling", pooling, "AUC pooling")
        ->capture_default_str()
        ->check(CLI::IsMember({"pooled", "per-frame"}));
    app->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
  }

  int run(std::ostream& out) {
    if (reference.empty() && labels.empty()) {
      throw UsageError("eval needs --reference and/or --labels");
    }
    const Tensor3 est = read_tensor(require_file(estimate));
    MetricsReport report;
    report.set("density", density(est, kDensityTolerance));
    if (!reference.empty()) {
      const Tensor3 ref = read_tensor(require_file(reference));
      report.set("relative_error", relative_error(est, ref));
      report.set("psnr", psnr(est, ref));
    }
    if (!labels.empty()) {
      const Tensor3 lab = read_tensor(require_file(labels));
      report.set("auc", foreground_auc(est, lab,
                                       pooling == "pooled" ? AucPooling::kPooled
                                                           : AucPooling::kPerFrame));
    }
    const fs::path dir = out_dir;
    fs::create_directories(dir);
    write_metrics_csv(dir / "metrics.csv", report);
    ordered_json manifest = manifest_header("eval");
    manifest["estimate"] = estimate;
    manifest["reference"] = reference;
    manifest["labels"] = labels;
    manifest["pooling"] = pooling;
    write_json(dir / "manifest.json", manifest);
    for (const auto& [k, v] : report.values()) out << k << "=" << format_double(v) << "\n";
    return kExitOk;
  }
};

}  // namespace

std::vector<std::string> expand_glob(const std::string& pattern) {
  glob_t g{};
  std::vector<std::string> out;
  if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
    for (std::size_t k = 0; k < g.gl_pathc; ++k) out.emplace_back(g.gl_pathv[k]);
  }
  ::globfree(&g);
  std::sort(out.begin(), out.end());
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust Kronecker-decomposable component analysis", "kdrsdl"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  SynthCommand synth;
  DecomposeCommand decompose;
  RpcaCommand rpca;
  BgsubCommand bgsub;
  DenoiseCommand denoise;
  EvalCommand eval;
  auto* synth_app = app.add_subcommand("synth", "Generate synthetic data and recover it");
  synth.add_to(synth_app);
  auto* decompose_app = app.add_subcommand("decompose", "Factorize a tensor file");
  decompose.add_to(decompose_app);
  auto* rpca_app = app.add_subcommand("rpca", "Matrix robust PCA baseline (inexact ALM)");
  rpca.add_to(rpca_app);
  auto* bgsub_app = app.add_subcommand("bgsub", "Background subtraction with AUC scoring");
  bgsub.add_to(bgsub_app);
  auto* denoise_app = app.add_subcommand("denoise", "Salt-and-pepper denoising with PSNR");
  denoise.add_to(denoise_app);
  auto* eval_app = app.add_subcommand("eval", "Compare tensors: error, PSNR, density, AUC");
  eval.add_to(eval_app);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth_app) return synth.run(synth_app, out);
    if (*decompose_app) return decompose.run(out);
    if (*rpca_app) return rpca.run(out);
    if (*bgsub_app) return bgsub.run(out);
    if (*denoise_app) return denoise.run(out);
    if (*eval_app) return eval.run(out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SolverError& e) {
    err << "solver failed: " << e.what() << "\n";
    if (!e.trace().empty()) {
      const auto& last = e.trace().back();
      err << "last recorded iteration " << last.iter << ": err_rec=" << last.err_rec
          << " err_split=" << last.err_split << "\n";
    }
    return kExitFailure;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == FormatErrorKind::kIo ? kExitFailure : kExitUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace kdrsdl::cli
