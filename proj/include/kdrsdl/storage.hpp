#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "kdrsdl/metrics.hpp"
#include "kdrsdl/solver.hpp"
#include "kdrsdl/tensor.hpp"

namespace kdrsdl {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// KDT tensor container
//
//   offset 0   "KDT1"
//   offset 4   rows, cols, depth as uint32 little-endian
//   offset 16  rows*cols*depth IEEE-754 binary64 little-endian values in
//              Tensor3 layout
//
// File length is exactly 16 + 8 * rows * cols * depth bytes.
// ---------------------------------------------------------------------------

inline constexpr char kTensorMagic[4] = {'K', 'D', 'T', '1'};

void write_tensor(const fs::path& path, const Tensor3& t);
Tensor3 read_tensor(const fs::path& path);

/// Serialized bytes of a tensor file, for callers that need the image in
/// memory.
std::vector<unsigned char> encode_tensor(const Tensor3& t);
Tensor3 decode_tensor(std::span<const unsigned char> bytes);

// ---------------------------------------------------------------------------
// Netpbm images. Only binary P5 (grayscale) and P6 (RGB) with maxval 255.
// Pixels map to [0, 1] on read; on write values are clamped to [0, 1] and
// rounded to the nearest level.
// ---------------------------------------------------------------------------

/// Decodes one image: a depth-1 tensor for P5, depth-3 (R, G, B) for P6.
Tensor3 read_image(const fs::path& path);

/// Concatenates the slices of every image along the third mode. All images
/// must share width and height.
Tensor3 read_image_stack(std::span<const fs::path> paths);

/// Writes a grayscale P5 image; rows are image rows.
void write_image(const fs::path& path, const Matrix& slice);

/// Writes a P6 image from a depth-3 tensor.
void write_color_image(const fs::path& path, const Tensor3& channels);

// ---------------------------------------------------------------------------
// CSV and manifests
// ---------------------------------------------------------------------------

/// Shortest decimal string that parses back to exactly `v`. Infinities are
/// written as "inf" / "-inf".
std::string format_double(double v);

/// metric,value table; one row per entry of the report.
void write_metrics_csv(const fs::path& path, const MetricsReport& report);

/// iter,err_rec,err_split,mu,mu_K table.
void write_trace_csv(const fs::path& path, std::span<const TraceRecord> trace);
std::vector<TraceRecord> read_trace_csv(const fs::path& path);

nlohmann::ordered_json config_to_json(const ResolvedConfig& cfg);
ResolvedConfig config_from_json(const nlohmann::json& j);

void write_json(const fs::path& path, const nlohmann::ordered_json& j);
nlohmann::json read_json(const fs::path& path);

// ---------------------------------------------------------------------------
// Factorization bundle: a directory holding A.kdt, B.kdt (depth-1 tensors),
// R.kdt, E.kdt, trace.csv and manifest.json.
// ---------------------------------------------------------------------------

/// `manifest` receives the solver outcome and config; extra entries already
/// present (seed, generator id, input path, ...) are preserved.
void write_bundle(const fs::path& dir, const KdrsdlFactorization& f,
                  const ResolvedConfig& cfg, nlohmann::ordered_json manifest = {});

struct Bundle {
  KdrsdlFactorization factorization;
  ResolvedConfig config;
  nlohmann::json manifest;
};

Bundle read_bundle(const fs::path& dir);

}  // namespace kdrsdl
