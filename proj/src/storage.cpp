#include "kdrsdl/storage.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "kdrsdl/error.hpp"

namespace kdrsdl {
namespace {

std::vector<unsigned char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError(FormatErrorKind::kIo, "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, std::span<const unsigned char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw FormatError(FormatErrorKind::kIo, "cannot create " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(FormatErrorKind::kIo, "write failed: " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, {reinterpret_cast<const unsigned char*>(text.data()), text.size()});
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<unsigned char>(v >> (8 * k)));
}

void put_f64(std::vector<unsigned char>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<unsigned char>(bits >> (8 * k)));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(p[k]) << (8 * k);
  return v;
}

double get_f64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(p[k]) << (8 * k);
  return std::bit_cast<double>(v);
}

// Netpbm header tokens are separated by whitespace; '#' starts a comment
// running to the end of the line.
class PnmHeader {
 public:
  explicit PnmHeader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  std::string token() {
    skip_space_and_comments();
    std::string out;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) {
      out.push_back(static_cast<char>(bytes_[pos_++]));
    }
    return out;
  }

  long number(const char* what) {
    const std::string t = token();
    long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || v <= 0) {
      throw FormatError(FormatErrorKind::kBadHeader, std::string("invalid ") + what);
    }
    return v;
  }

  /// Consumes the single whitespace byte that ends the header.
  std::size_t payload_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw FormatError(FormatErrorKind::kBadHeader, "header not terminated");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

unsigned char quantize(double v) {
  const double clamped = std::clamp(v, 0.0, 1.0);
  return static_cast<unsigned char>(std::lround(clamped * 255.0));
}

std::vector<unsigned char> pnm_header(const char* magic, Index width, Index height) {
  const std::string h = std::string(magic) + "\n" + std::to_string(width) + " " +
                        std::to_string(height) + "\n255\n";
  return {h.begin(), h.end()};
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError(FormatErrorKind::kBadHeader, "not a number: '" + s + "'");
  }
  return v;
}

Matrix as_matrix(const Tensor3& t) {
  if (t.depth() != 1) {
    throw FormatError(FormatErrorKind::kBadHeader, "expected a depth-1 tensor");
  }
  return t.slice(0);
}

Tensor3 as_tensor(const Matrix& m) {
  return Tensor3(m.rows(), m.cols(), 1, std::vector<double>(m.data(), m.data() + m.size()));
}

}  // namespace

std::vector<unsigned char> encode_tensor(const Tensor3& t) {
  if (t.empty()) throw DimensionError("cannot serialize an empty tensor");
  if (!t.all_finite()) {
    throw FormatError(FormatErrorKind::kNonFinite, "tensor contains NaN or Inf");
  }
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  if (t.rows() > kMax || t.cols() > kMax || t.depth() > kMax) {
    throw DimensionError("tensor dimension exceeds the 32-bit header field");
  }
  std::vector<unsigned char> out;
  out.reserve(16 + 8 * static_cast<std::size_t>(t.size()));
  out.insert(out.end(), std::begin(kTensorMagic), std::end(kTensorMagic));
  put_u32(out, static_cast<std::uint32_t>(t.rows()));
  put_u32(out, static_cast<std::uint32_t>(t.cols()));
  put_u32(out, static_cast<std::uint32_t>(t.depth()));
  for (double v : t.data()) put_f64(out, v);
  return out;
}

Tensor3 decode_tensor(std::span<const unsigned char> bytes) {
  if (bytes.size() < 16) {
    throw FormatError(FormatErrorKind::kTruncated, "file shorter than the 16-byte header");
  }
  if (std::memcmp(bytes.data(), kTensorMagic, 4) != 0) {
    throw FormatError(FormatErrorKind::kBadMagic, "expected KDT1");
  }
  const std::uint64_t rows = get_u32(bytes.data() + 4);
  const std::uint64_t cols = get_u32(bytes.data() + 8);
  const std::uint64_t depth = get_u32(bytes.data() + 12);
  if (rows == 0 || cols == 0 || depth == 0) {
    throw FormatError(FormatErrorKind::kBadHeader, "zero dimension in header");
  }
  const std::uint64_t count = rows * cols * depth;
  const std::uint64_t expected = 16 + 8 * count;
  if (bytes.size() < expected) {
    throw FormatError(FormatErrorKind::kTruncated,
                      "payload has " + std::to_string((bytes.size() - 16) / 8) +
                          " values, header declares " + std::to_string(count));
  }
  if (bytes.size() > expected) {
    throw FormatError(FormatErrorKind::kTrailingBytes,
                      std::to_string(bytes.size() - expected) + " bytes after payload");
  }
  std::vector<double> data(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    data[k] = get_f64(bytes.data() + 16 + 8 * k);
    if (!std::isfinite(data[k])) {
      throw FormatError(FormatErrorKind::kNonFinite,
                        "value " + std::to_string(k) + " is NaN or Inf");
    }
  }
  return Tensor3(static_cast<Index>(rows), static_cast<Index>(cols),
                 static_cast<Index>(depth), std::move(data));
}

void write_tensor(const fs::path& path, const Tensor3& t) {
  write_file(path, encode_tensor(t));
}

Tensor3 read_tensor(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_tensor(bytes);
  } catch (const FormatError& e) {
    throw FormatError(e.kind(), path.string() + ": " + e.what());
  }
}

Tensor3 read_image(const fs::path& path) {
  const auto bytes = read_file(path);
  PnmHeader header(bytes);
  const std::string magic = header.token();
  if (magic != "P5" && magic != "P6") {
    throw FormatError(FormatErrorKind::kUnsupportedImage,
                      path.string() + ": magic '" + magic + "' is not P5 or P6");
  }
  const long width = header.number("width");
  const long height = header.number("height");
  const long maxval = header.number("maxval");
  if (maxval != 255) {
    throw FormatError(FormatErrorKind::kBadMaxval,
                      path.string() + ": maxval " + std::to_string(maxval) + " != 255");
  }
  const std::size_t offset = header.payload_offset();
  const Index channels = magic == "P5" ? 1 : 3;
  const auto pixels = static_cast<std::size_t>(width * height);
  if (bytes.size() - offset < pixels * channels) {
    throw FormatError(FormatErrorKind::kTruncated, path.string() + ": pixel data truncated");
  }
  Tensor3 out(height, width, channels);
  for (Index c = 0; c < channels; ++c) {
    auto slice = out.slice(c);
    for (long y = 0; y < height; ++y) {
      for (long x = 0; x < width; ++x) {
        const std::size_t k = offset + (static_cast<std::size_t>(y * width + x)) * channels + c;
        slice(y, x) = static_cast<double>(bytes[k]) / 255.0;
      }
    }
  }
  return out;
}

Tensor3 read_image_stack(std::span<const fs::path> paths) {
  if (paths.empty()) throw DimensionError("read_image_stack: no images given");
  std::vector<Matrix> slices;
  Index rows = -1;
  Index cols = -1;
  for (const auto& p : paths) {
    const Tensor3 img = read_image(p);
    if (rows < 0) {
      rows = img.rows();
      cols = img.cols();
    } else if (img.rows() != rows || img.cols() != cols) {
      throw FormatError(FormatErrorKind::kMixedDimensions,
                        p.string() + " is " + std::to_string(img.cols()) + "x" +
                            std::to_string(img.rows()) + ", expected " +
                            std::to_string(cols) + "x" + std::to_string(rows));
    }
    for (Index c = 0; c < img.depth(); ++c) slices.emplace_back(img.slice(c));
  }
  return Tensor3::from_slices(slices);
}

void write_image(const fs::path& path, const Matrix& slice) {
  auto out = pnm_header("P5", slice.cols(), slice.rows());
  for (Index y = 0; y < slice.rows(); ++y) {
    for (Index x = 0; x < slice.cols(); ++x) out.push_back(quantize(slice(y, x)));
  }
  write_file(path, out);
}

void write_color_image(const fs::path& path, const Tensor3& channels) {
  if (channels.depth() != 3) {
    throw DimensionError("write_color_image needs exactly 3 channels");
  }
  auto out = pnm_header("P6", channels.cols(), channels.rows());
  for (Index y = 0; y < channels.rows(); ++y) {
    for (Index x = 0; x < channels.cols(); ++x) {
      for (Index c = 0; c < 3; ++c) out.push_back(quantize(channels.slice(c)(y, x)));
    }
  }
  write_file(path, out);
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

void write_metrics_csv(const fs::path& path, const MetricsReport& report) {
  std::string text = "metric,value\n";
  for (const auto& [name, value] : report.values()) {
    text += name + "," + format_double(value) + "\n";
  }
  write_text(path, text);
}

void write_trace_csv(const fs::path& path, std::span<const TraceRecord> trace) {
  std::string text = "iter,err_rec,err_split,mu,mu_K\n";
  for (const auto& t : trace) {
    text += std::to_string(t.iter) + "," + format_double(t.err_rec) + "," +
            format_double(t.err_split) + "," + format_double(t.mu) + "," +
            format_double(t.mu_split) + "\n";
  }
  write_text(path, text);
}

std::vector<TraceRecord> read_trace_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(FormatErrorKind::kIo, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "iter,err_rec,err_split,mu,mu_K") {
    throw FormatError(FormatErrorKind::kBadHeader, path.string() + ": unexpected columns");
  }
  std::vector<TraceRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 5) {
      throw FormatError(FormatErrorKind::kBadHeader, path.string() + ": malformed row");
    }
    TraceRecord t;
    t.iter = static_cast<int>(parse_double(cells[0]));
    t.err_rec = parse_double(cells[1]);
    t.err_split = parse_double(cells[2]);
    t.mu = parse_double(cells[3]);
    t.mu_split = parse_double(cells[4]);
    out.push_back(t);
  }
  return out;
}

nlohmann::ordered_json config_to_json(const ResolvedConfig& cfg) {
  nlohmann::ordered_json j;
  j["r"] = cfg.rank;
  j["lambda"] = cfg.lambda;
  j["alpha"] = cfg.alpha;
  j["eta"] = cfg.eta;
  j["rho"] = cfg.rho;
  j["mu_cap_factor"] = cfg.mu_cap_factor;
  j["epsilon"] = cfg.epsilon;
  j["max_iter"] = cfg.max_iter;
  j["seed"] = cfg.seed;
  j["num_threads"] = cfg.num_threads;
  return j;
}

ResolvedConfig config_from_json(const nlohmann::json& j) {
  ResolvedConfig cfg;
  try {
    cfg.rank = j.at("r").get<Index>();
    cfg.lambda = j.at("lambda").get<double>();
    cfg.alpha = j.at("alpha").get<double>();
    cfg.eta = j.at("eta").get<double>();
    cfg.rho = j.at("rho").get<double>();
    cfg.mu_cap_factor = j.at("mu_cap_factor").get<double>();
    cfg.epsilon = j.at("epsilon").get<double>();
    cfg.max_iter = j.at("max_iter").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.num_threads = j.value("num_threads", 1);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatErrorKind::kBadHeader, std::string("manifest: ") + e.what());
  }
  return cfg;
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  write_text(path, j.dump(2) + "\n");
}

nlohmann::json read_json(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatErrorKind::kBadHeader, path.string() + ": " + e.what());
  }
}

void write_bundle(const fs::path& dir, const KdrsdlFactorization& f,
                  const ResolvedConfig& cfg, nlohmann::ordered_json manifest) {
  fs::create_directories(dir);
  write_tensor(dir / "A.kdt", as_tensor(f.a));
  write_tensor(dir / "B.kdt", as_tensor(f.b));
  write_tensor(dir / "R.kdt", f.core);
  write_tensor(dir / "E.kdt", f.outliers);
  write_trace_csv(dir / "trace.csv", f.trace);
  manifest["config"] = config_to_json(cfg);
  manifest["converged"] = f.converged;
  manifest["iterations"] = f.iterations;
  write_json(dir / "manifest.json", manifest);
}

Bundle read_bundle(const fs::path& dir) {
  Bundle out;
  out.factorization.a = as_matrix(read_tensor(dir / "A.kdt"));
  out.factorization.b = as_matrix(read_tensor(dir / "B.kdt"));
  out.factorization.core = read_tensor(dir / "R.kdt");
  out.factorization.outliers = read_tensor(dir / "E.kdt");
  out.factorization.trace = read_trace_csv(dir / "trace.csv");
  out.manifest = read_json(dir / "manifest.json");
  if (!out.manifest.contains("config")) {
    throw FormatError(FormatErrorKind::kBadHeader, "manifest has no config section");
  }
  out.config = config_from_json(out.manifest["config"]);
  out.factorization.converged = out.manifest.value("converged", false);
  out.factorization.iterations = out.manifest.value("iterations", 0);
  return out;
}

}  // namespace kdrsdl
