#pragma once

// Constructed image data shared by the CLI tests and the acceptance run.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "kdrsdl/storage.hpp"
#include "kdrsdl/synth.hpp"

namespace kdrsdl::testing {

/// A static shaded background with a bright 6x6 square moving across it.
/// Frames are 32 x 40; masks mark the square exactly.
struct Clip {
  Tensor3 frames;
  Tensor3 masks;
};

inline Clip moving_square_clip(Index count = 20) {
  const Index m = 32;
  const Index n = 40;
  const Index side = 6;
  Clip c{Tensor3(m, n, count), Tensor3(m, n, count)};
  for (Index i = 0; i < count; ++i) {
    auto f = c.frames.slice(i);
    auto k = c.masks.slice(i);
    for (Index y = 0; y < m; ++y) {
      for (Index x = 0; x < n; ++x) {
        const double v = 0.1 + 0.3 * (0.5 + 0.5 * std::sin(0.2 * static_cast<double>(y))) *
                                   (0.3 + 0.7 * static_cast<double>(x) / static_cast<double>(n));
        // Quantize so the PGM copy holds the same values.
        f(y, x) = std::round(v * 255.0) / 255.0;
      }
    }
    const Index y0 = (3 * i) % (m - side);
    const Index x0 = (2 * i + 5) % (n - side);
    f.block(y0, x0, side, side).setOnes();
    k.block(y0, x0, side, side).setOnes();
  }
  return c;
}

/// Stack of 30 x 36 images, each a 3 x 3 mosaic of constant blocks with
/// random 8-bit levels, so every slice has rank at most 3.
inline Tensor3 mosaic_stack(Index count = 10, std::uint64_t seed = 7) {
  const Index rows[4] = {0, 7, 19, 30};
  const Index cols[4] = {0, 12, 20, 36};
  Rng rng(seed);
  Tensor3 t(30, 36, count);
  for (Index i = 0; i < count; ++i) {
    auto s = t.slice(i);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        const int level = 20 + static_cast<int>(rng.uniform() * 215.0);
        s.block(rows[a], cols[b], rows[a + 1] - rows[a], cols[b + 1] - cols[b])
            .setConstant(level / 255.0);
      }
    }
  }
  return t;
}

/// Writes every slice as <dir>/<stem>_NNNN.pgm.
inline void write_stack(const std::filesystem::path& dir, const std::string& stem,
                        const Tensor3& t) {
  std::filesystem::create_directories(dir);
  for (Index i = 0; i < t.depth(); ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "%s_%04d.pgm", stem.c_str(), static_cast<int>(i));
    write_image(dir / name, t.slice(i));
  }
}

}  // namespace kdrsdl::testing
