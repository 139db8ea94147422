#pragma once

// Test-only helpers: seeded random inputs and brute-force oracles that do
// not share code paths with the library routines they check.

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "kdrsdl/tensor.hpp"

namespace kdrsdl::testing {

class Random {
 public:
  explicit Random(unsigned seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

  Matrix matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
      for (Index i = 0; i < rows; ++i) m(i, j) = normal();
    }
    return m;
  }

  Tensor3 tensor(Index rows, Index cols, Index depth) {
    Tensor3 t(rows, cols, depth);
    for (double& v : t.data()) v = normal();
    return t;
  }

  /// G^T G + shift I: symmetric positive (semi)definite.
  Matrix spd(Index n, double shift = 1.0) {
    const Matrix g = matrix(n, n);
    return g.transpose() * g + shift * Matrix::Identity(n, n);
  }

  Matrix symmetric(Index n) {
    const Matrix g = matrix(n, n);
    return 0.5 * (g + g.transpose());
  }

  Matrix orthogonal(Index n) {
    Eigen::HouseholderQR<Matrix> qr(matrix(n, n));
    return qr.householderQ() * Matrix::Identity(n, n);
  }

 private:
  std::mt19937 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Kronecker product by explicit index arithmetic.
inline Matrix kron_oracle(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < out.rows(); ++i) {
    for (Index j = 0; j < out.cols(); ++j) {
      out(i, j) = a(i / b.rows(), j / b.cols()) * b(i % b.rows(), j % b.cols());
    }
  }
  return out;
}

/// Solves X - lhs X rhs = c through the r^2 x r^2 system
/// (I - rhs^T kron lhs) vec(X) = vec(c) with full-pivot LU.
inline Matrix stein_oracle(const Matrix& lhs, const Matrix& rhs, const Matrix& c) {
  const Index r = c.rows();
  const Matrix system =
      Matrix::Identity(r * r, r * r) - kron_oracle(rhs.transpose(), lhs);
  const Vector vec_c = Eigen::Map<const Vector>(c.data(), r * r);
  const Vector vec_x = system.fullPivLu().solve(vec_c);
  return Eigen::Map<const Matrix>(vec_x.data(), r, r);
}

/// (u x_mode t) by the triple loop of the definition.
inline Tensor3 mode_product_oracle(const Tensor3& t, const Matrix& u, int mode) {
  if (mode == 1) {
    Tensor3 out(u.rows(), t.cols(), t.depth());
    for (Index s = 0; s < t.depth(); ++s) {
      for (Index i = 0; i < u.rows(); ++i) {
        for (Index j = 0; j < t.cols(); ++j) {
          double acc = 0.0;
          for (Index k = 0; k < t.rows(); ++k) acc += u(i, k) * t.slice(s)(k, j);
          out.slice(s)(i, j) = acc;
        }
      }
    }
    return out;
  }
  Tensor3 out(t.rows(), u.rows(), t.depth());
  for (Index s = 0; s < t.depth(); ++s) {
    for (Index i = 0; i < t.rows(); ++i) {
      for (Index j = 0; j < u.rows(); ++j) {
        double acc = 0.0;
        for (Index k = 0; k < t.cols(); ++k) acc += t.slice(s)(i, k) * u(j, k);
        out.slice(s)(i, j) = acc;
      }
    }
  }
  return out;
}

inline double max_abs_diff(const Tensor3& a, const Tensor3& b) {
  double m = 0.0;
  for (Index k = 0; k < a.size(); ++k) {
    m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
  }
  return m;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("kdrsdl_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace kdrsdl::testing
