#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace kdrsdl {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

using SliceView = Eigen::Map<Matrix>;
using ConstSliceView = Eigen::Map<const Matrix>;

/// Dense stack of `depth` real rows x cols frontal slices.
///
/// Storage is one contiguous buffer, slice-major (the slice index varies
/// slowest) and column-major within each slice, so slice i occupies
/// data()[i*rows*cols, (i+1)*rows*cols).
class Tensor3 {
 public:
  /// Empty tensor (all dimensions zero). Only useful as a placeholder.
  Tensor3() = default;

  /// Zero-filled tensor. All dimensions must be positive.
  Tensor3(Index rows, Index cols, Index depth);

  /// Takes ownership of `data` laid out as described above. Rejects
  /// non-positive dimensions, a length mismatch or non-finite entries.
  Tensor3(Index rows, Index cols, Index depth, std::vector<double> data);

  /// Stacks equally sized matrices as frontal slices.
  static Tensor3 from_slices(std::span<const Matrix> slices);

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  Index depth() const noexcept { return depth_; }
  Index size() const noexcept { return static_cast<Index>(data_.size()); }
  bool empty() const noexcept { return data_.empty(); }

  /// Writable view of slice i; writes go straight into the tensor.
  SliceView slice(Index i);
  ConstSliceView slice(Index i) const;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  double squared_norm() const;
  double norm() const;
  bool all_finite() const;
  bool same_shape(const Tensor3& other) const noexcept;

  Tensor3& operator+=(const Tensor3& other);
  Tensor3& operator-=(const Tensor3& other);
  Tensor3& operator*=(double s);

  friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
  friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
  friend Tensor3 operator*(Tensor3 a, double s) { return a *= s; }
  friend Tensor3 operator*(double s, Tensor3 a) { return a *= s; }
  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  Index depth_ = 0;
  std::vector<double> data_;
};

/// Copy of frontal slice i. Throws DimensionError when i is out of range.
Matrix frontal_slice(const Tensor3& t, Index i);

/// Mode-1 (mode == 1) returns slices u * X_i; mode-2 returns X_i * u^T.
/// Hence (t x1 A x2 B)_i = A X_i B^T.
Tensor3 mode_product(const Tensor3& t, const Matrix& u, int mode);

/// Low-rank part L_i = A R_i B^T of a factorization.
Tensor3 reconstruct(const Tensor3& core, const Matrix& a, const Matrix& b);

/// Mode-3 matricization: column i holds vec(X_i).
Matrix unfold_slices(const Tensor3& t);
Tensor3 fold_slices(const Matrix& columns, Index rows, Index cols);

}  // namespace kdrsdl
