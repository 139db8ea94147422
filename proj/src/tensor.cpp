#include "kdrsdl/tensor.hpp"

#include <cmath>
#include <string>

#include "kdrsdl/error.hpp"

namespace kdrsdl {
namespace {

void require_positive(Index rows, Index cols, Index depth) {
  if (rows <= 0 || cols <= 0 || depth <= 0) {
    throw DimensionError("tensor dimensions must be positive, got " +
                         std::to_string(rows) + "x" + std::to_string(cols) +
                         "x" + std::to_string(depth));
  }
}

void require_same_shape(const Tensor3& a, const Tensor3& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("tensor shape mismatch");
  }
}

}  // namespace

Tensor3::Tensor3(Index rows, Index cols, Index depth)
    : rows_(rows), cols_(cols), depth_(depth) {
  require_positive(rows, cols, depth);
  data_.assign(static_cast<std::size_t>(rows * cols * depth), 0.0);
}

Tensor3::Tensor3(Index rows, Index cols, Index depth, std::vector<double> data)
    : rows_(rows), cols_(cols), depth_(depth), data_(std::move(data)) {
  require_positive(rows, cols, depth);
  if (static_cast<Index>(data_.size()) != rows * cols * depth) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(rows * cols * depth));
  }
  if (!all_finite()) {
    throw NonFiniteError("tensor data contains NaN or Inf");
  }
}

Tensor3 Tensor3::from_slices(std::span<const Matrix> slices) {
  if (slices.empty()) {
    throw DimensionError("cannot stack an empty list of slices");
  }
  const Index rows = slices.front().rows();
  const Index cols = slices.front().cols();
  Tensor3 t(rows, cols, static_cast<Index>(slices.size()));
  for (Index i = 0; i < t.depth(); ++i) {
    const Matrix& s = slices[static_cast<std::size_t>(i)];
    if (s.rows() != rows || s.cols() != cols) {
      throw DimensionError("slices must share dimensions");
    }
    if (!s.allFinite()) {
      throw NonFiniteError("slice contains NaN or Inf");
    }
    t.slice(i) = s;
  }
  return t;
}

SliceView Tensor3::slice(Index i) {
  if (i < 0 || i >= depth_) {
    throw DimensionError("slice index " + std::to_string(i) +
                         " out of range for depth " + std::to_string(depth_));
  }
  return SliceView(data_.data() + i * rows_ * cols_, rows_, cols_);
}

ConstSliceView Tensor3::slice(Index i) const {
  if (i < 0 || i >= depth_) {
    throw DimensionError("slice index " + std::to_string(i) +
                         " out of range for depth " + std::to_string(depth_));
  }
  return ConstSliceView(data_.data() + i * rows_ * cols_, rows_, cols_);
}

double Tensor3::squared_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

double Tensor3::norm() const { return std::sqrt(squared_norm()); }

bool Tensor3::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool Tensor3::same_shape(const Tensor3& other) const noexcept {
  return rows_ == other.rows_ && cols_ == other.cols_ && depth_ == other.depth_;
}

Tensor3& Tensor3::operator+=(const Tensor3& other) {
  require_same_shape(*this, other);
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

Tensor3& Tensor3::operator-=(const Tensor3& other) {
  require_same_shape(*this, other);
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

Tensor3& Tensor3::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix frontal_slice(const Tensor3& t, Index i) { return t.slice(i); }

Tensor3 mode_product(const Tensor3& t, const Matrix& u, int mode) {
  if (mode != 1 && mode != 2) {
    throw DimensionError("mode must be 1 or 2, got " + std::to_string(mode));
  }
  if (mode == 1) {
    if (u.cols() != t.rows()) {
      throw DimensionError("mode-1 product needs u.cols() == rows");
    }
    Tensor3 out(u.rows(), t.cols(), t.depth());
    for (Index i = 0; i < t.depth(); ++i) out.slice(i).noalias() = u * t.slice(i);
    return out;
  }
  if (u.cols() != t.cols()) {
    throw DimensionError("mode-2 product needs u.cols() == cols");
  }
  Tensor3 out(t.rows(), u.rows(), t.depth());
  for (Index i = 0; i < t.depth(); ++i) {
    out.slice(i).noalias() = t.slice(i) * u.transpose();
  }
  return out;
}

Tensor3 reconstruct(const Tensor3& core, const Matrix& a, const Matrix& b) {
  if (core.rows() != a.cols() || core.cols() != b.cols()) {
    throw DimensionError("reconstruct: core is " + std::to_string(core.rows()) +
                         "x" + std::to_string(core.cols()) + " but bases have " +
                         std::to_string(a.cols()) + " and " +
                         std::to_string(b.cols()) + " columns");
  }
  Tensor3 out(a.rows(), b.rows(), core.depth());
  Matrix tmp(a.rows(), core.cols());
  for (Index i = 0; i < core.depth(); ++i) {
    tmp.noalias() = a * core.slice(i);
    out.slice(i).noalias() = tmp * b.transpose();
  }
  return out;
}

Matrix unfold_slices(const Tensor3& t) {
  return Eigen::Map<const Matrix>(t.data().data(), t.rows() * t.cols(), t.depth());
}

Tensor3 fold_slices(const Matrix& columns, Index rows, Index cols) {
  if (columns.rows() != rows * cols) {
    throw DimensionError("fold_slices: column length does not match rows*cols");
  }
  std::vector<double> data(columns.data(), columns.data() + columns.size());
  return Tensor3(rows, cols, columns.cols(), std::move(data));
}

}  // namespace kdrsdl
