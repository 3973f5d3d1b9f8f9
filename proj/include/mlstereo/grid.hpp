#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mlstereo/errors.hpp"

namespace mlstereo {

/// Dense row-major 2-D array. The workhorse container for every per-pixel
/// map in the library (disparity planes, masks, weights).
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(checked_size(rows, cols), fill) {}

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int r, int c) { return data_[index(r, c)]; }
  const T& operator()(int r, int c) const { return data_[index(r, c)]; }

  T& at(int r, int c) {
    bounds_check(r, c);
    return data_[index(r, c)];
  }
  const T& at(int r, int c) const {
    bounds_check(r, c);
    return data_[index(r, c)];
  }

  /// Replicate-border access.
  const T& clamped(int r, int c) const {
    r = r < 0 ? 0 : (r >= rows_ ? rows_ - 1 : r);
    c = c < 0 ? 0 : (c >= cols_ ? cols_ - 1 : c);
    return data_[index(r, c)];
  }

  std::span<T> row(int r) { return {data_.data() + index(r, 0), static_cast<std::size_t>(cols_)}; }
  std::span<const T> row(int r) const {
    return {data_.data() + index(r, 0), static_cast<std::size_t>(cols_)};
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  void fill(const T& v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const auto& other) const noexcept {
    return rows_ == other.rows() && cols_ == other.cols();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  static std::size_t checked_size(int rows, int cols) {
    if (rows < 0 || cols < 0) {
      throw ShapeError("grid dimensions must be non-negative");
    }
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }
  std::size_t index(int r, int c) const noexcept {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c);
  }
  void bounds_check(int r, int c) const {
    if (r < 0 || r >= rows_ || c < 0 || c >= cols_) {
      throw ShapeError("grid index (" + std::to_string(r) + ", " + std::to_string(c) +
                       ") out of range for " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

using Plane = Grid<double>;
using Mask = Grid<std::uint8_t>;

/// Linear-light RGB raster with samples in [0, 1].
using Rgb = std::array<float, 3>;
using Raster = Grid<Rgb>;

template <class A, class B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + ")");
  }
}

/// Rec. 601 luma.
inline Plane to_gray(const Raster& img) {
  Plane out(img.rows(), img.cols());
  auto src = img.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = 0.299 * src[i][0] + 0.587 * src[i][1] + 0.114 * src[i][2];
  }
  return out;
}

}  // namespace mlstereo
