//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <new>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hbgsa/error.hpp"

namespace hbgsa::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape &shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t { 1 },
                         std::multiplies<> {});
}

std::string shape_str(const Shape &shape);

// Storage aligned to a full AVX-512 vector. Vectorized reductions peel a
// different number of leading elements depending on the start address, so
// a fixed alignment is what makes results independent of heap layout.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign { 64 };

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U> &) noexcept { }

  T *allocate(std::size_t n) {
    return static_cast<T *>(::operator new(n * sizeof(T), kAlign));
  }
  void deallocate(T *p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <class U>
  bool operator==(const AlignedAllocator<U> &) const noexcept { return true; }
};

// Dense row-major n-dimensional array. Rank-0 tensors are not used; scalars
// are shape {1}.
template <class T>
class Tensor {
public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T(0))
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) { }

  Tensor(Shape shape, const std::vector<T> &data)
      : shape_(std::move(shape)), data_(data.begin(), data.end()) {
    if (data_.size() != shape_size(shape_))
      throw ShapeError("tensor data length " + std::to_string(data_.size())
                       + " does not match shape " + shape_str(shape_));
  }

  static Tensor scalar(T v) { return Tensor({ 1 }, std::vector<T> { v }); }

  const Shape &shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T *data() noexcept { return data_.data(); }
  const T *data() const noexcept { return data_.data(); }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  T &operator[](std::size_t i) { return data_[i]; }
  const T &operator[](std::size_t i) const { return data_[i]; }

  // Rank-2 element access.
  T &at(std::size_t r, std::size_t c) { return data_[r * shape_.back() + c]; }
  const T &at(std::size_t r, std::size_t c) const {
    return data_[r * shape_.back() + c];
  }

  // Number of rows when viewed as a [rows, last_dim] matrix.
  std::size_t rows() const { return shape_.empty() ? 0 : size() / cols(); }
  std::size_t cols() const { return shape_.empty() ? 0 : shape_.back(); }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  Tensor reshaped(Shape shape) const & {
    if (shape_size(shape) != data_.size())
      throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = data_;
    return t;
  }

  template <class U>
  Tensor<U> cast() const {
    const std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, out);
  }

  bool operator==(const Tensor &other) const = default;

private:
  Shape shape_;
  std::vector<T, AlignedAllocator<T>> data_;
};

}  // namespace hbgsa::nn
