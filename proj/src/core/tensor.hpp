#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

#include "core/errors.hpp"

namespace d3fcnn {

using Shape = std::vector<std::int64_t>;

/// Dense N-dimensional array, rank <= 5, row-major flat storage.
///
/// Axis order convention throughout the library: batch x height x width x
/// time x channel, with the channel axis contiguous. Strides are always
/// derived from the shape, never stored.
///
/// Tensors are value types; once handed to another execution context they are
/// treated as immutable (concurrent reads only).
template <typename T>
class Tensor {
public:
  static constexpr int kMaxRank = 5;

  Tensor() = default;

  /// Fill constructor.
  explicit Tensor(Shape shape, T fill = T(0))
      : shape_(std::move(shape)), data_(checked_size(shape_), fill) {}

  /// Adopt an existing buffer; its length must match the shape.
  Tensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (std::int64_t(data_.size()) != checked_size(shape_))
      throw ShapeError("Tensor: buffer length does not match shape volume");
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, T value) { return Tensor(std::move(shape), value); }

  int rank() const { return int(shape_.size()); }
  const Shape& shape() const { return shape_; }
  std::int64_t extent(int axis) const { return shape_.at(size_t(axis)); }
  std::int64_t size() const { return std::int64_t(data_.size()); }
  bool empty() const { return data_.empty(); }

  /// Row-major strides derived from the shape.
  Shape strides() const {
    Shape s(shape_.size());
    std::int64_t acc = 1;
    for (int d = rank() - 1; d >= 0; --d) {
      s[size_t(d)] = acc;
      acc *= shape_[size_t(d)];
    }
    return s;
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> flat() { return {data_.data(), data_.size()}; }
  std::span<const T> flat() const { return {data_.data(), data_.size()}; }

  T& operator[](std::int64_t i) { return data_[size_t(i)]; }
  const T& operator[](std::int64_t i) const { return data_[size_t(i)]; }

  /// Bounds-checked multi-index access; index count must equal the rank.
  template <typename... I>
  T& at(I... idx) {
    return data_[size_t(flat_index({std::int64_t(idx)...}))];
  }
  template <typename... I>
  const T& at(I... idx) const {
    return data_[size_t(flat_index({std::int64_t(idx)...}))];
  }

  std::int64_t flat_index(std::initializer_list<std::int64_t> idx) const {
    if (int(idx.size()) != rank())
      throw ShapeError("Tensor::at: index count does not match rank");
    std::int64_t flat = 0;
    int d = 0;
    for (std::int64_t i : idx) {
      if (i < 0 || i >= shape_[size_t(d)])
        throw ShapeError("Tensor::at: index out of range");
      flat = flat * shape_[size_t(d)] + i;
      ++d;
    }
    return flat;
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  /// Shape change that preserves the flat buffer order.
  Tensor reshaped(Shape new_shape) const& {
    Tensor r = *this;
    return std::move(r).reshaped(std::move(new_shape));
  }
  Tensor reshaped(Shape new_shape) && {
    if (checked_size(new_shape) != size())
      throw ShapeError("reshape: element count mismatch");
    shape_ = std::move(new_shape);
    return std::move(*this);
  }

  struct Range {
    std::int64_t start = 0;
    std::int64_t len = 0;
  };

  /// Copy out a contiguous sub-block, one range per axis.
  Tensor slice(const std::vector<Range>& ranges) const;

private:
  static std::int64_t checked_size(const Shape& shape) {
    if (int(shape.size()) > kMaxRank)
      throw ShapeError("Tensor: rank exceeds " + std::to_string(kMaxRank));
    std::int64_t n = 1;
    for (std::int64_t e : shape) {
      if (e < 1) throw ShapeError("Tensor: extents must be positive");
      n *= e;
    }
    return n;
  }

  Shape shape_;
  std::vector<T> data_;
};

template <typename T>
using TensorPtr = std::shared_ptr<const Tensor<T>>;

template <typename T>
TensorPtr<T> share(Tensor<T>&& t) {
  return std::make_shared<const Tensor<T>>(std::move(t));
}

// ---- elementwise -----------------------------------------------------------

template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T s);
/// max(a_i, s) elementwise.
template <typename T> Tensor<T> cwise_max(const Tensor<T>& a, T s);

// ---- reductions ------------------------------------------------------------

/// Sum over the given axes (unordered, deduplicated); reduced axes are
/// removed from the shape. Accumulation is in double regardless of T.
template <typename T> Tensor<T> reduce_sum(const Tensor<T>& x, std::vector<int> axes);
template <typename T> Tensor<T> reduce_mean(const Tensor<T>& x, std::vector<int> axes);
template <typename T> Tensor<T> reduce_max(const Tensor<T>& x, std::vector<int> axes);

/// Index of the maximal element along one axis, ties broken toward the
/// lowest index. The axis is removed from the result shape.
template <typename T>
Tensor<std::int64_t> argmax(const Tensor<T>& x, int axis);

// ---- conversions -----------------------------------------------------------

template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& x) {
  std::vector<To> out(size_t(x.size()));
  for (std::int64_t i = 0; i < x.size(); ++i) out[size_t(i)] = To(x[i]);
  return Tensor<To>(x.shape(), std::move(out));
}

} // namespace d3fcnn
