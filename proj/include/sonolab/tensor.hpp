#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "sonolab/error.hpp"

namespace sonolab {

/// Axis labels. Raw data is (frame, tx, el, sample); images are
/// (frame, z, x) or (frame, rho, theta).
enum class Axis { frame, tx, el, sample, z, x, rho, theta, particle, channel, pixel, batch };

std::string_view axis_name(Axis axis);
Axis axis_from_name(std::string_view name);
std::string axes_to_string(std::span<const Axis> axes);
std::vector<Axis> axes_from_string(std::string_view text);

/// Dense row-major array with labelled axes.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  Tensor(std::vector<Axis> axes, std::vector<std::size_t> shape, T fill = T{})
      : axes_(std::move(axes)), shape_(std::move(shape)) {
    check_layout();
    data_.assign(element_count(shape_), fill);
  }

  Tensor(std::vector<Axis> axes, std::vector<std::size_t> shape, std::vector<T> data)
      : axes_(std::move(axes)), shape_(std::move(shape)), data_(std::move(data)) {
    check_layout();
    if (data_.size() != element_count(shape_)) {
      throw Error(ErrorKind::schema, "tensor data size does not match its shape");
    }
  }

  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  const std::vector<Axis>& axes() const noexcept { return axes_; }
  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t extent(std::size_t dim) const { return shape_.at(dim); }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  T& operator[](std::size_t flat) { return data_[flat]; }
  const T& operator[](std::size_t flat) const { return data_[flat]; }

  template <typename... I>
  T& operator()(I... idx) {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }
  template <typename... I>
  const T& operator()(I... idx) const {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }

  std::size_t offset(std::initializer_list<std::size_t> idx) const {
    std::size_t flat = 0;
    std::size_t dim = 0;
    for (std::size_t i : idx) {
      flat = flat * shape_[dim] + i;
      ++dim;
    }
    return flat;
  }

  /// Number of elements in one slice along axis 0.
  std::size_t slice_size() const { return rank() == 0 ? 0 : data_.size() / shape_[0]; }

  /// Gathers the given indices along axis 0.
  Tensor take(std::span<const std::size_t> indices) const {
    const std::size_t stride = slice_size();
    std::vector<T> out;
    out.reserve(indices.size() * stride);
    for (std::size_t i : indices) {
      if (i >= shape_.at(0)) {
        throw Error(ErrorKind::bounds, "index " + std::to_string(i) + " out of range for axis " +
                                           std::string(axis_name(axes_[0])) + " of extent " +
                                           std::to_string(shape_[0]));
      }
      out.insert(out.end(), data_.begin() + static_cast<std::ptrdiff_t>(i * stride),
                 data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * stride));
    }
    auto shape = shape_;
    shape[0] = indices.size();
    return Tensor(axes_, std::move(shape), std::move(out));
  }

  Tensor reshaped(std::vector<Axis> axes, std::vector<std::size_t> shape) const& {
    return Tensor(std::move(axes), std::move(shape), data_);
  }
  Tensor reshaped(std::vector<Axis> axes, std::vector<std::size_t> shape) && {
    return Tensor(std::move(axes), std::move(shape), std::move(data_));
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  static std::size_t element_count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
  }

  void check_layout() const {
    if (axes_.size() != shape_.size()) {
      throw Error(ErrorKind::schema, "tensor axes length does not match rank");
    }
    for (std::size_t e : shape_) {
      if (e == 0) throw Error(ErrorKind::schema, "tensor extents must be >= 1");
    }
  }

  std::vector<Axis> axes_;
  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

using Complex = std::complex<double>;
using RealTensor = Tensor<double>;
using ComplexTensor = Tensor<Complex>;

/// What flows between pipeline operations.
using TensorFrame = std::variant<RealTensor, ComplexTensor>;

const std::vector<Axis>& axes_of(const TensorFrame& frame);
const std::vector<std::size_t>& shape_of(const TensorFrame& frame);
bool is_complex(const TensorFrame& frame);
std::string shape_to_string(std::span<const std::size_t> shape);

}  // namespace sonolab
