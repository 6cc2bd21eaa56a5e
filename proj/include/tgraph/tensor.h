/* Copyright 2026 The tgraph Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef TGRAPH_TENSOR_H_
#define TGRAPH_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tgraph/errors.h"

namespace tgraph {

enum class DType : uint8_t { kFloat32 = 0, kFloat64 = 1 };

std::size_t dtype_size(DType dtype);
std::string_view dtype_name(DType dtype);
std::optional<DType> parse_dtype(std::string_view name);

// Row-major extents. Empty means scalar.
using Shape = std::vector<int64_t>;

int64_t num_elements(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Host tensor: name, shape, element type and a flat buffer of
// num_elements(shape) values. A default-constructed tensor holds no data.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, DType dtype);

  static Tensor from_values(Shape shape, DType dtype,
                            std::span<const double> values);
  static Tensor scalar(double value, DType dtype = DType::kFloat64);

  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

  bool materialized() const { return materialized_; }
  const Shape& shape() const { return shape_; }
  DType dtype() const { return dtype_; }
  int64_t numel() const { return num_elements(shape_); }
  std::size_t nbytes() const {
    return static_cast<std::size_t>(numel()) * dtype_size(dtype_);
  }
  // Bytes actually reserved, which may exceed nbytes() after shrinking.
  std::size_t capacity_bytes() const;

  // Reshapes in place. Storage is reused when large enough; element values
  // are kept when the shape and dtype are unchanged.
  void resize(const Shape& shape, DType dtype);
  void release();

  template <typename T>
  std::span<T> data();
  template <typename T>
  std::span<const T> data() const;

  // Values widened to double.
  std::vector<double> to_vector() const;
  double scalar_value() const;
  // Element i widened to double / narrowed from double.
  double get(int64_t i) const;
  void set(int64_t i, double v);
  void fill(double v);

  // Same shape, dtype and bit pattern.
  bool identical(const Tensor& other) const;

 private:
  std::string name_;
  Shape shape_;
  DType dtype_ = DType::kFloat64;
  bool materialized_ = false;
  std::vector<float> f32_;
  std::vector<double> f64_;
};

template <>
inline std::span<float> Tensor::data<float>() {
  return {f32_.data(), static_cast<std::size_t>(numel())};
}
template <>
inline std::span<double> Tensor::data<double>() {
  return {f64_.data(), static_cast<std::size_t>(numel())};
}
template <>
inline std::span<const float> Tensor::data<float>() const {
  return {f32_.data(), static_cast<std::size_t>(numel())};
}
template <>
inline std::span<const double> Tensor::data<double>() const {
  return {f64_.data(), static_cast<std::size_t>(numel())};
}

// Calls fn.template operator()<T>() with T the C++ type for `dtype`.
template <typename F>
decltype(auto) visit_dtype(DType dtype, F&& fn) {
  if (dtype == DType::kFloat32) return fn.template operator()<float>();
  return fn.template operator()<double>();
}

}  // namespace tgraph

#endif  // TGRAPH_TENSOR_H_
