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

#include "tgraph/tensor.h"

#include <cstring>

namespace tgraph {

std::size_t dtype_size(DType dtype) {
  return dtype == DType::kFloat32 ? sizeof(float) : sizeof(double);
}

std::string_view dtype_name(DType dtype) {
  return dtype == DType::kFloat32 ? "f32" : "f64";
}

std::optional<DType> parse_dtype(std::string_view name) {
  if (name == "f32" || name == "float32") return DType::kFloat32;
  if (name == "f64" || name == "float64") return DType::kFloat64;
  return std::nullopt;
}

int64_t num_elements(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, DType dtype) { resize(shape, dtype); }

Tensor Tensor::from_values(Shape shape, DType dtype,
                           std::span<const double> values) {
  if (static_cast<int64_t>(values.size()) != num_elements(shape)) {
    throw ShapeError("expected " + std::to_string(num_elements(shape)) +
                     " values for shape " + shape_to_string(shape) + ", got " +
                     std::to_string(values.size()));
  }
  Tensor t(std::move(shape), dtype);
  for (std::size_t i = 0; i < values.size(); ++i) {
    t.set(static_cast<int64_t>(i), values[i]);
  }
  return t;
}

Tensor Tensor::scalar(double value, DType dtype) {
  return from_values({}, dtype, std::span<const double>(&value, 1));
}

std::size_t Tensor::capacity_bytes() const {
  return f32_.capacity() * sizeof(float) + f64_.capacity() * sizeof(double);
}

void Tensor::resize(const Shape& shape, DType dtype) {
  for (int64_t d : shape) {
    if (d < 0) throw ShapeError("negative extent in " + shape_to_string(shape));
  }
  const auto n = static_cast<std::size_t>(num_elements(shape));
  shape_ = shape;
  dtype_ = dtype;
  materialized_ = true;
  if (dtype == DType::kFloat32) {
    f32_.resize(n);
  } else {
    f64_.resize(n);
  }
}

void Tensor::release() {
  shape_.clear();
  materialized_ = false;
  std::vector<float>().swap(f32_);
  std::vector<double>().swap(f64_);
}

std::vector<double> Tensor::to_vector() const {
  std::vector<double> out(static_cast<std::size_t>(numel()));
  for (int64_t i = 0; i < numel(); ++i) out[i] = get(i);
  return out;
}

double Tensor::scalar_value() const {
  if (numel() != 1) {
    throw ShapeError("tensor '" + name_ + "' of shape " +
                     shape_to_string(shape_) + " is not a scalar");
  }
  return get(0);
}

double Tensor::get(int64_t i) const {
  return dtype_ == DType::kFloat32 ? static_cast<double>(f32_[i]) : f64_[i];
}

void Tensor::set(int64_t i, double v) {
  if (dtype_ == DType::kFloat32) {
    f32_[i] = static_cast<float>(v);
  } else {
    f64_[i] = v;
  }
}

void Tensor::fill(double v) {
  for (int64_t i = 0; i < numel(); ++i) set(i, v);
}

bool Tensor::identical(const Tensor& other) const {
  if (materialized_ != other.materialized_ || shape_ != other.shape_ ||
      dtype_ != other.dtype_) {
    return false;
  }
  if (dtype_ == DType::kFloat32) {
    return std::memcmp(f32_.data(), other.f32_.data(), nbytes()) == 0;
  }
  return std::memcmp(f64_.data(), other.f64_.data(), nbytes()) == 0;
}

}  // namespace tgraph
