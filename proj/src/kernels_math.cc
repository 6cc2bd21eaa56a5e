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

#include <cmath>
#include <string>

#include "tgraph/errors.h"
#include "tgraph/kernels.h"

namespace tgraph {

namespace {

std::vector<Shape> same_as_input(std::span<const Shape> in,
                                 const OperatorDef&) {
  return {in[0]};
}

std::vector<Shape> scalar_shape(std::span<const Shape>, const OperatorDef&) {
  return {Shape{}};
}

// Equal shapes, or one side rank-0.
std::vector<Shape> broadcast_shape(std::span<const Shape> in,
                                   const OperatorDef&) {
  if (in[0] == in[1]) return {in[0]};
  if (in[0].empty()) return {in[1]};
  if (in[1].empty()) return {in[0]};
  throw ShapeError("incompatible shapes " + shape_to_string(in[0]) + " and " +
                   shape_to_string(in[1]));
}

void check_matrix(const Shape& s, const char* what) {
  if (s.size() != 2) {
    throw ShapeError(std::string(what) + " must be rank 2, got " +
                     shape_to_string(s));
  }
}

std::vector<Shape> matmul_shape(std::span<const Shape> in,
                                const OperatorDef&) {
  check_matrix(in[0], "left operand");
  check_matrix(in[1], "right operand");
  if (in[0][1] != in[1][0]) {
    throw ShapeError("inner extents differ: " + shape_to_string(in[0]) +
                     " x " + shape_to_string(in[1]));
  }
  return {Shape{in[0][0], in[1][1]}};
}

template <typename T, typename F>
void unary(KernelContext& ctx, F f) {
  auto x = ctx.input(0).data<T>();
  auto y = ctx.output(0).data<T>();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
}

template <typename F>
ForwardFn unary_kernel(F f) {
  return [f](KernelContext& ctx) {
    visit_dtype(ctx.input(0).dtype(),
                [&]<typename T>() { unary<T>(ctx, f); });
  };
}

template <typename F>
ForwardFn binary_kernel(F f) {
  return [f](KernelContext& ctx) {
    visit_dtype(ctx.input(0).dtype(), [&]<typename T>() {
      auto a = ctx.input(0).data<T>();
      auto b = ctx.input(1).data<T>();
      auto y = ctx.output(0).data<T>();
      bool a_scalar = ctx.input(0).shape().empty();
      bool b_scalar = ctx.input(1).shape().empty();
      for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = f(a[a_scalar ? 0 : i], b[b_scalar ? 0 : i]);
      }
    });
  };
}

// Gradient helpers of the form dx = dy * g(y).
template <typename F>
ForwardFn output_grad_kernel(F f) {
  return [f](KernelContext& ctx) {
    visit_dtype(ctx.input(0).dtype(), [&]<typename T>() {
      auto y = ctx.input(0).data<T>();
      auto dy = ctx.input(1).data<T>();
      auto dx = ctx.output(0).data<T>();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = f(y[i], dy[i]);
    });
  };
}

std::vector<Shape> pair_same_shape(std::span<const Shape> in,
                                   const OperatorDef&) {
  if (in[0] != in[1]) {
    throw ShapeError("expected equal shapes, got " + shape_to_string(in[0]) +
                     " and " + shape_to_string(in[1]));
  }
  return {in[0]};
}

// ---------------------------------------------------------------------------
// Fillers

std::vector<Shape> fill_shape(std::span<const Shape> in,
                              const OperatorDef& op) {
  if (auto shape = op.ints_arg("shape")) {
    for (int64_t d : *shape) {
      if (d < 0) throw ShapeError("negative extent in shape argument");
    }
    return {*shape};
  }
  if (!in.empty()) return {in[0]};
  return {Shape{}};
}

DType fill_dtype(std::span<const DType> in, const OperatorDef& op) {
  if (op.has_arg("dtype")) {
    auto parsed = parse_dtype(op.string_arg("dtype", "f64"));
    if (!parsed) {
      throw GraphError("unknown dtype '" + op.string_arg("dtype", "") +
                       "' in " + op.op_type);
    }
    return *parsed;
  }
  return in.empty() ? DType::kFloat64 : in[0];
}

void validate_fill(const OperatorDef& op) {
  if (op.has_arg("dtype") && !parse_dtype(op.string_arg("dtype", ""))) {
    throw GraphError("unknown dtype '" + op.string_arg("dtype", "") + "' in " +
                     op.op_type + " '" + op.anchor + "'");
  }
  if (auto shape = op.ints_arg("shape")) {
    for (int64_t d : *shape) {
      if (d < 0) throw GraphError("negative extent in " + op.op_type);
    }
  } else if (op.has_arg("shape")) {
    throw GraphError("shape argument of " + op.op_type +
                     " must be an integer list");
  }
}

KernelSpec filler(std::string type, ForwardFn forward) {
  KernelSpec spec;
  spec.op_type = std::move(type);
  spec.min_inputs = 0;
  spec.max_inputs = 1;
  spec.infer_shape = fill_shape;
  spec.output_dtype = fill_dtype;
  spec.validate = validate_fill;
  spec.forward = std::move(forward);
  return spec;
}

void fill_constant(KernelContext& ctx) {
  ctx.output(0).fill(ctx.op().real_arg("value", 0.0));
}

void fill_uniform(KernelContext& ctx) {
  double low = ctx.op().real_arg("low", 0.0);
  double high = ctx.op().real_arg("high", 1.0);
  Tensor& y = ctx.output(0);
  CounterRng rng = ctx.random(static_cast<uint64_t>(y.numel()));
  for (int64_t i = 0; i < y.numel(); ++i) {
    y.set(i, low + (high - low) * rng.uniform());
  }
}

void fill_gaussian(KernelContext& ctx) {
  double mean = ctx.op().real_arg("mean", 0.0);
  double stddev = ctx.op().real_arg("std", 1.0);
  Tensor& y = ctx.output(0);
  CounterRng rng = ctx.random(2 * static_cast<uint64_t>(y.numel()));
  for (int64_t i = 0; i < y.numel(); ++i) {
    y.set(i, mean + stddev * rng.gaussian());
  }
}

// ---------------------------------------------------------------------------
// Dropout

bool train_phase(const OperatorDef& op) {
  std::string phase = op.string_arg("phase", "train");
  if (phase == "train") return true;
  if (phase == "test") return false;
  throw GraphError("unknown dropout phase '" + phase + "' in '" + op.anchor +
                   "'");
}

double dropout_prob(const OperatorDef& op) {
  double prob = op.real_arg("prob", 0.5);
  if (!(prob >= 0.0 && prob < 1.0)) {
    throw GraphError("dropout prob must lie in [0, 1), got " +
                     std::to_string(prob) + " in '" + op.anchor + "'");
  }
  return prob;
}

void validate_dropout(const OperatorDef& op) {
  dropout_prob(op);
  train_phase(op);
}

void dropout_forward(KernelContext& ctx) {
  const OperatorDef& op = ctx.op();
  double prob = dropout_prob(op);
  const Tensor& x = ctx.input(0);
  Tensor& y = ctx.output(0);
  if (!train_phase(op)) {
    visit_dtype(x.dtype(), [&]<typename T>() {
      unary<T>(ctx, [](T v) { return v; });
    });
    return;
  }
  Tensor& mask = ctx.stash("mask");
  mask.resize(x.shape(), x.dtype());
  CounterRng rng = ctx.random(static_cast<uint64_t>(x.numel()));
  double keep = 1.0 - prob;
  visit_dtype(x.dtype(), [&]<typename T>() {
    auto m = mask.data<T>();
    auto xs = x.data<T>();
    auto ys = y.data<T>();
    T scale = static_cast<T>(1.0 / keep);
    for (std::size_t i = 0; i < m.size(); ++i) {
      m[i] = rng.uniform() < keep ? scale : T(0);
      ys[i] = xs[i] * m[i];
    }
  });
}

void dropout_backward(KernelContext& ctx) {
  const OperatorDef& op = ctx.op();
  const Tensor& dy = ctx.input(0);
  Tensor& dx = ctx.output(0);
  if (!train_phase(op)) {
    visit_dtype(dy.dtype(), [&]<typename T>() {
      unary<T>(ctx, [](T v) { return v; });
    });
    return;
  }
  const Tensor& mask = ctx.fetch_stash("mask");
  if (mask.shape() != dy.shape() || mask.dtype() != dy.dtype()) {
    throw ShapeError("stashed mask " + shape_to_string(mask.shape()) +
                     " does not match gradient " +
                     shape_to_string(dy.shape()) + " in '" + op.anchor + "'");
  }
  visit_dtype(dy.dtype(), [&]<typename T>() {
    auto m = mask.data<T>();
    auto g = dy.data<T>();
    auto out = dx.data<T>();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = g[i] * m[i];
  });
}

// ---------------------------------------------------------------------------
// Matrix product and its gradient

template <typename T>
void gemm(std::span<const T> a, std::span<const T> b, std::span<T> c,
          int64_t m, int64_t k, int64_t n, bool trans_a, bool trans_b) {
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      T acc = 0;
      for (int64_t p = 0; p < k; ++p) {
        T av = trans_a ? a[p * m + i] : a[i * k + p];
        T bv = trans_b ? b[j * k + p] : b[p * n + j];
        acc += av * bv;
      }
      c[i * n + j] = acc;
    }
  }
}

void matmul_forward(KernelContext& ctx) {
  const Tensor& a = ctx.input(0);
  const Tensor& b = ctx.input(1);
  int64_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  visit_dtype(a.dtype(), [&]<typename T>() {
    gemm<T>(a.data<T>(), b.data<T>(), ctx.output(0).data<T>(), m, k, n, false,
            false);
  });
}

std::vector<Shape> matmul_grad_shape(std::span<const Shape> in,
                                     const OperatorDef& op) {
  Shape c = matmul_shape(in.first(2), op)[0];
  if (in[2] != c) {
    throw ShapeError("output gradient " + shape_to_string(in[2]) +
                     " does not match product shape " + shape_to_string(c));
  }
  return {in[0], in[1]};
}

// dA = dC * B^T, dB = A^T * dC.
void matmul_backward(KernelContext& ctx) {
  const Tensor& a = ctx.input(0);
  const Tensor& b = ctx.input(1);
  const Tensor& dc = ctx.input(2);
  int64_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  visit_dtype(a.dtype(), [&]<typename T>() {
    gemm<T>(dc.data<T>(), b.data<T>(), ctx.output(0).data<T>(), m, n, k,
            false, true);
    gemm<T>(a.data<T>(), dc.data<T>(), ctx.output(1).data<T>(), k, m, n, true,
            false);
  });
}

// ---------------------------------------------------------------------------
// Reductions

void reduce_forward(KernelContext& ctx, bool mean) {
  const Tensor& x = ctx.input(0);
  visit_dtype(x.dtype(), [&]<typename T>() {
    T acc = 0;
    for (T v : x.data<T>()) acc += v;
    if (mean && x.numel() > 0) acc /= static_cast<T>(x.numel());
    ctx.output(0).data<T>()[0] = acc;
  });
}

std::vector<Shape> reduce_grad_shape(std::span<const Shape> in,
                                     const OperatorDef&) {
  if (!in[1].empty()) {
    throw ShapeError("reduction gradient must be a scalar, got " +
                     shape_to_string(in[1]));
  }
  return {in[0]};
}

void reduce_backward(KernelContext& ctx, bool mean) {
  const Tensor& x = ctx.input(0);
  visit_dtype(x.dtype(), [&]<typename T>() {
    T v = ctx.input(1).data<T>()[0];
    if (mean && x.numel() > 0) v /= static_cast<T>(x.numel());
    for (T& out : ctx.output(0).data<T>()) out = v;
  });
}

// Sums `g` down to the shape of `like` (equal shapes copy; a rank-0 target
// receives the total).
std::vector<Shape> reduce_like_shape(std::span<const Shape> in,
                                     const OperatorDef&) {
  if (in[0] != in[1] && !in[1].empty()) {
    throw ShapeError("cannot reduce " + shape_to_string(in[0]) + " to " +
                     shape_to_string(in[1]));
  }
  return {in[1]};
}

void reduce_like(KernelContext& ctx) {
  const Tensor& g = ctx.input(0);
  visit_dtype(g.dtype(), [&]<typename T>() {
    auto src = g.data<T>();
    auto dst = ctx.output(0).data<T>();
    if (g.shape() == ctx.input(1).shape()) {
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i];
      return;
    }
    T acc = 0;
    for (T v : src) acc += v;
    dst[0] = acc;
  });
}

KernelSpec make(std::string type, int min_in, int max_in, ShapeFn shape,
                ForwardFn forward) {
  KernelSpec spec;
  spec.op_type = std::move(type);
  spec.min_inputs = min_in;
  spec.max_inputs = max_in;
  spec.infer_shape = std::move(shape);
  spec.forward = std::move(forward);
  return spec;
}

}  // namespace

void register_math_kernels(KernelRegistry& registry) {
  registry.register_kernel(filler("FillConstant", fill_constant));
  registry.register_kernel(filler("FillUniform", fill_uniform));
  registry.register_kernel(filler("FillGaussian", fill_gaussian));

  registry.register_kernel(
      make("Add", 2, 2, broadcast_shape,
           binary_kernel([](auto a, auto b) { return a + b; })));
  registry.register_kernel(
      make("Sub", 2, 2, broadcast_shape,
           binary_kernel([](auto a, auto b) { return a - b; })));
  registry.register_kernel(
      make("Mul", 2, 2, broadcast_shape,
           binary_kernel([](auto a, auto b) { return a * b; })));
  registry.register_kernel(make("MatMul", 2, 2, matmul_shape, matmul_forward));

  registry.register_kernel(make(
      "Sin", 1, 1, same_as_input,
      unary_kernel([](auto v) -> decltype(v) { return std::sin(v); })));
  registry.register_kernel(make(
      "Cos", 1, 1, same_as_input,
      unary_kernel([](auto v) -> decltype(v) { return std::cos(v); })));
  registry.register_kernel(
      make("Square", 1, 1, same_as_input,
           unary_kernel([](auto v) -> decltype(v) { return v * v; })));

  KernelSpec sig = make("Sigmoid", 1, 1, same_as_input,
                        unary_kernel([](auto v) -> decltype(v) {
                          using T = decltype(v);
                          return T(1) / (T(1) + std::exp(-v));
                        }));
  sig.inplace_safe = true;
  registry.register_kernel(std::move(sig));
  KernelSpec tanh_spec = make(
      "Tanh", 1, 1, same_as_input,
      unary_kernel([](auto v) -> decltype(v) { return std::tanh(v); }));
  tanh_spec.inplace_safe = true;
  registry.register_kernel(std::move(tanh_spec));
  KernelSpec relu = make("ReLU", 1, 1, same_as_input,
                         unary_kernel([](auto v) -> decltype(v) {
                           return v > 0 ? v : decltype(v)(0);
                         }));
  relu.inplace_safe = true;
  registry.register_kernel(std::move(relu));
  KernelSpec dropout =
      make("Dropout", 1, 1, same_as_input, dropout_forward);
  dropout.inplace_safe = true;
  dropout.validate = validate_dropout;
  registry.register_kernel(std::move(dropout));

  registry.register_kernel(make(
      "ReduceSum", 1, 1, scalar_shape,
      [](KernelContext& ctx) { reduce_forward(ctx, false); }));
  registry.register_kernel(make(
      "ReduceMean", 1, 1, scalar_shape,
      [](KernelContext& ctx) { reduce_forward(ctx, true); }));

  registry.register_kernel(
      make("Scale", 1, 1, same_as_input, [](KernelContext& ctx) {
        double alpha = ctx.op().real_arg("alpha", 1.0);
        double beta = ctx.op().real_arg("beta", 0.0);
        visit_dtype(ctx.input(0).dtype(), [&]<typename T>() {
          T a = static_cast<T>(alpha), b = static_cast<T>(beta);
          unary<T>(ctx, [a, b](T v) { return a * v + b; });
        });
      }));
  registry.register_kernel(
      make("Copy", 1, 1, same_as_input,
           unary_kernel([](auto v) -> decltype(v) { return v; })));

  // Gradient helpers.
  registry.register_kernel(
      make("ReduceLike", 2, 2, reduce_like_shape, reduce_like));
  KernelSpec mm_grad =
      make("MatMulGradient", 3, 3, matmul_grad_shape, matmul_backward);
  mm_grad.min_outputs = mm_grad.max_outputs = 2;
  registry.register_kernel(std::move(mm_grad));
  registry.register_kernel(make(
      "SigmoidGradient", 2, 2, pair_same_shape,
      output_grad_kernel([](auto y, auto dy) -> decltype(y) {
        using T = decltype(y);
        return dy * y * (T(1) - y);
      })));
  registry.register_kernel(make(
      "TanhGradient", 2, 2, pair_same_shape,
      output_grad_kernel([](auto y, auto dy) -> decltype(y) {
        using T = decltype(y);
        return dy * (T(1) - y * y);
      })));
  registry.register_kernel(make(
      "ReLUGradient", 2, 2, pair_same_shape,
      output_grad_kernel([](auto y, auto dy) -> decltype(y) {
        return y > 0 ? dy : decltype(y)(0);
      })));
  KernelSpec drop_grad =
      make("DropoutGradient", 1, 1, same_as_input, dropout_backward);
  drop_grad.validate = validate_dropout;
  registry.register_kernel(std::move(drop_grad));
  registry.register_kernel(make(
      "ReduceSumGradient", 2, 2, reduce_grad_shape,
      [](KernelContext& ctx) { reduce_backward(ctx, false); }));
  registry.register_kernel(make(
      "ReduceMeanGradient", 2, 2, reduce_grad_shape,
      [](KernelContext& ctx) { reduce_backward(ctx, true); }));
}

}  // namespace tgraph
