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

#include "tgraph/updaters.h"

#include <charconv>
#include <cmath>

#include "tgraph/errors.h"
#include "tgraph/kernels.h"

namespace tgraph {

namespace {

std::vector<Shape> update_shape(std::span<const Shape> in,
                                const OperatorDef& op) {
  if (in[0] != in[1]) {
    throw ShapeError("weight " + shape_to_string(in[0]) +
                     " and gradient " + shape_to_string(in[1]) +
                     " differ for '" + op.inputs[0] + "'");
  }
  if (num_elements(in[2]) != 1) {
    throw ShapeError("learning rate must hold one value, got " +
                     shape_to_string(in[2]));
  }
  return {in[0]};
}

// Slot tensor with W's shape and dtype, zero-filled when absent or stale.
Tensor& slot(KernelContext& ctx, std::string_view name, const Tensor& like) {
  Tensor& s = ctx.stash(name);
  if (!s.materialized() || s.shape() != like.shape() ||
      s.dtype() != like.dtype()) {
    s.resize(like.shape(), like.dtype());
    s.fill(0.0);
  }
  return s;
}

struct Hyper {
  double alpha;
  double decay;
};

Hyper hyper(KernelContext& ctx) {
  const OperatorDef& op = ctx.op();
  double lr = ctx.input(2).get(0);
  return {lr * op.real_arg("lr_mult", 1.0),
          op.real_arg("weight_decay", 0.0) * op.real_arg("decay_mult", 1.0)};
}

void momentum_update(KernelContext& ctx) {
  const Tensor& g = ctx.input(1);
  Tensor& w = ctx.output(0);
  Hyper h = hyper(ctx);
  double mu = ctx.op().real_arg("momentum", 0.9);
  Tensor& v = slot(ctx, "velocity", w);
  visit_dtype(w.dtype(), [&]<typename T>() {
    auto ws = w.data<T>();
    auto gs = g.data<T>();
    auto vs = v.data<T>();
    for (std::size_t i = 0; i < ws.size(); ++i) {
      double gh = static_cast<double>(gs[i]) + h.decay * ws[i];
      double vi = mu * vs[i] + h.alpha * gh;
      vs[i] = static_cast<T>(vi);
      ws[i] = static_cast<T>(ws[i] - vi);
    }
  });
}

void rmsprop_update(KernelContext& ctx) {
  const Tensor& g = ctx.input(1);
  Tensor& w = ctx.output(0);
  Hyper h = hyper(ctx);
  double rho = ctx.op().real_arg("rho", 0.9);
  double eps = ctx.op().real_arg("eps", 1e-8);
  Tensor& ms = slot(ctx, "ms", w);
  visit_dtype(w.dtype(), [&]<typename T>() {
    auto ws = w.data<T>();
    auto gs = g.data<T>();
    auto m = ms.data<T>();
    for (std::size_t i = 0; i < ws.size(); ++i) {
      double gh = static_cast<double>(gs[i]) + h.decay * ws[i];
      double mi = rho * m[i] + (1.0 - rho) * gh * gh;
      m[i] = static_cast<T>(mi);
      if (gh != 0.0) {
        ws[i] = static_cast<T>(ws[i] - h.alpha * gh / (std::sqrt(mi) + eps));
      }
    }
  });
}

void adam_update(KernelContext& ctx) {
  const Tensor& g = ctx.input(1);
  Tensor& w = ctx.output(0);
  Hyper h = hyper(ctx);
  double b1 = ctx.op().real_arg("beta1", 0.9);
  double b2 = ctx.op().real_arg("beta2", 0.999);
  double eps = ctx.op().real_arg("eps", 1e-8);
  Tensor& m = slot(ctx, "m", w);
  Tensor& v = slot(ctx, "v", w);
  Tensor& t = ctx.stash("t");
  if (!t.materialized() || t.numel() != 1) {
    t.resize({}, DType::kFloat64);
    t.fill(0.0);
  }
  double step = t.get(0) + 1.0;
  t.set(0, step);
  double correction =
      std::sqrt(1.0 - std::pow(b2, step)) / (1.0 - std::pow(b1, step));
  visit_dtype(w.dtype(), [&]<typename T>() {
    auto ws = w.data<T>();
    auto gs = g.data<T>();
    auto ms = m.data<T>();
    auto vs = v.data<T>();
    for (std::size_t i = 0; i < ws.size(); ++i) {
      double gh = static_cast<double>(gs[i]) + h.decay * ws[i];
      double mi = b1 * ms[i] + (1.0 - b1) * gh;
      double vi = b2 * vs[i] + (1.0 - b2) * gh * gh;
      ms[i] = static_cast<T>(mi);
      vs[i] = static_cast<T>(vi);
      if (mi != 0.0) {
        ws[i] = static_cast<T>(ws[i] - h.alpha * correction * mi /
                                           (std::sqrt(vi) + eps));
      }
    }
  });
}

KernelSpec update_kernel(std::string_view type, ForwardFn forward) {
  KernelSpec spec;
  spec.op_type = std::string(type);
  spec.min_inputs = spec.max_inputs = 3;
  spec.infer_shape = update_shape;
  spec.forward = std::move(forward);
  spec.same_dtype_inputs = 2;
  return spec;
}

double parse_real(std::string_view s, std::string_view what) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error("bad " + std::string(what) + " '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string_view update_op_type(UpdateRule rule) {
  switch (rule) {
    case UpdateRule::kMomentum:
      return "MomentumSGDUpdate";
    case UpdateRule::kRMSProp:
      return "RMSPropUpdate";
    case UpdateRule::kAdam:
      return "AdamUpdate";
  }
  return "";
}

GraphDef build_update_graph(const UpdaterSpec& spec) {
  if (spec.pairs.empty()) {
    throw GraphError("updater has no (weight, gradient) pairs");
  }
  GraphDef g;
  g.name = "update";
  g.optimized = true;
  for (const auto& pair : spec.pairs) {
    OperatorDef op;
    op.op_type = std::string(update_op_type(spec.rule));
    op.inputs = {pair.weight, pair.grad, spec.lr_tensor};
    op.outputs = {pair.weight};
    op.anchor = pair.weight;
    op.set_arg("lr_mult", pair.lr_mult);
    op.set_arg("decay_mult", pair.decay_mult);
    op.set_arg("weight_decay", spec.weight_decay);
    switch (spec.rule) {
      case UpdateRule::kMomentum:
        op.set_arg("momentum", spec.momentum);
        break;
      case UpdateRule::kRMSProp:
        op.set_arg("rho", spec.rho);
        op.set_arg("eps", spec.eps);
        break;
      case UpdateRule::kAdam:
        op.set_arg("beta1", spec.beta1);
        op.set_arg("beta2", spec.beta2);
        op.set_arg("eps", spec.eps);
        break;
    }
    g.targets.push_back(pair.weight);
    g.ops.push_back(std::move(op));
  }
  return g;
}

void register_update_kernels(KernelRegistry& registry) {
  registry.register_kernel(
      update_kernel(update_op_type(UpdateRule::kMomentum), momentum_update));
  registry.register_kernel(
      update_kernel(update_op_type(UpdateRule::kRMSProp), rmsprop_update));
  registry.register_kernel(
      update_kernel(update_op_type(UpdateRule::kAdam), adam_update));
}

void initialize_learning_rate(Workspace& ws, const UpdaterSpec& spec) {
  if (!ws.has(spec.lr_tensor)) {
    ws.feed(spec.lr_tensor, Tensor::scalar(spec.base_lr));
  }
}

void set_learning_rate(Workspace& ws, const TensorName& lr_tensor,
                       double value) {
  Tensor* t = ws.find(lr_tensor);
  if (!t) {
    throw ExecutionError("learning-rate tensor '" + lr_tensor +
                         "' does not exist");
  }
  t->fill(value);
}

double LrPolicy::rate(double base, int64_t iter) const {
  switch (kind) {
    case LrPolicyKind::kFixed:
      return base;
    case LrPolicyKind::kStep:
      return base * std::pow(gamma, static_cast<double>(iter / stepsize));
    case LrPolicyKind::kExp:
      return base * std::pow(gamma, static_cast<double>(iter));
  }
  return base;
}

LrPolicy LrPolicy::parse(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t colon = text.find(':', start);
    parts.push_back(text.substr(start, colon - start));
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  LrPolicy policy;
  if (parts[0] == "fixed" && parts.size() == 1) return policy;
  if (parts[0] == "step" && parts.size() == 3) {
    policy.kind = LrPolicyKind::kStep;
    policy.gamma = parse_real(parts[1], "gamma");
    double stepsize = parse_real(parts[2], "stepsize");
    if (stepsize < 1 || stepsize != std::floor(stepsize)) {
      throw Error("stepsize must be a positive integer");
    }
    policy.stepsize = static_cast<int64_t>(stepsize);
    return policy;
  }
  if (parts[0] == "exp" && parts.size() == 2) {
    policy.kind = LrPolicyKind::kExp;
    policy.gamma = parse_real(parts[1], "gamma");
    return policy;
  }
  throw Error("unknown learning-rate policy '" + std::string(text) +
              "' (expected fixed, step:<gamma>:<stepsize> or exp:<gamma>)");
}

void apply_lr_policy(Workspace& ws, const TensorName& lr_tensor,
                     const LrPolicy& policy, double base, int64_t iter) {
  set_learning_rate(ws, lr_tensor, policy.rate(base, iter));
}

}  // namespace tgraph
