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

#include "tgraph/autodiff.h"

#include <algorithm>
#include <set>

#include "tgraph/errors.h"
#include "tgraph/passes.h"
#include "tgraph/workspace.h"

namespace tgraph {

TensorName GradientContext::partial(std::size_t i) {
  const TensorName& input = op_.inputs.at(i);
  int k = ++(*partial_counts_)[input];
  return gradient_name(input) + "/p" + std::to_string(k);
}

TensorName GradientContext::temp(std::string_view slot) const {
  return slot_name(op_.anchor.empty() ? op_.op_type : op_.anchor, slot);
}

bool GradientContext::same_shape(const TensorName& a,
                                 const TensorName& b) const {
  if (!hints_) return false;
  auto ia = hints_->find(a);
  auto ib = hints_->find(b);
  return ia != hints_->end() && ib != hints_->end() && ia->second == ib->second;
}

OperatorDef GradientContext::make_op(std::string op_type,
                                     std::vector<TensorName> inputs,
                                     std::vector<TensorName> outputs,
                                     std::vector<Argument> args) const {
  OperatorDef op;
  op.op_type = std::move(op_type);
  op.inputs = std::move(inputs);
  op.outputs = std::move(outputs);
  op.args = std::move(args);
  op.anchor = op_.anchor;
  op.role = OpRole::kGradient;
  return op;
}

const GradientRegistry& GradientRegistry::global() {
  static const GradientRegistry registry = with_builtins();
  return registry;
}

GradientRegistry GradientRegistry::with_builtins() {
  GradientRegistry registry;
  register_builtin_gradients(registry);
  return registry;
}

void GradientRegistry::register_gradient(const std::string& op_type,
                                         GradientRule rule) {
  if (!entries_.emplace(op_type, Entry{std::move(rule)}).second) {
    throw Error("gradient for '" + op_type + "' is already registered");
  }
}

void GradientRegistry::register_stop_gradient(const std::string& op_type) {
  if (!entries_.emplace(op_type, Entry{}).second) {
    throw Error("gradient for '" + op_type + "' is already registered");
  }
}

const GradientRule* GradientRegistry::find(std::string_view op_type) const {
  auto it = entries_.find(op_type);
  if (it == entries_.end() || !it->second.rule) return nullptr;
  return &*it->second.rule;
}

bool GradientRegistry::is_stop_gradient(std::string_view op_type) const {
  auto it = entries_.find(op_type);
  return it != entries_.end() && !it->second.rule;
}

namespace {

// Partial for input i from a value computed on the output's shape, summed
// down when the input was broadcast.
void add_reduced(GradientContext& ctx, GradientExpansion& e, std::size_t i,
                 const TensorName& full, bool is_fresh) {
  const OperatorDef& op = ctx.op();
  const TensorName& input = op.inputs[i];
  if (ctx.same_shape(input, op.outputs[0])) {
    if (is_fresh) {
      // Rename the producing op's output straight to a partial name.
      TensorName p = ctx.partial(i);
      for (auto& g : e.grad_ops) {
        for (auto& out : g.outputs) {
          if (out == full) out = p;
        }
      }
      e.input_grads.emplace_back(input, p);
    } else {
      e.input_grads.emplace_back(input, full);
    }
    return;
  }
  TensorName p = ctx.partial(i);
  e.grad_ops.push_back(ctx.make_op("ReduceLike", {full, input}, {p}));
  e.input_grads.emplace_back(input, p);
}

GradientExpansion add_rule(GradientContext& ctx) {
  GradientExpansion e;
  const TensorName& dy = ctx.output_grad(0);
  add_reduced(ctx, e, 0, dy, false);
  add_reduced(ctx, e, 1, dy, false);
  return e;
}

GradientExpansion sub_rule(GradientContext& ctx) {
  GradientExpansion e;
  const TensorName& dy = ctx.output_grad(0);
  add_reduced(ctx, e, 0, dy, false);
  TensorName neg = ctx.temp("neg");
  e.grad_ops.push_back(
      ctx.make_op("Scale", {dy}, {neg}, {{"alpha", -1.0}, {"beta", 0.0}}));
  add_reduced(ctx, e, 1, neg, true);
  return e;
}

GradientExpansion mul_rule(GradientContext& ctx) {
  GradientExpansion e;
  const OperatorDef& op = ctx.op();
  const TensorName& dy = ctx.output_grad(0);
  TensorName dp = ctx.temp("dlhs");
  TensorName dq = ctx.temp("drhs");
  e.grad_ops.push_back(ctx.make_op("Mul", {dy, op.inputs[1]}, {dp}));
  e.grad_ops.push_back(ctx.make_op("Mul", {dy, op.inputs[0]}, {dq}));
  add_reduced(ctx, e, 0, dp, true);
  add_reduced(ctx, e, 1, dq, true);
  return e;
}

GradientExpansion matmul_rule(GradientContext& ctx) {
  GradientExpansion e;
  const OperatorDef& op = ctx.op();
  TensorName da = ctx.partial(0);
  TensorName db = ctx.partial(1);
  e.grad_ops.push_back(ctx.make_op("MatMulGradient",
                                   {op.inputs[0], op.inputs[1],
                                    ctx.output_grad(0)},
                                   {da, db}));
  e.input_grads.emplace_back(op.inputs[0], da);
  e.input_grads.emplace_back(op.inputs[1], db);
  return e;
}

GradientExpansion sin_rule(GradientContext& ctx) {
  GradientExpansion e;
  const OperatorDef& op = ctx.op();
  TensorName c = ctx.temp("cos");
  TensorName p = ctx.partial(0);
  e.grad_ops.push_back(ctx.make_op("Cos", {op.inputs[0]}, {c}));
  e.grad_ops.push_back(ctx.make_op("Mul", {ctx.output_grad(0), c}, {p}));
  e.input_grads.emplace_back(op.inputs[0], p);
  return e;
}

GradientExpansion cos_rule(GradientContext& ctx) {
  GradientExpansion e;
  const OperatorDef& op = ctx.op();
  TensorName s = ctx.temp("sin");
  TensorName ds = ctx.temp("dsin");
  TensorName p = ctx.partial(0);
  e.grad_ops.push_back(ctx.make_op("Sin", {op.inputs[0]}, {s}));
  e.grad_ops.push_back(ctx.make_op("Mul", {ctx.output_grad(0), s}, {ds}));
  e.grad_ops.push_back(
      ctx.make_op("Scale", {ds}, {p}, {{"alpha", -1.0}, {"beta", 0.0}}));
  e.input_grads.emplace_back(op.inputs[0], p);
  return e;
}

GradientExpansion square_rule(GradientContext& ctx) {
  GradientExpansion e;
  const OperatorDef& op = ctx.op();
  TensorName twice = ctx.temp("twice");
  TensorName p = ctx.partial(0);
  e.grad_ops.push_back(ctx.make_op("Scale", {op.inputs[0]}, {twice},
                                   {{"alpha", 2.0}, {"beta", 0.0}}));
  e.grad_ops.push_back(
      ctx.make_op("Mul", {ctx.output_grad(0), twice}, {p}));
  e.input_grads.emplace_back(op.inputs[0], p);
  return e;
}

// dx = helper(y or x, dy).
GradientRule helper_rule(std::string helper, bool reads_output) {
  return [helper = std::move(helper), reads_output](GradientContext& ctx) {
    GradientExpansion e;
    const OperatorDef& op = ctx.op();
    TensorName p = ctx.partial(0);
    const TensorName& src = reads_output ? op.outputs[0] : op.inputs[0];
    e.grad_ops.push_back(
        ctx.make_op(helper, {src, ctx.output_grad(0)}, {p}));
    e.input_grads.emplace_back(op.inputs[0], p);
    return e;
  };
}

GradientExpansion dropout_rule(GradientContext& ctx) {
  GradientExpansion e;
  const OperatorDef& op = ctx.op();
  TensorName p = ctx.partial(0);
  e.grad_ops.push_back(
      ctx.make_op("DropoutGradient", {ctx.output_grad(0)}, {p}, op.args));
  e.input_grads.emplace_back(op.inputs[0], p);
  return e;
}

GradientExpansion scale_rule(GradientContext& ctx) {
  GradientExpansion e;
  const OperatorDef& op = ctx.op();
  TensorName p = ctx.partial(0);
  e.grad_ops.push_back(ctx.make_op(
      "Scale", {ctx.output_grad(0)}, {p},
      {{"alpha", op.real_arg("alpha", 1.0)}, {"beta", 0.0}}));
  e.input_grads.emplace_back(op.inputs[0], p);
  return e;
}

GradientExpansion copy_rule(GradientContext& ctx) {
  GradientExpansion e;
  e.input_grads.emplace_back(ctx.op().inputs[0], ctx.output_grad(0));
  return e;
}

struct Partial {
  int consumer;  // op index of the consumer; -1 for objective seeds
  int seq;
  TensorName name;
  int op_pos;  // index into the gradient op list, -1 for an alias
  int slot;
};

class Expander {
 public:
  Expander(const GraphDef& g, const std::vector<DerivativePair>& pairs,
           const ExpandOptions& options)
      : g_(g),
        pairs_(pairs),
        options_(options),
        registry_(options.registry ? *options.registry
                                   : GradientRegistry::global()),
        topo_(build_topology(g)) {}

  GraphDef run() {
    std::vector<TensorName> objectives;
    std::set<TensorName> external(g_.external_inputs.begin(),
                                  g_.external_inputs.end());
    std::vector<DerivativePair> reversed_pairs;
    for (const auto& pair : pairs_) {
      if (!topo_.contains(pair.objective)) {
        throw GraphError("unknown objective '" + pair.objective + "'");
      }
      if (!topo_.contains(pair.wrt) && !external.count(pair.wrt)) {
        throw GraphError("unknown wrt tensor '" + pair.wrt + "'");
      }
      if (std::find(objectives.begin(), objectives.end(), pair.objective) ==
          objectives.end()) {
        objectives.push_back(pair.objective);
      }
      if (std::find(wrts_.begin(), wrts_.end(), pair.wrt) == wrts_.end()) {
        wrts_.push_back(pair.wrt);
      }
      // Forward edges run from wrt to objective.
      if (topo_.contains(pair.wrt)) {
        reversed_pairs.push_back({pair.wrt, pair.objective});
      }
    }
    MarkSet upstream = forward_prune(topo_, objectives);
    MarkSet on_path = backward_prune(topo_, reversed_pairs);

    for (const auto& obj : objectives) {
      TensorName seed = gradient_name(obj) + "/p" +
                        std::to_string(++partial_counts_[obj]);
      OperatorDef op;
      op.op_type = "FillConstant";
      op.inputs = {obj};
      op.outputs = {seed};
      op.args = {{"value", 1.0}};
      op.anchor = gradient_name(obj) + ":seed";
      op.role = OpRole::kGradient;
      push_partial(obj, {-1, seq_++, seed, push_op(std::move(op)), 0});
    }

    for (int i = static_cast<int>(g_.ops.size()) - 1; i >= 0; --i) {
      const OperatorDef& op = g_.ops[i];
      if (op.role != OpRole::kRun) continue;
      bool relevant = false;
      for (const auto& out : op.outputs) {
        relevant = relevant || (out != kIgnore && upstream.is_marked(out));
      }
      if (!relevant) continue;
      std::vector<TensorName> out_grads;
      bool any = false;
      for (const auto& out : op.outputs) {
        auto grad = out == kIgnore ? std::nullopt : finalize(out);
        any = any || grad.has_value();
        out_grads.push_back(grad.value_or(""));
      }
      if (!any || registry_.is_stop_gradient(op.op_type)) continue;
      const GradientRule* rule = registry_.find(op.op_type);
      if (!rule) {
        if (on_path_op(op, on_path)) {
          throw CompileError("no gradient rule for op type '" + op.op_type +
                             "' (anchor '" + op.anchor +
                             "') on a path from an objective to a wrt");
        }
        continue;
      }
      GradientContext ctx(op, std::move(out_grads), options_.shape_hints,
                          &partial_counts_);
      GradientExpansion e = (*rule)(ctx);
      std::map<TensorName, std::pair<int, int>> produced;
      for (auto& gop : e.grad_ops) {
        gop.role = OpRole::kGradient;
        int pos = push_op(std::move(gop));
        for (std::size_t s = 0; s < ops_[pos].outputs.size(); ++s) {
          produced[ops_[pos].outputs[s]] = {pos, static_cast<int>(s)};
        }
      }
      for (const auto& [input, name] : e.input_grads) {
        auto it = produced.find(name);
        if (it == produced.end()) {
          push_partial(input, {i, seq_++, name, -1, 0});
        } else {
          push_partial(input,
                       {i, seq_++, name, it->second.first, it->second.second});
        }
      }
    }

    for (const auto& wrt : wrts_) {
      if (finalize(wrt)) continue;
      TensorName name = gradient_name(wrt);
      OperatorDef op;
      op.op_type = "FillConstant";
      op.inputs = {wrt};
      op.outputs = {name};
      op.args = {{"value", 0.0}};
      op.anchor = name + ":zeros";
      op.role = OpRole::kGradient;
      push_op(std::move(op));
      final_[wrt] = name;
      if (options_.warnings) {
        options_.warnings->push_back("no path from any objective to '" + wrt +
                                     "'; its gradient is zero");
      }
    }

    GraphDef out = g_;
    out.derivative_pairs = pairs_;
    for (auto& op : ops_) out.ops.push_back(std::move(op));
    if (!options_.prune) return out;
    return prune(out, objectives);
  }

 private:
  int push_op(OperatorDef op) {
    ops_.push_back(std::move(op));
    return static_cast<int>(ops_.size()) - 1;
  }

  void push_partial(const TensorName& t, Partial p) {
    if (final_.count(t)) {
      throw CompileError("gradient of '" + t +
                         "' received a contribution after it was summed; "
                         "ops are not in creation order");
    }
    partials_[t].push_back(std::move(p));
  }

  bool is_wrt(const TensorName& t) const {
    return std::find(wrts_.begin(), wrts_.end(), t) != wrts_.end();
  }

  static bool on_path_op(const OperatorDef& op, const MarkSet& marks) {
    bool in = false, out = false;
    for (const auto& n : op.inputs) in = in || marks.is_marked(n);
    for (const auto& n : op.outputs) out = out || marks.is_marked(n);
    return in && out;
  }

  std::optional<TensorName> finalize(const TensorName& t) {
    if (auto it = final_.find(t); it != final_.end()) return it->second;
    auto pit = partials_.find(t);
    if (pit == partials_.end() || pit->second.empty()) return std::nullopt;
    std::vector<Partial> parts = pit->second;
    std::stable_sort(parts.begin(), parts.end(),
                     [](const Partial& a, const Partial& b) {
                       return std::tie(a.consumer, a.seq) <
                              std::tie(b.consumer, b.seq);
                     });
    TensorName name = gradient_name(t);
    if (topo_.contains(name)) {
      throw GraphError("gradient name '" + name +
                       "' collides with an existing tensor");
    }
    TensorName result = name;
    if (parts.size() == 1) {
      const Partial& p = parts.front();
      if (p.op_pos >= 0) {
        ops_[p.op_pos].outputs[p.slot] = name;
      } else if (is_wrt(t)) {
        OperatorDef copy;
        copy.op_type = "Copy";
        copy.inputs = {p.name};
        copy.outputs = {name};
        copy.anchor = name + ":copy";
        copy.role = OpRole::kGradient;
        push_op(std::move(copy));
      } else {
        result = p.name;
      }
    } else {
      std::vector<TensorName> names;
      for (const auto& p : parts) names.push_back(p.name);
      for (auto& op : accumulate_fanout(names, name)) push_op(std::move(op));
    }
    final_[t] = result;
    return result;
  }

  GraphDef prune(const GraphDef& two_stage,
                 const std::vector<TensorName>& objectives) const {
    Topology topo2 = build_topology(two_stage);
    std::vector<DerivativePair> grad_pairs;
    for (const auto& pair : pairs_) {
      grad_pairs.push_back({pair.objective, gradient_name(pair.wrt)});
    }
    MarkSet chain = backward_prune(topo2, grad_pairs);
    std::vector<TensorName> keep = g_.targets;
    for (const auto& obj : objectives) keep.push_back(obj);
    for (const auto& wrt : wrts_) keep.push_back(gradient_name(wrt));
    for (const auto& name : chain.marked_names()) keep.push_back(name);
    MarkSet marks = forward_prune(topo2, keep);
    return ignore_unused(prune_graph(two_stage, marks), marks);
  }

  const GraphDef& g_;
  const std::vector<DerivativePair>& pairs_;
  const ExpandOptions& options_;
  const GradientRegistry& registry_;
  Topology topo_;
  std::vector<TensorName> wrts_;
  std::vector<OperatorDef> ops_;
  std::map<TensorName, std::vector<Partial>> partials_;
  std::map<TensorName, TensorName> final_;
  std::map<TensorName, int> partial_counts_;
  int seq_ = 0;
};

}  // namespace

void register_builtin_gradients(GradientRegistry& registry) {
  registry.register_stop_gradient("FillConstant");
  registry.register_stop_gradient("FillUniform");
  registry.register_stop_gradient("FillGaussian");
  registry.register_gradient("Add", add_rule);
  registry.register_gradient("Sub", sub_rule);
  registry.register_gradient("Mul", mul_rule);
  registry.register_gradient("MatMul", matmul_rule);
  registry.register_gradient("Sin", sin_rule);
  registry.register_gradient("Cos", cos_rule);
  registry.register_gradient("Square", square_rule);
  registry.register_gradient("Sigmoid", helper_rule("SigmoidGradient", true));
  registry.register_gradient("Tanh", helper_rule("TanhGradient", true));
  registry.register_gradient("ReLU", helper_rule("ReLUGradient", true));
  registry.register_gradient("Dropout", dropout_rule);
  registry.register_gradient("ReduceSum",
                             helper_rule("ReduceSumGradient", false));
  registry.register_gradient("ReduceMean",
                             helper_rule("ReduceMeanGradient", false));
  registry.register_gradient("Scale", scale_rule);
  registry.register_gradient("Copy", copy_rule);
}

GradientExpansion expand_operator(const OperatorDef& op,
                                  const std::vector<TensorName>& output_grads,
                                  const ExpandOptions& options) {
  const GradientRegistry& registry =
      options.registry ? *options.registry : GradientRegistry::global();
  if (registry.is_stop_gradient(op.op_type)) return {};
  const GradientRule* rule = registry.find(op.op_type);
  if (!rule) {
    throw CompileError("no gradient rule for op type '" + op.op_type + "'");
  }
  std::map<TensorName, int> counts;
  GradientContext ctx(op, output_grads, options.shape_hints, &counts);
  GradientExpansion e = (*rule)(ctx);
  for (auto& gop : e.grad_ops) gop.role = OpRole::kGradient;
  return e;
}

GraphDef expand_gradients(const GraphDef& g,
                          const std::vector<DerivativePair>& pairs,
                          const ExpandOptions& options) {
  return Expander(g, pairs, options).run();
}

std::vector<OperatorDef> accumulate_fanout(
    const std::vector<TensorName>& partials, const TensorName& result) {
  std::vector<OperatorDef> ops;
  if (partials.size() < 2) return ops;
  TensorName acc = partials[0];
  for (std::size_t k = 1; k < partials.size(); ++k) {
    OperatorDef add;
    add.op_type = "Add";
    TensorName out = k + 1 == partials.size()
                         ? result
                         : result + "/acc" + std::to_string(k);
    add.inputs = {acc, partials[k]};
    add.outputs = {out};
    add.anchor = result + ":sum" + std::to_string(k);
    add.role = OpRole::kGradient;
    ops.push_back(std::move(add));
    acc = out;
  }
  return ops;
}

}  // namespace tgraph
