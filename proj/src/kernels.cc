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

#include "tgraph/kernels.h"

#include <sstream>

#include "tgraph/errors.h"
#include "tgraph/updaters.h"

namespace tgraph {

namespace {

std::string describe(const OperatorDef& op) {
  return op.op_type + " (anchor '" + op.anchor + "')";
}

std::string shapes_of(const std::vector<TensorName>& names,
                      std::span<const Shape> shapes) {
  std::ostringstream os;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) os << ", ";
    os << names[i] << ":" << shape_to_string(shapes[i]);
  }
  return os.str();
}

DType default_output_dtype(std::span<const DType> inputs,
                           const OperatorDef& op) {
  if (!inputs.empty()) return inputs.front();
  auto parsed = parse_dtype(op.string_arg("dtype", "f64"));
  if (!parsed) throw GraphError("unknown dtype in " + describe(op));
  return *parsed;
}

}  // namespace

void check_arity(const KernelSpec& spec, const OperatorDef& op) {
  auto within = [](std::size_t n, int lo, int hi) {
    return static_cast<int>(n) >= lo && static_cast<int>(n) <= hi;
  };
  if (!within(op.inputs.size(), spec.min_inputs, spec.max_inputs) ||
      !within(op.outputs.size(), spec.min_outputs, spec.max_outputs)) {
    throw GraphError(describe(op) + " takes " +
                     std::to_string(spec.min_inputs) + ".." +
                     std::to_string(spec.max_inputs) + " inputs and " +
                     std::to_string(spec.min_outputs) + ".." +
                     std::to_string(spec.max_outputs) + " outputs, got " +
                     std::to_string(op.inputs.size()) + " and " +
                     std::to_string(op.outputs.size()));
  }
}

const KernelRegistry& KernelRegistry::global() {
  static const KernelRegistry registry = with_builtins();
  return registry;
}

KernelRegistry KernelRegistry::with_builtins() {
  KernelRegistry registry;
  register_math_kernels(registry);
  register_update_kernels(registry);
  return registry;
}

void KernelRegistry::register_kernel(KernelSpec spec) {
  std::string key = spec.op_type;
  if (!specs_.emplace(key, std::move(spec)).second) {
    throw Error("kernel '" + key + "' is already registered");
  }
}

const KernelSpec* KernelRegistry::find(std::string_view op_type) const {
  auto it = specs_.find(op_type);
  return it == specs_.end() ? nullptr : &it->second;
}

const KernelSpec& KernelRegistry::at(std::string_view op_type) const {
  const KernelSpec* spec = find(op_type);
  if (!spec) {
    throw CompileError("unregistered op type '" + std::string(op_type) + "'");
  }
  return *spec;
}

std::vector<std::string> KernelRegistry::op_types() const {
  std::vector<std::string> names;
  for (const auto& [name, spec] : specs_) names.push_back(name);
  return names;
}

CounterRng KernelContext::random(uint64_t draws) {
  std::optional<int64_t> seed;
  if (op_.has_arg("seed")) seed = op_.int_arg("seed", 0);
  return ws_.random_stream(seed, draws);
}

void execute_op(Workspace& ws, const KernelSpec& spec, const OperatorDef& op) {
  check_arity(spec, op);
  std::vector<const Tensor*> inputs;
  std::vector<Shape> in_shapes;
  std::vector<DType> in_dtypes;
  for (const auto& name : op.inputs) {
    const Tensor* t = ws.find(name);
    if (!t) {
      throw ExecutionError("tensor '" + name + "' read by " + describe(op) +
                           " is not available (unfed external input?)");
    }
    inputs.push_back(t);
    in_shapes.push_back(t->shape());
    in_dtypes.push_back(t->dtype());
  }
  std::size_t checked = spec.same_dtype_inputs < 0
                            ? inputs.size()
                            : std::min<std::size_t>(spec.same_dtype_inputs,
                                                    inputs.size());
  for (std::size_t i = 1; i < checked; ++i) {
    if (in_dtypes[i] != in_dtypes[0]) {
      throw ShapeError("dtype mismatch in " + describe(op) + ": " +
                       op.inputs[0] + " is " +
                       std::string(dtype_name(in_dtypes[0])) + ", " +
                       op.inputs[i] + " is " +
                       std::string(dtype_name(in_dtypes[i])));
    }
  }

  std::vector<Shape> out_shapes;
  try {
    out_shapes = spec.infer_shape(in_shapes, op);
  } catch (const ShapeError& e) {
    throw ShapeError("shape conflict in " + describe(op) + " with inputs " +
                     shapes_of(op.inputs, in_shapes) + ": " + e.what());
  }
  DType out_dtype = spec.output_dtype ? spec.output_dtype(in_dtypes, op)
                                      : default_output_dtype(in_dtypes, op);

  // Only the first "ignore" output maps to the shared sink; further ones in
  // the same op get scratch buffers so the kernel never writes one buffer
  // through two differently shaped views.
  std::vector<Tensor> scratch;
  scratch.reserve(op.outputs.size());
  std::vector<Tensor*> outputs;
  bool sink_taken = false;
  for (std::size_t i = 0; i < op.outputs.size(); ++i) {
    const TensorName& name = op.outputs[i];
    Tensor* out = nullptr;
    if (name == kIgnore && sink_taken) {
      out = &scratch.emplace_back();
    } else {
      sink_taken = sink_taken || name == kIgnore;
      out = &ws.tensor_for_write(name);
    }
    out->resize(out_shapes[i], out_dtype);
    outputs.push_back(out);
  }

  KernelContext ctx(ws, op, std::move(inputs), std::move(outputs));
  spec.forward(ctx);
}

std::vector<Tensor> run_kernel(const KernelSpec& spec,
                               std::span<const Tensor> inputs,
                               const OperatorDef& op, uint64_t seed) {
  if (inputs.size() != op.inputs.size()) {
    throw ExecutionError("run_kernel: " + std::to_string(inputs.size()) +
                         " tensors for " + std::to_string(op.inputs.size()) +
                         " inputs of " + describe(op));
  }
  Workspace scratch(seed);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    scratch.feed(op.inputs[i], inputs[i]);
  }
  if (spec.validate) spec.validate(op);
  execute_op(scratch, spec, op);
  std::vector<Tensor> out;
  for (const auto& name : op.outputs) out.push_back(scratch.fetch(name));
  return out;
}

std::map<TensorName, Shape> infer_shapes(const GraphDef& g,
                                         const Workspace& ws, bool strict,
                                         const KernelRegistry& registry) {
  std::map<TensorName, Shape> shapes;
  auto lookup = [&](const TensorName& name) -> std::optional<Shape> {
    if (auto it = shapes.find(name); it != shapes.end()) return it->second;
    if (const Tensor* t = ws.find(name)) return t->shape();
    return std::nullopt;
  };
  for (const auto& name : free_inputs(g)) {
    if (auto s = lookup(name)) {
      shapes[name] = *s;
    } else if (strict) {
      throw ShapeError("shape of external input '" + name +
                       "' is unknown in strict mode");
    }
  }
  for (const auto& op : g.ops) {
    const KernelSpec& spec = registry.at(op.op_type);
    check_arity(spec, op);
    std::vector<Shape> in_shapes;
    bool known = true;
    for (const auto& name : op.inputs) {
      auto s = lookup(name);
      if (!s) {
        known = false;
        break;
      }
      in_shapes.push_back(*s);
    }
    if (!known) continue;
    std::vector<Shape> out_shapes;
    try {
      out_shapes = spec.infer_shape(in_shapes, op);
    } catch (const ShapeError& e) {
      if (strict) {
        throw ShapeError("shape conflict in " + describe(op) +
                         " with inputs " + shapes_of(op.inputs, in_shapes) +
                         ": " + e.what());
      }
      continue;
    }
    for (std::size_t i = 0; i < op.outputs.size(); ++i) {
      if (op.outputs[i] != kIgnore) shapes[op.outputs[i]] = out_shapes[i];
    }
  }
  return shapes;
}

}  // namespace tgraph
