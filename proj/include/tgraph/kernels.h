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

// Operator registry. Each KernelSpec bundles arity, shape inference, the
// forward computation and in-place eligibility for one op type. Gradient
// rules live in the autodiff registry.

#ifndef TGRAPH_KERNELS_H_
#define TGRAPH_KERNELS_H_

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tgraph/graph.h"
#include "tgraph/tensor.h"
#include "tgraph/workspace.h"

namespace tgraph {

class KernelContext;

using ShapeFn = std::function<std::vector<Shape>(std::span<const Shape>,
                                                 const OperatorDef&)>;
using DTypeFn =
    std::function<DType(std::span<const DType>, const OperatorDef&)>;
using ForwardFn = std::function<void(KernelContext&)>;
using ValidateFn = std::function<void(const OperatorDef&)>;

struct KernelSpec {
  std::string op_type;
  int min_inputs = 1;
  int max_inputs = 1;
  int min_outputs = 1;
  int max_outputs = 1;
  // Throws ShapeError on incompatible input shapes.
  ShapeFn infer_shape;
  ForwardFn forward;
  // Defaults to the dtype of input 0, else the "dtype" argument (f64).
  DTypeFn output_dtype;
  // Argument checks run at compile time; throw GraphError.
  ValidateFn validate;
  // Output may overwrite input 0 with identical results.
  bool inplace_safe = false;
  // Leading inputs that must share one dtype; -1 means all of them.
  int same_dtype_inputs = -1;
};

class KernelRegistry {
 public:
  // Built-in math, gradient-helper and update kernels.
  static const KernelRegistry& global();
  static KernelRegistry with_builtins();

  // Throws Error when op_type is already registered.
  void register_kernel(KernelSpec spec);
  const KernelSpec* find(std::string_view op_type) const;
  // Throws CompileError for unregistered types.
  const KernelSpec& at(std::string_view op_type) const;
  std::vector<std::string> op_types() const;

 private:
  std::map<std::string, KernelSpec, std::less<>> specs_;
};

void register_math_kernels(KernelRegistry& registry);

// Throws GraphError when op's input or output count is outside spec's range.
void check_arity(const KernelSpec& spec, const OperatorDef& op);

class KernelContext {
 public:
  KernelContext(Workspace& ws, const OperatorDef& op,
                std::vector<const Tensor*> inputs,
                std::vector<Tensor*> outputs)
      : ws_(ws),
        op_(op),
        inputs_(std::move(inputs)),
        outputs_(std::move(outputs)) {}

  const OperatorDef& op() const { return op_; }
  std::size_t num_inputs() const { return inputs_.size(); }
  std::size_t num_outputs() const { return outputs_.size(); }
  const Tensor& input(std::size_t i) const { return *inputs_[i]; }
  Tensor& output(std::size_t i) { return *outputs_[i]; }
  Workspace& workspace() { return ws_; }

  Tensor& stash(std::string_view slot) { return ws_.stash(op_.anchor, slot); }
  const Tensor& fetch_stash(std::string_view slot) const {
    return anchor_fetch(ws_, op_.anchor, slot);
  }
  // Random stream keyed by the op's "seed" argument when present.
  CounterRng random(uint64_t draws);

 private:
  Workspace& ws_;
  const OperatorDef& op_;
  std::vector<const Tensor*> inputs_;
  std::vector<Tensor*> outputs_;
};

// Runs one operator against `ws`: resolves inputs by name, checks dtypes,
// infers and allocates outputs, then calls the kernel. Shape failures are
// reported with the op anchor and the offending shapes.
void execute_op(Workspace& ws, const KernelSpec& spec, const OperatorDef& op);

// Standalone evaluation on a scratch workspace. Inputs are bound to
// op.inputs in order.
std::vector<Tensor> run_kernel(const KernelSpec& spec,
                               std::span<const Tensor> inputs,
                               const OperatorDef& op, uint64_t seed = 0);

// Shapes of every tensor whose producer's inputs have known shapes. In
// relaxed mode unknown feeds and conflicts are left for run time; strict mode
// throws ShapeError naming the op and tensors.
std::map<TensorName, Shape> infer_shapes(
    const GraphDef& g, const Workspace& ws, bool strict = false,
    const KernelRegistry& registry = KernelRegistry::global());

}  // namespace tgraph

#endif  // TGRAPH_KERNELS_H_
