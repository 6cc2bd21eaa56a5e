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

// Reverse-mode expansion. Every run-op with a registered rule gets a dual
// gradient expansion sharing its anchor; expansions are appended after the
// forward ops in inverse creation order, producing the two-stage graph.

#ifndef TGRAPH_AUTODIFF_H_
#define TGRAPH_AUTODIFF_H_

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tgraph/graph.h"
#include "tgraph/tensor.h"

namespace tgraph {

struct GradientExpansion {
  std::vector<OperatorDef> grad_ops;
  // (input tensor, partial gradient). An input read twice appears twice. The
  // partial is either written by grad_ops or aliases an existing gradient.
  std::vector<std::pair<TensorName, TensorName>> input_grads;
};

class GradientContext {
 public:
  GradientContext(const OperatorDef& op, std::vector<TensorName> output_grads,
                  const std::map<TensorName, Shape>* hints,
                  std::map<TensorName, int>* partial_counts)
      : op_(op),
        output_grads_(std::move(output_grads)),
        hints_(hints),
        partial_counts_(partial_counts) {}

  const OperatorDef& op() const { return op_; }
  // Empty when output i carries no gradient.
  const TensorName& output_grad(std::size_t i) const {
    return output_grads_[i];
  }
  // Fresh name for a partial gradient of input i.
  TensorName partial(std::size_t i);
  // "<anchor>/<slot>" scratch name for intermediate gradient values.
  TensorName temp(std::string_view slot) const;
  // True only when both shapes are known and equal.
  bool same_shape(const TensorName& a, const TensorName& b) const;
  // Gradient-role op carrying the source anchor.
  OperatorDef make_op(std::string op_type, std::vector<TensorName> inputs,
                      std::vector<TensorName> outputs,
                      std::vector<Argument> args = {}) const;

 private:
  const OperatorDef& op_;
  std::vector<TensorName> output_grads_;
  const std::map<TensorName, Shape>* hints_;
  std::map<TensorName, int>* partial_counts_;
};

using GradientRule = std::function<GradientExpansion(GradientContext&)>;

class GradientRegistry {
 public:
  static const GradientRegistry& global();
  static GradientRegistry with_builtins();

  // Both throw Error when op_type already has an entry.
  void register_gradient(const std::string& op_type, GradientRule rule);
  // Ops whose outputs never propagate a gradient to their inputs.
  void register_stop_gradient(const std::string& op_type);

  const GradientRule* find(std::string_view op_type) const;
  bool is_stop_gradient(std::string_view op_type) const;
  bool has_gradient(std::string_view op_type) const {
    return find(op_type) != nullptr;
  }

 private:
  struct Entry {
    std::optional<GradientRule> rule;
  };
  std::map<std::string, Entry, std::less<>> entries_;
};

void register_builtin_gradients(GradientRegistry& registry);

struct ExpandOptions {
  const GradientRegistry* registry = nullptr;  // null means global()
  // Known tensor shapes; used to skip reductions on broadcast inputs.
  const std::map<TensorName, Shape>* shape_hints = nullptr;
  // Runs backward prune, unused-op removal and "ignore" renaming.
  bool prune = true;
  // Receives a note per wrt that its objective cannot reach.
  std::vector<std::string>* warnings = nullptr;
};

// Appends the gradient stage for `pairs` to g. Objective gradients are seeded
// with FillConstant(1); several partials of one tensor are summed in consumer
// creation order; a wrt unreachable from its objective gets a zeros tensor.
// Throws CompileError when an op on an objective -> wrt path has no rule.
GradientExpansion expand_operator(const OperatorDef& op,
                                  const std::vector<TensorName>& output_grads,
                                  const ExpandOptions& options = {});
GraphDef expand_gradients(const GraphDef& g,
                          const std::vector<DerivativePair>& pairs,
                          const ExpandOptions& options = {});

// Left-fold of Add ops summing `partials` into `result`; intermediate sums are
// named "<result>/acc<k>". A single partial yields no ops.
std::vector<OperatorDef> accumulate_fanout(
    const std::vector<TensorName>& partials, const TensorName& result);

}  // namespace tgraph

#endif  // TGRAPH_AUTODIFF_H_
