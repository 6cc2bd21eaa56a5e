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

// Weight updates live in their own graph, run after the compute graph. Each
// (weight, gradient) pair becomes one update op anchored at the weight name,
// so optimizer state is stored as "<weight>/<slot>" workspace tensors:
//
//   momentum  g' = g + l*W;  v = mu*v + a*g';  W -= v
//   rmsprop   g' = g + l*W;  ms = rho*ms + (1-rho)*g'^2;
//             W -= a*g' / (sqrt(ms) + eps)
//   adam      g' = g + l*W;  t += 1;  m = b1*m + (1-b1)*g';
//             v = b2*v + (1-b2)*g'^2;
//             W -= a*sqrt(1-b2^t)/(1-b1^t) * m/(sqrt(v) + eps)
//
// with a = lr * lr_mult and l = weight_decay * decay_mult.

#ifndef TGRAPH_UPDATERS_H_
#define TGRAPH_UPDATERS_H_

#include <cstdint>
#include <string>
#include <string_view>

#include "tgraph/graph.h"
#include "tgraph/workspace.h"

namespace tgraph {

class KernelRegistry;

std::string_view update_op_type(UpdateRule rule);

// Throws GraphError when spec has no pairs.
GraphDef build_update_graph(const UpdaterSpec& spec);

void register_update_kernels(KernelRegistry& registry);

// Feeds the scalar learning-rate tensor with spec.base_lr unless present.
void initialize_learning_rate(Workspace& ws, const UpdaterSpec& spec);
// Throws ExecutionError when the tensor does not exist yet.
void set_learning_rate(Workspace& ws, const TensorName& lr_tensor,
                       double value);

enum class LrPolicyKind : uint8_t { kFixed, kStep, kExp };

// Learning rate as a function of the iteration:
//   fixed  base
//   step   base * gamma^floor(iter / stepsize)
//   exp    base * gamma^iter
struct LrPolicy {
  LrPolicyKind kind = LrPolicyKind::kFixed;
  double gamma = 1.0;
  int64_t stepsize = 1;

  double rate(double base, int64_t iter) const;

  // "fixed", "step:<gamma>:<stepsize>" or "exp:<gamma>". Throws Error on an
  // unknown kind or malformed parameters.
  static LrPolicy parse(std::string_view text);
};

// Writes policy.rate(base, iter) into the learning-rate tensor.
void apply_lr_policy(Workspace& ws, const TensorName& lr_tensor,
                     const LrPolicy& policy, double base, int64_t iter);

}  // namespace tgraph

#endif  // TGRAPH_UPDATERS_H_
