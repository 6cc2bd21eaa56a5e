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

// Compilation turns a GraphDef into a fixed op sequence:
//
//   build_topology -> forward_prune -> prune_graph -> expand_gradients
//   (backward_prune, prune_graph, ignore_unused) -> inplace_plan
//   -> apply_renames -> infer_shapes -> kernel binding
//
// Run-ops execute in creation order, gradient ops after them in inverse
// source order.

#ifndef TGRAPH_EXECUTOR_H_
#define TGRAPH_EXECUTOR_H_

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tgraph/autodiff.h"
#include "tgraph/graph.h"
#include "tgraph/kernels.h"
#include "tgraph/passes.h"
#include "tgraph/workspace.h"

namespace tgraph {

struct CompileOptions {
  // Share buffers along single-child chains of in-place-safe ops.
  bool inplace = true;
  // Require every feed shape at compile time and fail on conflicts.
  bool strict_shapes = false;
  // When false the graph runs as written (plus gradient expansion without
  // pruning). Update graphs compile this way.
  bool optimize = true;
  // Null means the global registries. Both must outlive the compiled graph.
  const KernelRegistry* kernels = nullptr;
  const GradientRegistry* gradients = nullptr;
};

struct CompileStats {
  int ops_before = 0;
  int ops_after = 0;
  // Outputs redirected to the "ignore" sink.
  int tensors_renamed = 0;
  // Tensors mapped onto an ancestor's buffer by the in-place pass.
  int buffers_shared = 0;

  std::string to_json() const;
};

class CompiledGraph {
 public:
  const std::string& name() const { return optimized_.name; }
  // The graph as handed to compile().
  const GraphDef& source() const { return source_; }
  // Ops after all passes, in execution order. Serializable.
  const GraphDef& optimized() const { return optimized_; }
  const std::vector<const KernelSpec*>& kernels() const { return kernels_; }
  const std::map<TensorName, Shape>& shape_plan() const { return shapes_; }
  const CompileStats& stats() const { return stats_; }
  // Tensors that must be present in the workspace before run().
  const std::vector<TensorName>& feeds() const { return feeds_; }
  const RenameDict& renames() const { return renames_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  // Feed shapes the gradient expansion relied on; run() rejects others.
  const std::map<TensorName, Shape>& assumed_shapes() const {
    return assumed_shapes_;
  }

 private:
  friend std::shared_ptr<const CompiledGraph> compile(
      const Workspace& ws, const GraphDef& g, const CompileOptions& options);

  GraphDef source_;
  GraphDef optimized_;
  std::vector<const KernelSpec*> kernels_;
  std::map<TensorName, Shape> shapes_;
  CompileStats stats_;
  std::vector<TensorName> feeds_;
  RenameDict renames_;
  std::vector<std::string> warnings_;
  std::map<TensorName, Shape> assumed_shapes_;
};

// Throws CompileError when there is nothing to solve or an op type is not
// registered, GraphError on an invalid graph (cycles, unknown targets) and
// ShapeError on conflicts in strict mode.
std::shared_ptr<const CompiledGraph> compile(const Workspace& ws,
                                             const GraphDef& g,
                                             const CompileOptions& options = {});

// Executes every op against ws, then points renamed targets and gradients at
// their physical buffers. Throws ExecutionError for an unfed input and
// ShapeError for run-time shape conflicts.
void run(Workspace& ws, const CompiledGraph& cg);

// One loop iteration. Each carry pairs the state tensor read by the body with
// the tensor holding the next state. Tensors in per_step take a different
// value each step and are fed as "<name>@<k>". Other free inputs are shared
// across steps.
struct ScanBody {
  GraphDef graph;
  std::vector<std::pair<TensorName, TensorName>> carries;
  std::vector<TensorName> per_step;
};

// Replicates the body for steps k = 1..steps. Body tensors and anchors get
// the suffix "@k"; the state read at step 1 is bindings[state], at step k > 1
// the next-state tensor of step k - 1. Targets and derivative-pair
// objectives refer to the last step. Throws GraphError for steps < 1 or a
// carry without a binding.
GraphDef scan_unroll(const ScanBody& body, int steps,
                     const std::map<TensorName, TensorName>& bindings);

// Name of a body tensor at step k.
TensorName step_name(std::string_view name, int k);

}  // namespace tgraph

#endif  // TGRAPH_EXECUTOR_H_
