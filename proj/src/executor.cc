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

#include "tgraph/executor.h"

#include <algorithm>
#include <set>

#include "json.hpp"
#include "tgraph/errors.h"

namespace tgraph {

namespace {

bool is_read(const GraphDef& g, const TensorName& name) {
  for (const auto& op : g.ops) {
    if (std::find(op.inputs.begin(), op.inputs.end(), name) !=
        op.inputs.end()) {
      return true;
    }
  }
  return false;
}

void push_unique(std::vector<TensorName>& v, const TensorName& name) {
  if (std::find(v.begin(), v.end(), name) == v.end()) v.push_back(name);
}

bool has_gradient_ops(const GraphDef& g) {
  return std::any_of(g.ops.begin(), g.ops.end(), [](const OperatorDef& op) {
    return op.role == OpRole::kGradient;
  });
}

int count_ignored(const GraphDef& g) {
  int n = 0;
  for (const auto& op : g.ops) {
    n += static_cast<int>(std::count(op.outputs.begin(), op.outputs.end(),
                                     std::string(kIgnore)));
  }
  return n;
}

std::vector<TensorName> objectives_of(const GraphDef& g) {
  std::vector<TensorName> objs;
  for (const auto& p : g.derivative_pairs) push_unique(objs, p.objective);
  return objs;
}

}  // namespace

std::string CompileStats::to_json() const {
  nlohmann::json j;
  j["ops_before"] = ops_before;
  j["ops_after"] = ops_after;
  j["tensors_renamed"] = tensors_renamed;
  j["buffers_shared"] = buffers_shared;
  return j.dump();
}

std::shared_ptr<const CompiledGraph> compile(const Workspace& ws,
                                             const GraphDef& g,
                                             const CompileOptions& options) {
  const KernelRegistry& kernels =
      options.kernels ? *options.kernels : KernelRegistry::global();
  if (g.targets.empty() && g.derivative_pairs.empty()) {
    throw CompileError("graph '" + g.name +
                       "' has no targets and no derivative pairs");
  }
  for (const auto& op : g.ops) {
    const KernelSpec& spec = kernels.at(op.op_type);
    check_arity(spec, op);
    if (spec.validate) spec.validate(op);
  }

  auto cg = std::make_shared<CompiledGraph>();
  cg->source_ = g;
  const std::vector<TensorName> objectives = objectives_of(g);
  GraphDef cur;

  if (g.renamed) {
    cur = g;
  } else if (!options.optimize) {
    cur = g;
    if (!g.derivative_pairs.empty() && !has_gradient_ops(g)) {
      ExpandOptions ex;
      ex.registry = options.gradients;
      ex.prune = false;
      ex.warnings = &cg->warnings_;
      cur = expand_gradients(g, g.derivative_pairs, ex);
    }
  } else {
    Topology topo = build_topology(g);
    std::set<TensorName> external(g.external_inputs.begin(),
                                  g.external_inputs.end());
    auto check_known = [&](const TensorName& name, const char* what) {
      if (!topo.contains(name) && !external.count(name)) {
        throw GraphError(std::string("unknown ") + what + " '" + name + "'");
      }
    };
    for (const auto& t : g.targets) check_known(t, "target");
    for (const auto& p : g.derivative_pairs) {
      check_known(p.objective, "objective");
    }

    std::vector<TensorName> keep;
    auto keep_if_node = [&](const TensorName& name) {
      if (topo.contains(name)) push_unique(keep, name);
    };
    for (const auto& t : g.targets) keep_if_node(t);
    for (const auto& o : objectives) keep_if_node(o);

    if (has_gradient_ops(g)) {
      for (const auto& p : g.derivative_pairs) {
        keep_if_node(gradient_name(p.wrt));
      }
      cur = prune_graph(g, forward_prune(topo, keep));
    } else {
      for (const auto& p : g.derivative_pairs) {
        check_known(p.wrt, "wrt tensor");
        keep_if_node(p.wrt);
      }
      cur = prune_graph(g, forward_prune(topo, keep));
      if (!g.derivative_pairs.empty()) {
        std::map<TensorName, Shape> hints =
            infer_shapes(cur, ws, false, kernels);
        for (const auto& name : free_inputs(cur)) {
          if (const Tensor* t = ws.find(name)) {
            cg->assumed_shapes_[name] = t->shape();
          }
        }
        ExpandOptions ex;
        ex.registry = options.gradients;
        ex.shape_hints = &hints;
        ex.warnings = &cg->warnings_;
        cur = expand_gradients(cur, g.derivative_pairs, ex);
      }
    }

    if (options.inplace) {
      InplaceOptions io;
      for (const auto& t : g.targets) io.live_outputs.insert(t);
      for (const auto& o : objectives) io.live_outputs.insert(o);
      for (const auto& p : g.derivative_pairs) {
        io.live_outputs.insert(gradient_name(p.wrt));
      }
      const KernelRegistry* reg = &kernels;
      cg->renames_ = inplace_plan(
          cur,
          [reg](const OperatorDef& op) {
            const KernelSpec* spec = reg->find(op.op_type);
            return spec && spec->inplace_safe;
          },
          io);
      GraphDef renamed = apply_renames(cur, cg->renames_);
      for (const auto& o : objectives) {
        const TensorName& physical = cg->renames_.lookup(o);
        if (physical != o) renamed.aliases[o] = physical;
      }
      cur = std::move(renamed);
    }
    cur.optimized = true;
    std::erase_if(cur.external_inputs, [&](const TensorName& name) {
      return !is_read(cur, name);
    });
  }

  cg->shapes_ = infer_shapes(cur, ws, options.strict_shapes, kernels);
  for (const auto& op : cur.ops) cg->kernels_.push_back(&kernels.at(op.op_type));
  for (const auto& name : free_inputs(cur)) {
    if (is_read(cur, name)) cg->feeds_.push_back(name);
  }
  cg->stats_.ops_before = static_cast<int>(g.ops.size());
  cg->stats_.ops_after = static_cast<int>(cur.ops.size());
  cg->stats_.tensors_renamed =
      std::max(0, count_ignored(cur) - count_ignored(g));
  cg->stats_.buffers_shared = static_cast<int>(cg->renames_.shared_count());
  cg->optimized_ = std::move(cur);
  return cg;
}

void run(Workspace& ws, const CompiledGraph& cg) {
  for (const auto& [name, shape] : cg.assumed_shapes()) {
    const Tensor* t = ws.find(name);
    if (t && t->shape() != shape) {
      throw ExecutionError("input '" + name + "' has shape " +
                           shape_to_string(t->shape()) +
                           " but the graph was compiled for " +
                           shape_to_string(shape) + "; recompile");
    }
  }
  for (const auto& name : cg.feeds()) {
    if (!ws.has(name)) {
      throw ExecutionError("unfed external input '" + name + "'");
    }
  }
  const auto& ops = cg.optimized().ops;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    execute_op(ws, *cg.kernels()[i], ops[i]);
  }
  for (const auto& [name, physical] : cg.optimized().aliases) {
    ws.set_alias(name, physical);
  }
}

TensorName step_name(std::string_view name, int k) {
  return std::string(name) + "@" + std::to_string(k);
}

GraphDef scan_unroll(const ScanBody& body, int steps,
                     const std::map<TensorName, TensorName>& bindings) {
  if (steps < 1) {
    throw GraphError("scan needs at least one step, got " +
                     std::to_string(steps));
  }
  const GraphDef& b = body.graph;
  std::set<TensorName> produced;
  for (const auto& op : b.ops) {
    for (const auto& out : op.outputs) produced.insert(out);
  }
  std::map<TensorName, TensorName> next_of;
  for (const auto& [state, next] : body.carries) {
    if (!bindings.count(state)) {
      throw GraphError("loop-carried tensor '" + state + "' has no binding");
    }
    if (!produced.count(next)) {
      throw GraphError("next state '" + next + "' of '" + state +
                       "' is not produced by the body");
    }
    next_of[state] = next;
  }
  std::set<TensorName> per_step(body.per_step.begin(), body.per_step.end());

  auto rename = [&](const TensorName& name, int k) -> TensorName {
    if (name == kIgnore) return name;
    if (auto it = next_of.find(name); it != next_of.end()) {
      return k == 1 ? bindings.at(name) : step_name(it->second, k - 1);
    }
    if (produced.count(name) || per_step.count(name)) {
      return step_name(name, k);
    }
    return name;
  };

  GraphDef out;
  out.name = b.name;
  for (int k = 1; k <= steps; ++k) {
    for (std::size_t i = 0; i < b.ops.size(); ++i) {
      OperatorDef op = b.ops[i];
      for (auto& n : op.inputs) n = rename(n, k);
      for (auto& n : op.outputs) n = rename(n, k);
      std::string anchor = op.anchor.empty()
                               ? op.op_type + ":" + std::to_string(i)
                               : op.anchor;
      op.anchor = step_name(anchor, k);
      out.ops.push_back(std::move(op));
    }
  }
  for (const auto& t : b.targets) push_unique(out.targets, rename(t, steps));
  for (const auto& p : b.derivative_pairs) {
    TensorName wrt =
        next_of.count(p.wrt) ? bindings.at(p.wrt) : rename(p.wrt, steps);
    out.derivative_pairs.push_back({rename(p.objective, steps), wrt});
  }
  for (const auto& x : b.external_inputs) {
    if (next_of.count(x)) {
      push_unique(out.external_inputs, bindings.at(x));
    } else if (per_step.count(x)) {
      for (int k = 1; k <= steps; ++k) {
        push_unique(out.external_inputs, step_name(x, k));
      }
    } else {
      push_unique(out.external_inputs, x);
    }
  }
  return out;
}

}  // namespace tgraph
