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

// Graph optimization passes over the tensor-node DAG:
//
//   forward_prune   marks the ancestor closure of the solving targets by a
//                   depth-first walk over parents.
//   backward_prune  marks every node lying on an objective -> wrt path, with
//                   a three-state visit memo reset per pair.
//   inplace_plan    finds chains of single-child nodes that can share their
//                   ancestor's buffer.
//
// All three run in time linear in nodes + edges (per pair for
// backward_prune). PassCounters exposes the work done for tests.

#ifndef TGRAPH_PASSES_H_
#define TGRAPH_PASSES_H_

#include <cstddef>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tgraph/graph.h"

namespace tgraph {

// Per-node boolean coloring over a topology's node set.
class MarkSet {
 public:
  MarkSet() = default;
  MarkSet(const Topology& topo, const std::vector<bool>& flags);

  bool is_marked(std::string_view name) const;
  bool contains(std::string_view name) const;
  void mark(const TensorName& name) { flags_[name] = true; }
  std::vector<TensorName> marked_names() const;
  const std::map<TensorName, bool, std::less<>>& flags() const {
    return flags_;
  }
  std::size_t size() const { return flags_.size(); }

  // Logical OR over the union of both domains.
  MarkSet& merge(const MarkSet& other);

  bool operator==(const MarkSet&) const = default;

 private:
  std::map<TensorName, bool, std::less<>> flags_;
};

class RenameDict {
 public:
  // Returns the ancestor `name` maps to, or `name` itself.
  const TensorName& lookup(const TensorName& name) const;
  void set(const TensorName& from, const TensorName& to) {
    renames_[from] = to;
  }
  const std::map<TensorName, TensorName>& entries() const { return renames_; }
  // Number of entries mapping a node to a different name.
  std::size_t shared_count() const;

 private:
  std::map<TensorName, TensorName> renames_;
};

struct PassCounters {
  std::size_t node_visits = 0;
  std::size_t edge_visits = 0;
};

// Throws GraphError for a target absent from the topology.
MarkSet forward_prune(const Topology& topo,
                      const std::vector<TensorName>& targets,
                      PassCounters* counters = nullptr);

// Throws GraphError for a pair member absent from the topology. A pair whose
// members coincide marks that node.
MarkSet backward_prune(const Topology& topo,
                       const std::vector<DerivativePair>& pairs,
                       PassCounters* counters = nullptr);

// Removes every op whose outputs are all unmarked (or "ignore"). Survivor
// order and tensor declarations are kept.
GraphDef prune_graph(const GraphDef& g, const MarkSet& marks);

using InplaceEligible = std::function<bool(const OperatorDef&)>;

struct InplaceOptions {
  // Tensors read after the graph finishes (targets, requested gradients).
  // They count as having one extra consumer.
  std::set<TensorName> live_outputs;
  // Tensors that may anchor only themselves. Graph feeds are always
  // protected in addition to these.
  std::set<TensorName> protected_names;
};

// Chains follow a link x -> c only when x has exactly one child, c has at
// most one child, and c is produced by an `eligible` operator reading x as its
// first input.
RenameDict inplace_plan(const GraphDef& g, const InplaceEligible& eligible,
                        const InplaceOptions& options = {},
                        PassCounters* counters = nullptr);

// Substitutes every input/output name through `rd`. The result may induce
// cycles and must not be passed to build_topology again.
GraphDef apply_renames(const GraphDef& g, const RenameDict& rd);

// Renames unmarked outputs of gradient ops to the "ignore" sink.
GraphDef ignore_unused(const GraphDef& g, const MarkSet& marks);

std::string marks_to_json(const MarkSet& marks);
std::string renames_to_json(const RenameDict& rd);

}  // namespace tgraph

#endif  // TGRAPH_PASSES_H_
