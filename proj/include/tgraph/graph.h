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

// Graph IR: operator definitions over named tensors, the tensor-node DAG they
// induce, and the line-oriented text format used to store them.

#ifndef TGRAPH_GRAPH_H_
#define TGRAPH_GRAPH_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace tgraph {

using TensorName = std::string;

// Sink alias for computed-but-unwanted outputs. Never a graph node.
inline constexpr std::string_view kIgnore = "ignore";

// Gradient tensors follow the "<tensor>_grad" convention.
inline TensorName gradient_name(std::string_view tensor) {
  return std::string(tensor) + "_grad";
}

// Names must be non-empty and free of whitespace and the characters the text
// format uses as delimiters.
bool is_valid_tensor_name(std::string_view name);

using ArgValue =
    std::variant<int64_t, double, bool, std::string, std::vector<int64_t>,
                 std::vector<double>, std::vector<std::string>>;

struct Argument {
  std::string key;
  ArgValue value;

  bool operator==(const Argument&) const = default;
};

enum class OpRole : uint8_t { kRun, kGradient };

struct OperatorDef {
  std::string op_type;
  std::vector<TensorName> inputs;
  std::vector<TensorName> outputs;
  std::vector<Argument> args;
  std::string anchor;
  OpRole role = OpRole::kRun;

  const Argument* find_arg(std::string_view key) const;
  bool has_arg(std::string_view key) const { return find_arg(key) != nullptr; }
  // Typed accessors. Integers widen to real; a missing key yields `fallback`.
  double real_arg(std::string_view key, double fallback) const;
  int64_t int_arg(std::string_view key, int64_t fallback) const;
  bool bool_arg(std::string_view key, bool fallback) const;
  std::string string_arg(std::string_view key,
                         std::string_view fallback) const;
  std::optional<std::vector<int64_t>> ints_arg(std::string_view key) const;
  // Replaces an existing argument of the same key.
  OperatorDef& set_arg(std::string key, ArgValue value);

  bool operator==(const OperatorDef&) const = default;
};

struct DerivativePair {
  TensorName objective;
  TensorName wrt;

  bool operator==(const DerivativePair&) const = default;
  auto operator<=>(const DerivativePair&) const = default;
};

enum class UpdateRule : uint8_t { kMomentum, kRMSProp, kAdam };

std::string_view update_rule_name(UpdateRule rule);
std::optional<UpdateRule> parse_update_rule(std::string_view name);

struct UpdatePair {
  TensorName weight;
  TensorName grad;
  double lr_mult = 1.0;
  double decay_mult = 1.0;

  bool operator==(const UpdatePair&) const = default;
};

// Hyperparameters and (weight, gradient) pairs for an update graph. The
// learning rate lives in the workspace as the scalar tensor `lr_tensor`.
struct UpdaterSpec {
  UpdateRule rule = UpdateRule::kMomentum;
  TensorName lr_tensor = "lr";
  double base_lr = 0.01;
  double momentum = 0.9;
  double rho = 0.9;
  double eps = 1e-8;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.0;
  std::vector<UpdatePair> pairs;

  bool operator==(const UpdaterSpec&) const = default;
};

struct GraphDef {
  std::string name;
  // Creation order. For run-ops this is also execution order.
  std::vector<OperatorDef> ops;
  std::vector<TensorName> targets;
  std::vector<DerivativePair> derivative_pairs;
  std::vector<TensorName> external_inputs;
  std::optional<UpdaterSpec> updater;
  // Set on graphs that already went through the optimization pipeline.
  bool optimized = false;
  // Set once in-place renaming has been applied; such graphs may be cyclic.
  bool renamed = false;
  // Requested name -> physical tensor holding its value after renaming.
  std::map<TensorName, TensorName> aliases;

  bool operator==(const GraphDef&) const = default;
};

GraphDef parse_graph(std::string_view text);
std::string serialize_graph(const GraphDef& g);

// Tensor-node DAG induced by a GraphDef: x -> y iff some operator reads x and
// writes y. Nodes are numbered in creation order (declared inputs first, then
// first appearance in the op list).
class Topology {
 public:
  static constexpr int kNoProducer = -1;

  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<TensorName>& nodes() const { return names_; }
  const TensorName& name(int id) const { return names_[id]; }
  bool contains(std::string_view name) const;
  // Throws GraphError for an unknown name.
  int id(std::string_view name) const;
  std::optional<int> find(std::string_view name) const;

  const std::vector<int>& children(int id) const { return children_[id]; }
  const std::vector<int>& parents(int id) const { return parents_[id]; }
  std::vector<TensorName> children(std::string_view name) const;
  std::vector<TensorName> parents(std::string_view name) const;
  // Index into GraphDef::ops of the producing operator, or kNoProducer.
  int producer(int id) const { return producer_[id]; }
  int edge_count() const { return edge_count_; }

 private:
  friend Topology build_topology(const GraphDef& g);
  int add_node(const TensorName& name);

  std::vector<TensorName> names_;
  std::unordered_map<TensorName, int> index_;
  std::vector<std::vector<int>> children_;
  std::vector<std::vector<int>> parents_;
  std::vector<int> producer_;
  int edge_count_ = 0;
};

// Throws GraphError on a cycle (naming a tensor on it) or when one tensor has
// two producers.
Topology build_topology(const GraphDef& g);

// Declared external inputs, then tensors read before any op writes them, in
// first-appearance order. "ignore" is excluded.
std::vector<TensorName> free_inputs(const GraphDef& g);

class MarkSet;

// Graphviz rendering. Tensors are ellipses, operators boxes. With `marks`,
// unmarked tensors and operators whose outputs are all unmarked are dashed.
std::string export_dot(const GraphDef& g, const MarkSet* marks = nullptr);

}  // namespace tgraph

#endif  // TGRAPH_GRAPH_H_
