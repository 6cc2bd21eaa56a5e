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

// Expression recording. An Expr names a tensor and remembers the operators
// that produced it; function() and Session collect those histories into a
// GraphDef, sorted by a process-wide creation counter, and hand it to the
// executor. Intermediate names are always fresh ("<op_type>:<n>:out<k>"), so
// sharing buffers is left to the backend passes.

#ifndef TGRAPH_FRONTEND_H_
#define TGRAPH_FRONTEND_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "tgraph/executor.h"
#include "tgraph/graph.h"
#include "tgraph/tensor.h"
#include "tgraph/workspace.h"

namespace tgraph {

struct ExprNode;

class Expr {
 public:
  Expr() = default;

  // A leaf fed from the workspace.
  static Expr input(const TensorName& name);

  const TensorName& name() const;
  bool is_leaf() const;
  // Creation index of the producing op, -1 for leaves and gradients.
  int64_t creation_index() const;

  const ExprNode* node() const { return node_.get(); }

 private:
  friend std::vector<Expr> record_op(std::string op_type,
                                     const std::vector<Expr>& inputs,
                                     std::vector<Argument> args,
                                     int num_outputs);
  friend std::vector<Expr> grad(const Expr& cost,
                                const std::vector<Expr>& wrt);
  explicit Expr(std::shared_ptr<const ExprNode> node)
      : node_(std::move(node)) {}

  std::shared_ptr<const ExprNode> node_;
};

struct ExprNode {
  TensorName name;
  int64_t op_index = -1;
  std::shared_ptr<const OperatorDef> op;
  std::vector<Expr> op_inputs;
  // Set on gradient expressions: the pair and the objective it depends on.
  std::optional<DerivativePair> pair;
  std::vector<Expr> depends;
};

// Records one operator application and returns its outputs.
std::vector<Expr> record_op(std::string op_type,
                            const std::vector<Expr>& inputs,
                            std::vector<Argument> args = {},
                            int num_outputs = 1);

Expr add(const Expr& a, const Expr& b);
Expr sub(const Expr& a, const Expr& b);
Expr mul(const Expr& a, const Expr& b);
Expr matmul(const Expr& a, const Expr& b);
Expr sin(const Expr& x);
Expr cos(const Expr& x);
Expr square(const Expr& x);
Expr sigmoid(const Expr& x);
Expr tanh(const Expr& x);
Expr relu(const Expr& x);
Expr dropout(const Expr& x, double prob, std::optional<int64_t> seed = {},
             bool train = true);
Expr reduce_sum(const Expr& x);
Expr reduce_mean(const Expr& x);
Expr scale(const Expr& x, double alpha, double beta = 0.0);
Expr copy(const Expr& x);
Expr fill_constant(const Shape& shape, double value,
                   DType dtype = DType::kFloat64);

inline Expr operator+(const Expr& a, const Expr& b) { return add(a, b); }
inline Expr operator-(const Expr& a, const Expr& b) { return sub(a, b); }
inline Expr operator*(const Expr& a, const Expr& b) { return mul(a, b); }

// Expressions "<wrt>_grad" of d cost / d wrt. They carry the derivative pair
// onto whichever graph they end up in.
std::vector<Expr> grad(const Expr& cost, const std::vector<Expr>& wrt);

// Union of the histories of `outputs`, deduplicated by creation index and
// sorted by it. Targets are the non-gradient outputs.
GraphDef build_graph_def(const std::vector<Expr>& outputs,
                         const std::vector<TensorName>& external_inputs = {},
                         const std::string& name = "function");

// Fixed-length loop traced at the frontend: calls body(state, k) for k = 1 ..
// steps, feeding each call the state it returned before, and returns the
// final state. Throws GraphError for steps < 1.
using ScanFn =
    std::function<std::vector<Expr>(const std::vector<Expr>& state, int k)>;
std::vector<Expr> scan(const ScanFn& body, std::vector<Expr> init, int steps);

// Weight updates to run after each call. When spec.pairs is empty it is
// filled with (wrt, wrt_grad) for every gradient in `grads`.
struct FunctionUpdater {
  UpdaterSpec spec;
  std::vector<Expr> grads;
};

class Function {
 public:
  // Feeds args to the inputs positionally, runs the compute graph, fetches
  // the outputs, then runs the update graph if any.
  std::vector<Tensor> operator()(const std::vector<Tensor>& args);
  std::vector<Tensor> operator()(std::initializer_list<double> scalars);

  const GraphDef& graph_def() const { return def_; }
  const std::optional<GraphDef>& update_def() const { return update_def_; }
  const CompiledGraph* compiled() const { return compiled_.get(); }
  int compile_count() const { return compile_count_; }
  // Inputs not reachable from any output.
  const std::vector<TensorName>& unused_inputs() const { return unused_; }

 private:
  friend Function make_function(Workspace& ws, const std::vector<Expr>& inputs,
                                const std::vector<Expr>& outputs,
                                std::optional<FunctionUpdater> updater,
                                const CompileOptions& options);
  explicit Function(Workspace& ws) : ws_(&ws) {}

  void ensure_compiled();

  Workspace* ws_;
  std::vector<TensorName> inputs_;
  std::vector<TensorName> outputs_;
  GraphDef def_;
  std::optional<GraphDef> update_def_;
  std::optional<UpdaterSpec> updater_;
  CompileOptions options_;
  std::shared_ptr<const CompiledGraph> compiled_;
  std::shared_ptr<const CompiledGraph> update_compiled_;
  int compile_count_ = 0;
  std::vector<TensorName> unused_;
};

// Throws GraphError when outputs is empty or an output leaf is not an input.
// Compilation happens on the first call, when feed shapes are known.
Function make_function(Workspace& ws, const std::vector<Expr>& inputs,
                       const std::vector<Expr>& outputs,
                       std::optional<FunctionUpdater> updater = std::nullopt,
                       const CompileOptions& options = {});

// Caches one compiled graph per (fetch names, feed names) set pair.
class Session {
 public:
  explicit Session(Workspace& ws, CompileOptions options = {})
      : ws_(&ws), options_(options) {}

  // Throws ExecutionError when a feed names no tensor of the graph.
  std::vector<Tensor> run(const std::vector<Expr>& fetches,
                          const std::map<TensorName, Tensor>& feeds = {});

  int compile_count() const { return compile_count_; }
  std::size_t cache_size() const { return cache_.size(); }

  struct Key {
    std::vector<TensorName> fetches;  // sorted
    std::vector<TensorName> feeds;    // sorted
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& key) const;
  };
  static Key make_key(const std::vector<Expr>& fetches,
                      const std::map<TensorName, Tensor>& feeds);

 private:
  struct Entry {
    GraphDef def;
    std::set<TensorName> known;
    std::shared_ptr<const CompiledGraph> compiled;
  };

  Workspace* ws_;
  CompileOptions options_;
  std::unordered_map<Key, Entry, KeyHash> cache_;
  int compile_count_ = 0;
};

}  // namespace tgraph

#endif  // TGRAPH_FRONTEND_H_
