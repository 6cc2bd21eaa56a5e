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

#include "tgraph/frontend.h"

#include <algorithm>
#include <atomic>
#include <functional>

#include "tgraph/errors.h"
#include "tgraph/updaters.h"

namespace tgraph {

namespace {

std::atomic<int64_t> g_creation_counter{0};

const ExprNode& checked(const Expr& e) {
  if (!e.node()) throw GraphError("use of an empty expression");
  return *e.node();
}

struct History {
  std::map<int64_t, std::shared_ptr<const OperatorDef>> ops;
  std::vector<DerivativePair> pairs;
  std::set<TensorName> leaves;
};

void collect(const Expr& e, History& h, std::set<const ExprNode*>& seen) {
  std::vector<const ExprNode*> stack{&checked(e)};
  while (!stack.empty()) {
    const ExprNode* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    if (n->op) {
      h.ops.emplace(n->op_index, n->op);
      for (const auto& in : n->op_inputs) stack.push_back(&checked(in));
    } else if (n->pair) {
      if (std::find(h.pairs.begin(), h.pairs.end(), *n->pair) ==
          h.pairs.end()) {
        h.pairs.push_back(*n->pair);
      }
      for (const auto& d : n->depends) stack.push_back(&checked(d));
    } else {
      h.leaves.insert(n->name);
    }
  }
}

History collect_all(const std::vector<Expr>& exprs) {
  History h;
  std::set<const ExprNode*> seen;
  for (const auto& e : exprs) collect(e, h, seen);
  return h;
}

Expr unary_op(const char* type, const Expr& x, std::vector<Argument> args = {}) {
  return record_op(type, {x}, std::move(args)).front();
}

}  // namespace

Expr Expr::input(const TensorName& name) {
  if (!is_valid_tensor_name(name) || name == kIgnore) {
    throw GraphError("invalid input name '" + name + "'");
  }
  auto node = std::make_shared<ExprNode>();
  node->name = name;
  return Expr(std::move(node));
}

const TensorName& Expr::name() const { return checked(*this).name; }

bool Expr::is_leaf() const {
  const ExprNode& n = checked(*this);
  return !n.op && !n.pair;
}

int64_t Expr::creation_index() const { return checked(*this).op_index; }

std::vector<Expr> record_op(std::string op_type,
                            const std::vector<Expr>& inputs,
                            std::vector<Argument> args, int num_outputs) {
  if (num_outputs < 1) throw GraphError("an op needs at least one output");
  int64_t index = g_creation_counter.fetch_add(1);
  std::string anchor = op_type + ":" + std::to_string(index);
  auto op = std::make_shared<OperatorDef>();
  op->op_type = std::move(op_type);
  op->anchor = anchor;
  op->args = std::move(args);
  for (const auto& in : inputs) op->inputs.push_back(in.name());
  for (int k = 0; k < num_outputs; ++k) {
    op->outputs.push_back(anchor + ":out" + std::to_string(k));
  }
  std::vector<Expr> outs;
  for (int k = 0; k < num_outputs; ++k) {
    auto node = std::make_shared<ExprNode>();
    node->name = op->outputs[k];
    node->op_index = index;
    node->op = op;
    node->op_inputs = inputs;
    outs.push_back(Expr(std::move(node)));
  }
  return outs;
}

Expr add(const Expr& a, const Expr& b) {
  return record_op("Add", {a, b}).front();
}
Expr sub(const Expr& a, const Expr& b) {
  return record_op("Sub", {a, b}).front();
}
Expr mul(const Expr& a, const Expr& b) {
  return record_op("Mul", {a, b}).front();
}
Expr matmul(const Expr& a, const Expr& b) {
  return record_op("MatMul", {a, b}).front();
}
Expr sin(const Expr& x) { return unary_op("Sin", x); }
Expr cos(const Expr& x) { return unary_op("Cos", x); }
Expr square(const Expr& x) { return unary_op("Square", x); }
Expr sigmoid(const Expr& x) { return unary_op("Sigmoid", x); }
Expr tanh(const Expr& x) { return unary_op("Tanh", x); }
Expr relu(const Expr& x) { return unary_op("ReLU", x); }

Expr dropout(const Expr& x, double prob, std::optional<int64_t> seed,
             bool train) {
  std::vector<Argument> args{{"prob", prob},
                             {"phase", std::string(train ? "train" : "test")}};
  if (seed) args.push_back({"seed", *seed});
  return unary_op("Dropout", x, std::move(args));
}

Expr reduce_sum(const Expr& x) { return unary_op("ReduceSum", x); }
Expr reduce_mean(const Expr& x) { return unary_op("ReduceMean", x); }

Expr scale(const Expr& x, double alpha, double beta) {
  return unary_op("Scale", x, {{"alpha", alpha}, {"beta", beta}});
}

Expr copy(const Expr& x) { return unary_op("Copy", x); }

Expr fill_constant(const Shape& shape, double value, DType dtype) {
  return record_op("FillConstant", {},
                   {{"shape", std::vector<int64_t>(shape)},
                    {"value", value},
                    {"dtype", std::string(dtype_name(dtype))}})
      .front();
}

std::vector<Expr> grad(const Expr& cost, const std::vector<Expr>& wrt) {
  std::vector<Expr> out;
  for (const auto& w : wrt) {
    auto node = std::make_shared<ExprNode>();
    node->name = gradient_name(w.name());
    node->pair = DerivativePair{cost.name(), w.name()};
    node->depends = {cost, w};
    out.push_back(Expr(std::move(node)));
  }
  return out;
}

GraphDef build_graph_def(const std::vector<Expr>& outputs,
                         const std::vector<TensorName>& external_inputs,
                         const std::string& name) {
  History h = collect_all(outputs);
  GraphDef g;
  g.name = name;
  for (const auto& [index, op] : h.ops) g.ops.push_back(*op);
  g.derivative_pairs = h.pairs;
  g.external_inputs = external_inputs;
  for (const auto& e : outputs) {
    if (checked(e).pair) continue;
    if (std::find(g.targets.begin(), g.targets.end(), e.name()) ==
        g.targets.end()) {
      g.targets.push_back(e.name());
    }
  }
  return g;
}

std::vector<Expr> scan(const ScanFn& body, std::vector<Expr> init,
                       int steps) {
  if (steps < 1) {
    throw GraphError("scan needs at least one step, got " +
                     std::to_string(steps));
  }
  std::vector<Expr> state = std::move(init);
  for (int k = 1; k <= steps; ++k) {
    std::vector<Expr> next = body(state, k);
    if (next.size() != state.size()) {
      throw GraphError("scan body returned " + std::to_string(next.size()) +
                       " states, expected " + std::to_string(state.size()));
    }
    state = std::move(next);
  }
  return state;
}

Function make_function(Workspace& ws, const std::vector<Expr>& inputs,
                       const std::vector<Expr>& outputs,
                       std::optional<FunctionUpdater> updater,
                       const CompileOptions& options) {
  if (outputs.empty()) throw GraphError("function needs at least one output");
  Function f(ws);
  f.options_ = options;
  for (const auto& in : inputs) {
    if (!in.is_leaf()) {
      throw GraphError("function input '" + in.name() + "' is not a leaf");
    }
    f.inputs_.push_back(in.name());
  }
  std::vector<Expr> all = outputs;
  if (updater) {
    for (const auto& g : updater->grads) all.push_back(g);
  }
  for (const auto& out : outputs) {
    f.outputs_.push_back(out.name());
    if (out.is_leaf() && std::find(f.inputs_.begin(), f.inputs_.end(),
                                   out.name()) == f.inputs_.end()) {
      throw GraphError("output '" + out.name() +
                       "' has no history and is not an input");
    }
  }
  f.def_ = build_graph_def(all, f.inputs_);
  History h = collect_all(all);
  std::set<TensorName> read;
  for (const auto& [i, op] : h.ops) {
    for (const auto& n : op->inputs) read.insert(n);
  }
  for (const auto& p : h.pairs) read.insert(p.wrt);
  for (const auto& name : f.inputs_) {
    bool is_output = std::find(f.outputs_.begin(), f.outputs_.end(), name) !=
                     f.outputs_.end();
    if (!read.count(name) && !is_output) f.unused_.push_back(name);
  }
  if (updater) {
    UpdaterSpec spec = updater->spec;
    if (spec.pairs.empty()) {
      for (const auto& g : updater->grads) {
        const ExprNode& n = checked(g);
        if (!n.pair) {
          throw GraphError("updater gradient '" + g.name() +
                           "' is not a gradient expression");
        }
        spec.pairs.push_back({n.pair->wrt, g.name()});
      }
    }
    for (const auto& g : updater->grads) {
      if (!checked(g).pair) {
        f.def_.targets.push_back(g.name());
      }
    }
    f.update_def_ = build_update_graph(spec);
    f.updater_ = spec;
  }
  return f;
}

void Function::ensure_compiled() {
  bool stale = !compiled_;
  if (compiled_) {
    for (const auto& [name, shape] : compiled_->assumed_shapes()) {
      const Tensor* t = ws_->find(name);
      if (t && t->shape() != shape) stale = true;
    }
  }
  if (stale) {
    compiled_ = compile(*ws_, def_, options_);
    ++compile_count_;
  }
  if (update_def_ && !update_compiled_) {
    CompileOptions uo = options_;
    uo.optimize = false;
    update_compiled_ = compile(*ws_, *update_def_, uo);
  }
}

std::vector<Tensor> Function::operator()(const std::vector<Tensor>& args) {
  if (args.size() != inputs_.size()) {
    throw ExecutionError("function takes " + std::to_string(inputs_.size()) +
                         " arguments, got " + std::to_string(args.size()));
  }
  for (std::size_t i = 0; i < args.size(); ++i) ws_->feed(inputs_[i], args[i]);
  if (updater_) initialize_learning_rate(*ws_, *updater_);
  ensure_compiled();
  run(*ws_, *compiled_);
  std::vector<Tensor> out;
  for (const auto& name : outputs_) out.push_back(ws_->fetch(name));
  if (update_compiled_) run(*ws_, *update_compiled_);
  return out;
}

std::vector<Tensor> Function::operator()(
    std::initializer_list<double> scalars) {
  std::vector<Tensor> args;
  for (double v : scalars) args.push_back(Tensor::scalar(v));
  return (*this)(args);
}

std::size_t Session::KeyHash::operator()(const Key& key) const {
  std::size_t h = 0;
  auto mix = [&h](const std::string& s) {
    h ^= std::hash<std::string>{}(s) + 0x9e3779b97f4a7c15ULL + (h << 6) +
         (h >> 2);
  };
  for (const auto& s : key.fetches) mix(s);
  mix("|");
  for (const auto& s : key.feeds) mix(s);
  return h;
}

Session::Key Session::make_key(const std::vector<Expr>& fetches,
                               const std::map<TensorName, Tensor>& feeds) {
  Key key;
  for (const auto& e : fetches) key.fetches.push_back(e.name());
  std::sort(key.fetches.begin(), key.fetches.end());
  key.fetches.erase(std::unique(key.fetches.begin(), key.fetches.end()),
                    key.fetches.end());
  for (const auto& [name, t] : feeds) key.feeds.push_back(name);
  return key;
}

std::vector<Tensor> Session::run(const std::vector<Expr>& fetches,
                                 const std::map<TensorName, Tensor>& feeds) {
  if (fetches.empty()) throw GraphError("session run needs fetches");
  Key key = make_key(fetches, feeds);
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    Entry entry;
    entry.def = build_graph_def(fetches, key.feeds, "session");
    for (const auto& op : entry.def.ops) {
      entry.known.insert(op.inputs.begin(), op.inputs.end());
      entry.known.insert(op.outputs.begin(), op.outputs.end());
    }
    for (const auto& p : entry.def.derivative_pairs) {
      entry.known.insert(p.wrt);
    }
    for (const auto& t : entry.def.targets) entry.known.insert(t);
    it = cache_.emplace(std::move(key), std::move(entry)).first;
  }
  Entry& entry = it->second;
  for (const auto& [name, t] : feeds) {
    if (!entry.known.count(name)) {
      throw ExecutionError("feed '" + name + "' is not a tensor of the graph");
    }
  }
  for (const auto& [name, t] : feeds) ws_->feed(name, t);
  bool stale = !entry.compiled;
  if (entry.compiled) {
    for (const auto& [name, shape] : entry.compiled->assumed_shapes()) {
      const Tensor* t = ws_->find(name);
      if (t && t->shape() != shape) stale = true;
    }
  }
  if (stale) {
    entry.compiled = compile(*ws_, entry.def, options_);
    ++compile_count_;
  }
  tgraph::run(*ws_, *entry.compiled);
  std::vector<Tensor> out;
  for (const auto& e : fetches) out.push_back(ws_->fetch(e.name()));
  return out;
}

}  // namespace tgraph
