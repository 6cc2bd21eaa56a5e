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

#include "support.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>

#include "tgraph/autodiff.h"
#include "tgraph/kernels.h"
#include "tgraph/workspace.h"

namespace tgraph::testing {

namespace {

int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double uniform_real(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool coin(Rng& rng, double p = 0.5) {
  return std::bernoulli_distribution(p)(rng);
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[static_cast<std::size_t>(
      uniform_int(rng, 0, static_cast<int>(items.size()) - 1))];
}

}  // namespace

OperatorDef make_op(std::string type, std::vector<TensorName> inputs,
                    std::vector<TensorName> outputs, std::vector<Argument> args,
                    std::string anchor) {
  OperatorDef op;
  op.op_type = std::move(type);
  op.inputs = std::move(inputs);
  op.outputs = std::move(outputs);
  op.args = std::move(args);
  op.anchor = std::move(anchor);
  return op;
}

GraphDef xsin_graph() {
  GraphDef g;
  g.name = "xsin";
  g.external_inputs = {"a", "x", "b"};
  g.ops = {
      make_op("Mul", {"a", "x"}, {"ax"}, {}, "Mul:0"),
      make_op("Add", {"ax", "b"}, {"s"}, {}, "Add:1"),
      make_op("Sin", {"s"}, {"t"}, {}, "Sin:2"),
      make_op("Mul", {"x", "t"}, {"f"}, {}, "Mul:3"),
      make_op("Mul", {"a", "x"}, {"y"}, {}, "Mul:4"),
  };
  g.targets = {"f"};
  return g;
}

Tensor random_tensor(Rng& rng, const Shape& shape, double lo, double hi) {
  Tensor t(shape, DType::kFloat64);
  for (int64_t i = 0; i < t.numel(); ++i) t.set(i, uniform_real(rng, lo, hi));
  return t;
}

GraphDef random_dag(Rng& rng, int max_nodes, int max_edges) {
  int n = uniform_int(rng, 1, max_nodes);
  std::vector<std::pair<int, int>> all;
  for (int j = 1; j < n; ++j) {
    for (int i = 0; i < j; ++i) all.push_back({i, j});
  }
  std::shuffle(all.begin(), all.end(), rng);
  int edges = uniform_int(rng, 0, std::min<int>(max_edges, all.size()));
  std::vector<std::vector<int>> parents(n);
  for (int e = 0; e < edges; ++e) parents[all[e].second].push_back(all[e].first);

  GraphDef g;
  g.name = "dag";
  auto node = [](int i) { return "n" + std::to_string(i); };
  for (int j = 0; j < n; ++j) {
    if (parents[j].empty()) {
      g.external_inputs.push_back(node(j));
      continue;
    }
    std::sort(parents[j].begin(), parents[j].end());
    std::vector<TensorName> inputs;
    for (int p : parents[j]) inputs.push_back(node(p));
    g.ops.push_back(make_op("Op", inputs, {node(j)}, {},
                            "Op:" + std::to_string(g.ops.size())));
  }
  return g;
}

std::vector<std::pair<TensorName, TensorName>> dag_edges(const GraphDef& g) {
  std::vector<std::pair<TensorName, TensorName>> edges;
  for (const auto& op : g.ops) {
    for (const auto& in : op.inputs) {
      for (const auto& out : op.outputs) edges.push_back({in, out});
    }
  }
  return edges;
}

std::set<TensorName> dag_nodes(const GraphDef& g) {
  std::set<TensorName> nodes(g.external_inputs.begin(),
                             g.external_inputs.end());
  for (const auto& op : g.ops) {
    nodes.insert(op.inputs.begin(), op.inputs.end());
    nodes.insert(op.outputs.begin(), op.outputs.end());
  }
  return nodes;
}

std::set<TensorName> oracle_ancestors(const GraphDef& g,
                                      const std::vector<TensorName>& targets) {
  std::vector<TensorName> names;
  for (const auto& n : dag_nodes(g)) names.push_back(n);
  std::size_t n = names.size();
  auto index = [&](const TensorName& name) {
    return static_cast<std::size_t>(
        std::lower_bound(names.begin(), names.end(), name) - names.begin());
  };
  // reach[i][j]: a path of length >= 0 leads from i to j.
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) reach[i][i] = true;
  for (const auto& [from, to] : dag_edges(g)) reach[index(from)][index(to)] = true;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!reach[i][k]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (reach[k][j]) reach[i][j] = true;
      }
    }
  }
  std::set<TensorName> out;
  for (const auto& t : targets) {
    for (std::size_t i = 0; i < n; ++i) {
      if (reach[i][index(t)]) out.insert(names[i]);
    }
  }
  return out;
}

std::set<TensorName> oracle_paths(const GraphDef& g,
                                  const std::vector<DerivativePair>& pairs) {
  std::map<TensorName, std::vector<TensorName>> children;
  for (const auto& [from, to] : dag_edges(g)) children[from].push_back(to);
  std::set<TensorName> out;
  for (const auto& pair : pairs) {
    std::vector<TensorName> path;
    std::function<void(const TensorName&)> walk = [&](const TensorName& v) {
      path.push_back(v);
      if (v == pair.wrt) {
        out.insert(path.begin(), path.end());
      } else {
        for (const auto& c : children[v]) walk(c);
      }
      path.pop_back();
    };
    walk(pair.objective);
  }
  return out;
}

GraphCase random_runnable_graph(Rng& rng, int max_ops) {
  GraphCase c;
  GraphDef& g = c.graph;
  g.name = "random";
  Shape mat = {uniform_int(rng, 1, 4), uniform_int(rng, 1, 4)};
  bool square = mat[0] == mat[1];
  struct Value {
    TensorName name;
    Shape shape;
  };
  std::vector<Value> pool;
  int num_inputs = uniform_int(rng, 1, 3);
  for (int i = 0; i < num_inputs; ++i) {
    TensorName name = "in" + std::to_string(i);
    g.external_inputs.push_back(name);
    c.feeds[name] = random_tensor(rng, mat);
    pool.push_back({name, mat});
  }
  if (coin(rng)) {
    g.external_inputs.push_back("s");
    c.feeds["s"] = random_tensor(rng, {});
    pool.push_back({"s", {}});
  }

  static const std::vector<std::string> kUnary = {
      "Sin",  "Cos",     "Square", "Sigmoid",   "Tanh",       "ReLU",
      "Copy", "Scale",   "Dropout", "ReduceSum", "ReduceMean"};
  static const std::vector<std::string> kBinary = {"Add", "Sub", "Mul"};

  int num_ops = uniform_int(rng, 1, max_ops);
  std::vector<TensorName> produced;
  for (int k = 0; k < num_ops; ++k) {
    TensorName out = "v" + std::to_string(k);
    std::string anchor = "op" + std::to_string(k);
    int kind = uniform_int(rng, 0, 9);
    OperatorDef op;
    Shape shape;
    if (kind == 0) {
      op = make_op("FillUniform", {}, {out},
                   {{"shape", std::vector<int64_t>(mat.begin(), mat.end())},
                    {"seed", int64_t{uniform_int(rng, 0, 1000)}}},
                   anchor);
      shape = mat;
    } else if (kind <= 3) {
      const Value& a = pick(rng, pool);
      std::vector<const Value*> partners;
      for (const auto& v : pool) {
        if (v.shape == a.shape || v.shape.empty() || a.shape.empty()) {
          partners.push_back(&v);
        }
      }
      const Value& b = *pick(rng, partners);
      op = make_op(pick(rng, kBinary), {a.name, b.name}, {out}, {}, anchor);
      shape = a.shape.empty() ? b.shape : a.shape;
    } else if (kind == 4 && square) {
      std::vector<const Value*> mats;
      for (const auto& v : pool) {
        if (v.shape == mat) mats.push_back(&v);
      }
      op = make_op("MatMul", {pick(rng, mats)->name, pick(rng, mats)->name},
                   {out}, {}, anchor);
      shape = mat;
    } else {
      const Value& a = pick(rng, pool);
      std::string type = pick(rng, kUnary);
      std::vector<Argument> args;
      shape = a.shape;
      if (type == "Scale") {
        args = {{"alpha", uniform_real(rng, -2, 2)},
                {"beta", uniform_real(rng, -1, 1)}};
      } else if (type == "Dropout") {
        args = {{"prob", 0.3}, {"seed", int64_t{uniform_int(rng, 0, 1000)}}};
      } else if (type == "ReduceSum" || type == "ReduceMean") {
        shape = {};
      }
      op = make_op(type, {a.name}, {out}, std::move(args), anchor);
    }
    g.ops.push_back(std::move(op));
    pool.push_back({out, shape});
    produced.push_back(out);
  }

  int num_targets = uniform_int(rng, 1, std::min<int>(3, produced.size()));
  std::vector<TensorName> shuffled = produced;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  g.targets.assign(shuffled.begin(), shuffled.begin() + num_targets);
  if (coin(rng, 0.7)) {
    int num_pairs = uniform_int(rng, 1, 2);
    for (int i = 0; i < num_pairs; ++i) {
      DerivativePair pair{pick(rng, produced), pick(rng, g.external_inputs)};
      if (std::find(g.derivative_pairs.begin(), g.derivative_pairs.end(),
                    pair) == g.derivative_pairs.end()) {
        g.derivative_pairs.push_back(pair);
      }
    }
  }
  return c;
}

std::map<TensorName, Tensor> reference_run(
    const GraphDef& g, const std::map<TensorName, Tensor>& feeds,
    uint64_t seed) {
  GraphDef full = g;
  if (!g.derivative_pairs.empty()) {
    ExpandOptions options;
    options.prune = false;
    full = expand_gradients(g, g.derivative_pairs, options);
  }
  Workspace ws(seed);
  for (const auto& [name, t] : feeds) ws.feed(name, t);
  const KernelRegistry& registry = KernelRegistry::global();
  for (const auto& op : full.ops) execute_op(ws, registry.at(op.op_type), op);
  std::map<TensorName, Tensor> out;
  for (const auto& name : ws.tensor_names()) {
    if (const Tensor* t = ws.find(name)) out[name] = *t;
  }
  return out;
}

namespace {

std::string random_word(Rng& rng, int max_len, bool allow_punct) {
  static const std::string kPlain =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_";
  static const std::string kPunct = ":/@.-";
  int len = uniform_int(rng, 1, max_len);
  std::string s;
  for (int i = 0; i < len; ++i) {
    if (allow_punct && i > 0 && coin(rng, 0.15)) {
      s += pick(rng, std::vector<char>(kPunct.begin(), kPunct.end()));
    } else {
      s += kPlain[static_cast<std::size_t>(
          uniform_int(rng, 0, static_cast<int>(kPlain.size()) - 1))];
    }
  }
  return s;
}

TensorName random_tensor_name(Rng& rng) {
  TensorName name = random_word(rng, 8, true);
  return name == kIgnore ? name + "_" : name;
}

double random_double(Rng& rng) {
  switch (uniform_int(rng, 0, 3)) {
    case 0:
      return static_cast<double>(uniform_int(rng, -5, 5));
    case 1:
      return uniform_real(rng, -1, 1);
    case 2:
      return uniform_real(rng, -1, 1) * std::pow(10.0, uniform_int(rng, -300, 300));
    default: {
      // Arbitrary finite bit pattern.
      double d;
      do {
        uint64_t bits = rng();
        std::memcpy(&d, &bits, sizeof(d));
      } while (!std::isfinite(d));
      return d;
    }
  }
}

std::string random_string(Rng& rng) {
  int len = uniform_int(rng, 0, 10);
  std::string s;
  for (int i = 0; i < len; ++i) {
    int c = uniform_int(rng, 31, 126);
    s += c == 31 ? '\n' : static_cast<char>(c);
  }
  return s;
}

ArgValue random_arg_value(Rng& rng) {
  switch (uniform_int(rng, 0, 6)) {
    case 0:
      return static_cast<int64_t>(rng());
    case 1:
      return random_double(rng);
    case 2:
      return coin(rng);
    case 3:
      return random_string(rng);
    case 4: {
      std::vector<int64_t> v(static_cast<std::size_t>(uniform_int(rng, 0, 4)));
      for (auto& x : v) x = uniform_int(rng, -100, 100);
      return v;
    }
    case 5: {
      std::vector<double> v(static_cast<std::size_t>(uniform_int(rng, 0, 4)));
      for (auto& x : v) x = random_double(rng);
      return v;
    }
    default: {
      std::vector<std::string> v(
          static_cast<std::size_t>(uniform_int(rng, 0, 3)));
      for (auto& x : v) x = random_string(rng);
      return v;
    }
  }
}

}  // namespace

GraphDef random_graph_def(Rng& rng) {
  GraphDef g;
  g.name = coin(rng, 0.9) ? random_word(rng, 10, false) : "";
  g.optimized = coin(rng, 0.3);
  g.renamed = coin(rng, 0.2);
  auto names = [&](int max, int min = 0) {
    std::vector<TensorName> v(
        static_cast<std::size_t>(uniform_int(rng, min, max)));
    for (auto& n : v) n = random_tensor_name(rng);
    return v;
  };
  g.external_inputs = names(3);
  g.targets = names(3);
  int num_pairs = uniform_int(rng, 0, 2);
  for (int i = 0; i < num_pairs; ++i) {
    g.derivative_pairs.push_back({random_tensor_name(rng), random_tensor_name(rng)});
  }
  int num_aliases = uniform_int(rng, 0, 2);
  for (int i = 0; i < num_aliases; ++i) {
    g.aliases[random_tensor_name(rng)] = random_tensor_name(rng);
  }
  int num_ops = uniform_int(rng, 0, 8);
  for (int i = 0; i < num_ops; ++i) {
    OperatorDef op;
    op.op_type = random_word(rng, 10, false);
    op.role = coin(rng, 0.3) ? OpRole::kGradient : OpRole::kRun;
    op.anchor = op.role == OpRole::kRun
                    ? "a" + std::to_string(i) + random_word(rng, 4, true)
                    : random_word(rng, 6, true);
    op.inputs = names(3);
    op.outputs = names(3, 1);
    int num_args = uniform_int(rng, 0, 4);
    for (int k = 0; k < num_args; ++k) {
      op.args.push_back({"k" + std::to_string(k) + random_word(rng, 4, false),
                         random_arg_value(rng)});
    }
    g.ops.push_back(std::move(op));
  }
  if (coin(rng, 0.3)) {
    UpdaterSpec u;
    u.rule = static_cast<UpdateRule>(uniform_int(rng, 0, 2));
    u.lr_tensor = random_tensor_name(rng);
    u.base_lr = random_double(rng);
    u.momentum = random_double(rng);
    u.rho = random_double(rng);
    u.eps = random_double(rng);
    u.beta1 = random_double(rng);
    u.beta2 = random_double(rng);
    u.weight_decay = random_double(rng);
    int num = uniform_int(rng, 0, 3);
    for (int i = 0; i < num; ++i) {
      u.pairs.push_back({random_tensor_name(rng), random_tensor_name(rng),
                         random_double(rng), random_double(rng)});
    }
    g.updater = u;
  }
  return g;
}

double MomentumOracle::step(double w, double g) {
  double gd = g + decay * w;
  v = momentum * v + lr * gd;
  return w - v;
}

double RmsPropOracle::step(double w, double g) {
  double gd = g + decay * w;
  ms = rho * ms + (1.0 - rho) * gd * gd;
  return w - lr * gd / (std::sqrt(ms) + eps);
}

double AdamOracle::step(double w, double g) {
  double gd = g + decay * w;
  ++t;
  m = beta1 * m + (1.0 - beta1) * gd;
  v = beta2 * v + (1.0 - beta2) * gd * gd;
  double a = lr * std::sqrt(1.0 - std::pow(beta2, t)) /
             (1.0 - std::pow(beta1, t));
  return w - a * m / (std::sqrt(v) + eps);
}

}  // namespace tgraph::testing
