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

#include <set>

#include "doctest.h"
#include "support.h"
#include "tgraph/errors.h"
#include "tgraph/executor.h"
#include "tgraph/kernels.h"
#include "tgraph/passes.h"

namespace tgraph {
namespace {

using testing::make_op;

std::set<TensorName> marked(const MarkSet& m) {
  auto v = m.marked_names();
  return {v.begin(), v.end()};
}

bool unary_eligible(const OperatorDef& op) {
  const KernelSpec* spec = KernelRegistry::global().find(op.op_type);
  return spec && spec->inplace_safe;
}

TEST_CASE("forward_prune on the xsin example leaves b unmarked") {
  GraphDef g = testing::xsin_graph();
  Topology topo = build_topology(g);
  MarkSet m = forward_prune(topo, {"y"});
  CHECK(marked(m) == std::set<TensorName>{"a", "x", "y"});
  CHECK_FALSE(m.is_marked("b"));
  CHECK(m.size() == static_cast<std::size_t>(topo.size()));
  CHECK(marked(forward_prune(topo, {})).empty());
  CHECK_THROWS_AS(forward_prune(topo, {"nope"}), GraphError);
}

TEST_CASE("backward_prune on a chain and a diamond") {
  GraphDef chain;
  chain.ops = {make_op("Op", {"o"}, {"g1"}), make_op("Op", {"g1"}, {"g2"}),
               make_op("Op", {"g2"}, {"w"})};
  CHECK(marked(backward_prune(build_topology(chain), {{"o", "w"}})) ==
        std::set<TensorName>{"o", "g1", "g2", "w"});

  GraphDef diamond;
  diamond.ops = {make_op("Op", {"o"}, {"p"}), make_op("Op", {"p"}, {"w"}),
                 make_op("Op", {"o"}, {"q"}), make_op("Op", {"q"}, {"dead"})};
  MarkSet m = backward_prune(build_topology(diamond), {{"o", "w"}});
  CHECK(marked(m) == std::set<TensorName>{"o", "p", "w"});
  CHECK_FALSE(m.is_marked("q"));

  // A node reached twice through the memo still counts as connected.
  GraphDef shared;
  shared.ops = {make_op("Op", {"o"}, {"p"}), make_op("Op", {"o"}, {"q"}),
                make_op("Op", {"p"}, {"r"}), make_op("Op", {"q"}, {"r2"}),
                make_op("Op", {"p", "q"}, {"w"})};
  CHECK(marked(backward_prune(build_topology(shared), {{"o", "w"}})) ==
        std::set<TensorName>{"o", "p", "q", "w"});
  CHECK(marked(backward_prune(build_topology(shared), {{"o", "o"}})) ==
        std::set<TensorName>{"o"});
}

TEST_CASE("prune passes match the oracles on random DAGs") {
  testing::Rng rng(201);
  for (int trial = 0; trial < 300; ++trial) {
    GraphDef g = testing::random_dag(rng, 12, 20);
    Topology topo = build_topology(g);
    const auto& nodes = topo.nodes();
    std::uniform_int_distribution<std::size_t> any(0, nodes.size() - 1);
    std::vector<TensorName> targets = {nodes[any(rng)], nodes[any(rng)]};
    CHECK(marked(forward_prune(topo, targets)) ==
          testing::oracle_ancestors(g, targets));
    std::vector<DerivativePair> pairs;
    for (int i = 0; i < 4; ++i) pairs.push_back({nodes[any(rng)], nodes[any(rng)]});
    CHECK(marked(backward_prune(topo, pairs)) == testing::oracle_paths(g, pairs));
  }
}

TEST_CASE("passes do linear work on chains") {
  for (int n : {100, 1000, 10000, 100000}) {
    GraphDef g;
    g.external_inputs = {"t0"};
    for (int i = 0; i < n; ++i) {
      g.ops.push_back(make_op("Sigmoid", {"t" + std::to_string(i)},
                              {"t" + std::to_string(i + 1)}, {},
                              "s" + std::to_string(i)));
    }
    Topology topo = build_topology(g);
    TensorName last = "t" + std::to_string(n);
    PassCounters fwd, bwd, inp;
    forward_prune(topo, {last}, &fwd);
    backward_prune(topo, {{"t0", last}}, &bwd);
    inplace_plan(g, unary_eligible, {}, &inp);
    CHECK(fwd.node_visits + fwd.edge_visits <= 3u * (n + 1));
    CHECK(bwd.node_visits + bwd.edge_visits <= 3u * (n + 1));
    CHECK(inp.node_visits + inp.edge_visits <= 3u * (n + 1));
    CHECK(fwd.node_visits == static_cast<std::size_t>(n + 1));
  }
}

TEST_CASE("prune_graph keeps only producers of marked tensors") {
  GraphDef g = testing::xsin_graph();
  GraphDef pruned = prune_graph(g, forward_prune(build_topology(g), {"y"}));
  REQUIRE(pruned.ops.size() == 1);
  CHECK(pruned.ops[0].outputs == std::vector<TensorName>{"y"});

  std::vector<TensorName> all = {"ax", "s", "t", "f", "y"};
  CHECK(prune_graph(g, forward_prune(build_topology(g), all)) == g);

  testing::Rng rng(202);
  for (int trial = 0; trial < 100; ++trial) {
    GraphDef d = testing::random_dag(rng);
    Topology topo = build_topology(d);
    std::vector<bool> flags(topo.size());
    for (int i = 0; i < topo.size(); ++i) flags[i] = rng() & 1;
    MarkSet marks(topo, flags);
    std::vector<OperatorDef> want;
    for (const auto& op : d.ops) {
      bool keep = false;
      for (const auto& out : op.outputs) keep = keep || marks.is_marked(out);
      if (keep) want.push_back(op);
    }
    CHECK(prune_graph(d, marks).ops == want);
  }
}

TEST_CASE("inplace_plan follows single-child chains") {
  GraphDef g;
  g.external_inputs = {"in"};
  g.ops = {make_op("Scale", {"in"}, {"x"}, {{"alpha", 2.0}}, "scale"),
           make_op("Sigmoid", {"x"}, {"s"}, {}, "sig"),
           make_op("Tanh", {"s"}, {"t"}, {}, "tanh")};
  RenameDict rd = inplace_plan(g, unary_eligible);
  CHECK(rd.lookup("x") == "x");
  CHECK(rd.lookup("s") == "x");
  CHECK(rd.lookup("t") == "x");
  CHECK(rd.lookup("in") == "in");
  CHECK(rd.shared_count() == 2);

  GraphDef renamed = apply_renames(g, rd);
  CHECK(renamed.ops[1].inputs == std::vector<TensorName>{"x"});
  CHECK(renamed.ops[1].outputs == std::vector<TensorName>{"x"});
  CHECK(renamed.ops[2].inputs == std::vector<TensorName>{"x"});
  CHECK(renamed.ops[2].outputs == std::vector<TensorName>{"x"});
  CHECK(renamed.renamed);

  CHECK(apply_renames(g, RenameDict{}) == g);
}

TEST_CASE("inplace_plan never overwrites a feed") {
  GraphDef g;
  g.ops = {make_op("Sigmoid", {"x"}, {"s"}), make_op("Tanh", {"s"}, {"t"})};
  RenameDict rd = inplace_plan(g, unary_eligible);
  CHECK(rd.lookup("x") == "x");
  CHECK(rd.lookup("s") == "s");
  CHECK(rd.lookup("t") == "s");
}

TEST_CASE("inplace_plan stops at fan-out and ineligible ops") {
  GraphDef fan;
  fan.ops = {make_op("Scale", {"in"}, {"x"}), make_op("Sigmoid", {"x"}, {"a"}),
             make_op("Tanh", {"x"}, {"b"})};
  RenameDict rd = inplace_plan(fan, unary_eligible);
  CHECK(rd.lookup("a") == "a");
  CHECK(rd.lookup("b") == "b");

  GraphDef mm;
  mm.ops = {make_op("Scale", {"in"}, {"x"}), make_op("MatMul", {"x", "W"}, {"h"})};
  rd = inplace_plan(mm, unary_eligible);
  CHECK(rd.lookup("x") == "x");
  CHECK(rd.lookup("h") == "h");

  // A live output counts as an extra consumer.
  GraphDef chain;
  chain.ops = {make_op("Scale", {"in"}, {"x"}), make_op("Sigmoid", {"x"}, {"s"}),
               make_op("Tanh", {"s"}, {"t"})};
  InplaceOptions options;
  options.live_outputs = {"s"};
  rd = inplace_plan(chain, unary_eligible, options);
  CHECK(rd.lookup("s") == "x");
  CHECK(rd.lookup("t") == "t");
}

TEST_CASE("inplace_plan invariants on random graphs") {
  testing::Rng rng(203);
  for (int trial = 0; trial < 200; ++trial) {
    GraphDef g = testing::random_dag(rng);
    for (auto& op : g.ops) op.op_type = (rng() & 1) ? "Sigmoid" : "MatMul";
    Topology topo = build_topology(g);
    RenameDict rd = inplace_plan(g, unary_eligible);
    for (int v = 0; v < topo.size(); ++v) {
      const TensorName& name = topo.name(v);
      if (topo.children(v).size() > 1) CHECK(rd.lookup(name) == name);
      // Every ancestor maps to itself, so chains never merge.
      CHECK(rd.lookup(rd.lookup(name)) == rd.lookup(name));
    }
  }
}

TEST_CASE("in-place renaming preserves values") {
  testing::Rng rng(204);
  for (int trial = 0; trial < 100; ++trial) {
    auto c = testing::random_runnable_graph(rng, 10);
    c.graph.derivative_pairs.clear();
    auto run_with = [&](bool inplace) {
      Workspace ws;
      for (const auto& [n, t] : c.feeds) ws.feed(n, t);
      CompileOptions options;
      options.inplace = inplace;
      run(ws, *compile(ws, c.graph, options));
      std::vector<Tensor> out;
      for (const auto& t : c.graph.targets) out.push_back(ws.fetch(t));
      return out;
    };
    auto a = run_with(true);
    auto b = run_with(false);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].identical(b[i]));
  }
}

TEST_CASE("ignore_unused renames unwanted gradient outputs") {
  GraphDef g;
  OperatorDef grad = make_op("MatMulGradient", {"X", "W", "h_grad"},
                             {"X_grad", "W_grad"}, {}, "MatMul:0");
  grad.role = OpRole::kGradient;
  g.ops = {make_op("MatMul", {"X", "W"}, {"h"}, {}, "MatMul:0"), grad};
  Topology topo = build_topology(g);
  std::vector<bool> flags(topo.size(), true);
  flags[topo.id("X_grad")] = false;
  GraphDef out = ignore_unused(g, MarkSet(topo, flags));
  CHECK(out.ops[1].outputs == std::vector<TensorName>{"ignore", "W_grad"});
  CHECK(out.ops[0] == g.ops[0]);

  std::fill(flags.begin(), flags.end(), true);
  CHECK(ignore_unused(g, MarkSet(topo, flags)) == g);
}

TEST_CASE("marks and renames serialize as JSON objects") {
  GraphDef g = testing::xsin_graph();
  MarkSet m = forward_prune(build_topology(g), {"y"});
  std::string json = marks_to_json(m);
  CHECK(json.find("\"b\":false") != std::string::npos);
  CHECK(json.find("\"y\":true") != std::string::npos);
  RenameDict rd;
  rd.set("s", "x");
  CHECK(renames_to_json(rd) == "{\"s\":\"x\"}");
}

}  // namespace
}  // namespace tgraph
