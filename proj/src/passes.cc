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

#include "tgraph/passes.h"

#include <cstdint>
#include <utility>

#include "json.hpp"
#include "tgraph/errors.h"

namespace tgraph {

MarkSet::MarkSet(const Topology& topo, const std::vector<bool>& flags) {
  for (int v = 0; v < topo.size(); ++v) flags_.emplace(topo.name(v), flags[v]);
}

bool MarkSet::is_marked(std::string_view name) const {
  auto it = flags_.find(name);
  return it != flags_.end() && it->second;
}

bool MarkSet::contains(std::string_view name) const {
  return flags_.find(name) != flags_.end();
}

std::vector<TensorName> MarkSet::marked_names() const {
  std::vector<TensorName> out;
  for (const auto& [name, marked] : flags_) {
    if (marked) out.push_back(name);
  }
  return out;
}

MarkSet& MarkSet::merge(const MarkSet& other) {
  for (const auto& [name, marked] : other.flags_) {
    bool& mine = flags_[name];
    mine = mine || marked;
  }
  return *this;
}

const TensorName& RenameDict::lookup(const TensorName& name) const {
  auto it = renames_.find(name);
  return it == renames_.end() ? name : it->second;
}

std::size_t RenameDict::shared_count() const {
  std::size_t n = 0;
  for (const auto& [from, to] : renames_) n += (from != to);
  return n;
}

MarkSet forward_prune(const Topology& topo,
                      const std::vector<TensorName>& targets,
                      PassCounters* counters) {
  PassCounters local;
  PassCounters& count = counters ? *counters : local;
  std::vector<bool> marked(topo.size(), false);
  std::vector<int> stack;
  for (const auto& target : targets) {
    auto id = topo.find(target);
    if (!id) throw GraphError("unknown target '" + target + "'");
    if (marked[*id]) continue;
    marked[*id] = true;
    ++count.node_visits;
    stack.push_back(*id);
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int p : topo.parents(v)) {
        ++count.edge_visits;
        if (!marked[p]) {
          marked[p] = true;
          ++count.node_visits;
          stack.push_back(p);
        }
      }
    }
  }
  return MarkSet(topo, marked);
}

MarkSet backward_prune(const Topology& topo,
                       const std::vector<DerivativePair>& pairs,
                       PassCounters* counters) {
  PassCounters local;
  PassCounters& count = counters ? *counters : local;
  enum : uint8_t { kUnvisited = 0, kVisited = 1, kConnected = 2 };

  std::vector<bool> marked(topo.size(), false);
  std::vector<uint8_t> state(topo.size());
  struct Frame {
    int node;
    std::size_t next_child;
    bool reaches;
  };
  std::vector<Frame> stack;

  for (const auto& pair : pairs) {
    auto obj = topo.find(pair.objective);
    if (!obj) throw GraphError("unknown objective '" + pair.objective + "'");
    auto wrt = topo.find(pair.wrt);
    if (!wrt) throw GraphError("unknown wrt tensor '" + pair.wrt + "'");

    std::fill(state.begin(), state.end(), kUnvisited);
    auto enter = [&](int v) {
      ++count.node_visits;
      if (v == *wrt) {
        state[v] = kConnected;
        marked[v] = true;
        return false;
      }
      state[v] = kVisited;
      stack.push_back({v, 0, false});
      return true;
    };
    enter(*obj);
    while (!stack.empty()) {
      Frame& top = stack.back();
      const auto& children = topo.children(top.node);
      if (top.next_child < children.size()) {
        int c = children[top.next_child++];
        ++count.edge_visits;
        if (state[c] == kUnvisited) {
          enter(c);
          if (state[c] == kConnected) stack.back().reaches = true;
        } else if (state[c] == kConnected) {
          top.reaches = true;
        }
        continue;
      }
      Frame done = top;
      stack.pop_back();
      if (done.reaches) {
        state[done.node] = kConnected;
        marked[done.node] = true;
        if (!stack.empty()) stack.back().reaches = true;
      }
    }
  }
  return MarkSet(topo, marked);
}

GraphDef prune_graph(const GraphDef& g, const MarkSet& marks) {
  GraphDef out = g;
  out.ops.clear();
  for (const auto& op : g.ops) {
    bool live = false;
    for (const auto& name : op.outputs) {
      if (name != kIgnore && marks.is_marked(name)) live = true;
    }
    if (live) out.ops.push_back(op);
  }
  return out;
}

RenameDict inplace_plan(const GraphDef& g, const InplaceEligible& eligible,
                        const InplaceOptions& options,
                        PassCounters* counters) {
  PassCounters local;
  PassCounters& count = counters ? *counters : local;
  Topology topo = build_topology(g);
  const int n = topo.size();

  std::vector<bool> is_protected(n, false), is_live(n, false);
  for (const auto& name : free_inputs(g)) {
    if (auto id = topo.find(name)) is_protected[*id] = true;
  }
  for (const auto& name : options.protected_names) {
    if (auto id = topo.find(name)) is_protected[*id] = true;
  }
  for (const auto& name : options.live_outputs) {
    if (auto id = topo.find(name)) is_live[*id] = true;
  }
  auto consumers = [&](int v) {
    return topo.children(v).size() + (is_live[v] ? 1 : 0);
  };

  RenameDict rd;
  std::vector<bool> assigned(n, false);
  for (int x = 0; x < n; ++x) {
    if (assigned[x]) continue;
    ++count.node_visits;
    assigned[x] = true;
    rd.set(topo.name(x), topo.name(x));
    if (is_protected[x]) continue;
    int cur = x;
    while (consumers(cur) == 1 && topo.children(cur).size() == 1) {
      int c = topo.children(cur).front();
      ++count.edge_visits;
      if (assigned[c] || is_protected[c] || topo.children(c).size() > 1) {
        break;
      }
      const OperatorDef& op = g.ops[topo.producer(c)];
      if (op.inputs.empty() || op.inputs.front() != topo.name(cur) ||
          !eligible(op)) {
        break;
      }
      ++count.node_visits;
      assigned[c] = true;
      rd.set(topo.name(c), topo.name(x));
      cur = c;
    }
  }
  return rd;
}

GraphDef apply_renames(const GraphDef& g, const RenameDict& rd) {
  GraphDef out = g;
  for (auto& op : out.ops) {
    for (auto& name : op.inputs) name = rd.lookup(name);
    for (auto& name : op.outputs) name = rd.lookup(name);
  }
  if (rd.shared_count() == 0) return out;
  out.renamed = true;
  auto record = [&](const TensorName& name) {
    const TensorName& physical = rd.lookup(name);
    if (physical != name) out.aliases[name] = physical;
  };
  for (const auto& t : g.targets) record(t);
  for (const auto& p : g.derivative_pairs) record(gradient_name(p.wrt));
  for (auto& [from, to] : out.aliases) to = rd.lookup(to);
  return out;
}

GraphDef ignore_unused(const GraphDef& g, const MarkSet& marks) {
  GraphDef out = g;
  for (auto& op : out.ops) {
    if (op.role != OpRole::kGradient) continue;
    for (auto& name : op.outputs) {
      if (!marks.is_marked(name)) name = std::string(kIgnore);
    }
  }
  return out;
}

std::string marks_to_json(const MarkSet& marks) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, marked] : marks.flags()) j[name] = marked;
  return j.dump();
}

std::string renames_to_json(const RenameDict& rd) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [from, to] : rd.entries()) j[from] = to;
  return j.dump();
}

}  // namespace tgraph
