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

// Test oracles and generators shared by the unit and acceptance suites. The
// oracles deliberately avoid the library's own traversal code.

#ifndef TGRAPH_TESTS_SUPPORT_SUPPORT_H_
#define TGRAPH_TESTS_SUPPORT_SUPPORT_H_

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "tgraph/graph.h"
#include "tgraph/tensor.h"

namespace tgraph::testing {

using Rng = std::mt19937_64;

OperatorDef make_op(std::string type, std::vector<TensorName> inputs,
                    std::vector<TensorName> outputs,
                    std::vector<Argument> args = {}, std::string anchor = "");

// f = x * sin(a * x + b) with the extra product y = a * x as the last op.
GraphDef xsin_graph();

Tensor random_tensor(Rng& rng, const Shape& shape, double lo = -1.0,
                     double hi = 1.0);

// Random DAG over nodes "n0".."n<k-1>" (k <= max_nodes) with at most
// max_edges edges. Every node without parents is a declared input and every
// other node is the single output of one op reading all its parents.
GraphDef random_dag(Rng& rng, int max_nodes = 12, int max_edges = 20);

// Edge list read straight from the op list.
std::vector<std::pair<TensorName, TensorName>> dag_edges(const GraphDef& g);
std::set<TensorName> dag_nodes(const GraphDef& g);

// Names that reach some target, by transitive closure.
std::set<TensorName> oracle_ancestors(const GraphDef& g,
                                      const std::vector<TensorName>& targets);

// Names lying on some enumerated objective -> wrt path, following edges in
// their stored direction.
std::set<TensorName> oracle_paths(const GraphDef& g,
                                  const std::vector<DerivativePair>& pairs);

struct GraphCase {
  GraphDef graph;
  std::map<TensorName, Tensor> feeds;
};

// Runnable f64 graph of 1..max_ops ops over inputs of one random matrix
// shape plus a scalar, with random targets and sometimes derivative pairs.
// Random ops carry explicit seeds.
GraphCase random_runnable_graph(Rng& rng, int max_ops = 10);

// Naive interpreter: gradient expansion without pruning, then every op in
// creation order into its own buffer. Returns every tensor it produced.
std::map<TensorName, Tensor> reference_run(const GraphDef& g,
                                           const std::map<TensorName, Tensor>& feeds,
                                           uint64_t seed = 0);

// Random GraphDef exercising every text-format feature.
GraphDef random_graph_def(Rng& rng);

// Scalar optimizer recurrences, written out step by step.
struct MomentumOracle {
  double lr, momentum, decay, v = 0.0;
  double step(double w, double g);
};
struct RmsPropOracle {
  double lr, rho, eps, decay, ms = 0.0;
  double step(double w, double g);
};
struct AdamOracle {
  double lr, beta1, beta2, eps, decay, m = 0.0, v = 0.0;
  int t = 0;
  double step(double w, double g);
};

}  // namespace tgraph::testing

#endif  // TGRAPH_TESTS_SUPPORT_SUPPORT_H_
