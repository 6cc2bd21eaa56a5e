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

// Built-in training demos. Each builds a compute graph and an independent
// update graph from registry ops and alternates them:
//
//   quadratic   loss = 0.5 * (w - 3)^2, w0 = 0
//   linreg      mean squared error of X*w + b on 64 seeded samples of a
//               noise-free linear model with 3 features
//   rnn-unroll  h_k = tanh(w*h_{k-1} + u*x_k) unrolled for 5 steps,
//               loss = 0.5 * (h_5 - 0.8)^2

#ifndef TGRAPH_TOOLS_DEMOS_H_
#define TGRAPH_TOOLS_DEMOS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tgraph/errors.h"

namespace tgraph {

// Bad command-line input: unknown demo, rule or policy.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct TrainOptions {
  std::string demo;
  // sgd (momentum rule with mu = 0), momentum, rmsprop or adam.
  std::string rule = "sgd";
  std::optional<double> lr;     // demo default when unset
  std::optional<int> steps;     // demo default when unset
  uint64_t seed = 0;
  std::string lr_policy = "fixed";
};

struct TrainRow {
  int step = 0;
  double loss = 0.0;
  double lr = 0.0;
};

std::vector<std::string> demo_names();

// Rows for steps 0..N: the loss before update N+1 and the rate that update
// uses. Throws UsageError for unknown names.
std::vector<TrainRow> train_demo(const TrainOptions& options);

}  // namespace tgraph

#endif  // TGRAPH_TOOLS_DEMOS_H_
