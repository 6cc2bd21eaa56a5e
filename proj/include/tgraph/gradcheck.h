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

// Central finite differences against the compiled gradient graph.

#ifndef TGRAPH_GRADCHECK_H_
#define TGRAPH_GRADCHECK_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tgraph/executor.h"
#include "tgraph/graph.h"
#include "tgraph/tensor.h"

namespace tgraph {

struct GradCheckOptions {
  double eps = 1e-6;
  // An element passes when |a - n| <= max(tol * max(|a|, |n|), abs_floor).
  double tol = 1e-6;
  double abs_floor = 1e-8;
  uint64_t seed = 0;
  CompileOptions compile;
};

struct GradCheckEntry {
  DerivativePair pair;
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
  int64_t worst_index = -1;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;

  bool passed() const;
  // One "PASS|FAIL <objective> wrt <wrt> ..." line per entry.
  std::string to_string() const;
};

bool within_tolerance(double analytic, double numeric, double tol,
                      double abs_floor);

// Every wrt must be one of `feeds`; every objective must hold one element.
// Each evaluation starts from a fresh workspace seeded with options.seed.
GradCheckReport gradcheck(const GraphDef& g,
                          const std::vector<DerivativePair>& pairs,
                          const std::map<TensorName, Tensor>& feeds,
                          const GradCheckOptions& options = {});

}  // namespace tgraph

#endif  // TGRAPH_GRADCHECK_H_
