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

#include "tgraph/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tgraph/errors.h"

namespace tgraph {

namespace {

double evaluate(const CompiledGraph& cg,
                const std::map<TensorName, Tensor>& feeds,
                const TensorName& objective, uint64_t seed) {
  Workspace ws(seed);
  for (const auto& [name, t] : feeds) ws.feed(name, t);
  run(ws, cg);
  return ws.fetch(objective).get(0);
}

}  // namespace

bool within_tolerance(double analytic, double numeric, double tol,
                      double abs_floor) {
  double err = std::abs(analytic - numeric);
  double scale = std::max(std::abs(analytic), std::abs(numeric));
  return err <= std::max(tol * scale, abs_floor);
}

bool GradCheckReport::passed() const {
  return std::all_of(entries.begin(), entries.end(),
                     [](const GradCheckEntry& e) { return e.passed; });
}

std::string GradCheckReport::to_string() const {
  std::ostringstream os;
  os.precision(6);
  for (const auto& e : entries) {
    os << (e.passed ? "PASS " : "FAIL ") << e.pair.objective << " wrt "
       << e.pair.wrt << " max_abs_err=" << e.max_abs_error
       << " max_rel_err=" << e.max_rel_error;
    if (!e.passed) os << " worst_index=" << e.worst_index;
    os << "\n";
  }
  return os.str();
}

GradCheckReport gradcheck(const GraphDef& g,
                          const std::vector<DerivativePair>& pairs,
                          const std::map<TensorName, Tensor>& feeds,
                          const GradCheckOptions& options) {
  for (const auto& p : pairs) {
    if (!feeds.count(p.wrt)) {
      throw ExecutionError("gradcheck wrt '" + p.wrt + "' must be fed");
    }
  }

  GraphDef with_grads = g;
  with_grads.derivative_pairs = pairs;
  with_grads.optimized = false;
  with_grads.renamed = false;
  GraphDef forward = g;
  forward.derivative_pairs.clear();
  forward.targets.clear();
  for (const auto& p : pairs) {
    if (std::find(forward.targets.begin(), forward.targets.end(),
                  p.objective) == forward.targets.end()) {
      forward.targets.push_back(p.objective);
    }
  }
  with_grads.targets = forward.targets;

  Workspace ws(options.seed);
  for (const auto& [name, t] : feeds) ws.feed(name, t);
  auto grad_cg = compile(ws, with_grads, options.compile);
  run(ws, *grad_cg);
  auto fwd_cg = compile(ws, forward, options.compile);

  GradCheckReport report;
  for (const auto& p : pairs) {
    if (ws.fetch(p.objective).numel() != 1) {
      throw ExecutionError("gradcheck objective '" + p.objective +
                           "' is not a scalar");
    }
    Tensor analytic = ws.fetch(gradient_name(p.wrt));
    const Tensor& x = feeds.at(p.wrt);
    if (analytic.numel() != x.numel()) {
      throw ShapeError("gradient of '" + p.wrt + "' has shape " +
                       shape_to_string(analytic.shape()) + ", expected " +
                       shape_to_string(x.shape()));
    }
    GradCheckEntry entry;
    entry.pair = p;
    std::map<TensorName, Tensor> probe = feeds;
    for (int64_t i = 0; i < x.numel(); ++i) {
      double v = x.get(i);
      probe[p.wrt].set(i, v + options.eps);
      double up = evaluate(*fwd_cg, probe, p.objective, options.seed);
      probe[p.wrt].set(i, v - options.eps);
      double down = evaluate(*fwd_cg, probe, p.objective, options.seed);
      probe[p.wrt].set(i, v);
      double numeric = (up - down) / (2.0 * options.eps);
      double a = analytic.get(i);
      double abs_err = std::abs(a - numeric);
      double scale = std::max(std::abs(a), std::abs(numeric));
      double rel_err = scale > 0 ? abs_err / scale : 0.0;
      bool ok = within_tolerance(a, numeric, options.tol, options.abs_floor);
      if (abs_err > entry.max_abs_error || (!ok && entry.passed)) {
        entry.worst_index = i;
      }
      entry.max_abs_error = std::max(entry.max_abs_error, abs_err);
      entry.max_rel_error = std::max(entry.max_rel_error, rel_err);
      entry.passed = entry.passed && ok;
    }
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace tgraph
