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

#include "demos.h"

#include <functional>

#include "tgraph/executor.h"
#include "tgraph/rng.h"
#include "tgraph/updaters.h"
#include "tgraph/workspace.h"

namespace tgraph {

namespace {

OperatorDef make_op(std::string type, std::vector<TensorName> inputs,
                    std::vector<TensorName> outputs,
                    std::vector<Argument> args = {}) {
  OperatorDef op;
  op.op_type = std::move(type);
  op.inputs = std::move(inputs);
  op.outputs = std::move(outputs);
  op.args = std::move(args);
  return op;
}

void number_anchors(GraphDef& g) {
  for (std::size_t i = 0; i < g.ops.size(); ++i) {
    if (g.ops[i].anchor.empty()) {
      g.ops[i].anchor = g.ops[i].op_type + ":" + std::to_string(i);
    }
  }
}

struct Demo {
  GraphDef model;
  std::vector<TensorName> weights;
  double default_lr;
  int default_steps;
  // Feeds weights and data.
  std::function<void(Workspace&)> setup;
};

Demo quadratic() {
  Demo d;
  d.model.name = "quadratic";
  d.model.ops = {
      make_op("Scale", {"w"}, {"diff"}, {{"alpha", 1.0}, {"beta", -3.0}}),
      make_op("Square", {"diff"}, {"sq"}),
      make_op("Scale", {"sq"}, {"loss"}, {{"alpha", 0.5}, {"beta", 0.0}}),
  };
  d.model.targets = {"loss"};
  d.model.derivative_pairs = {{"loss", "w"}};
  d.weights = {"w"};
  d.default_lr = 0.1;
  d.default_steps = 50;
  d.setup = [](Workspace& ws) { ws.feed("w", Tensor::scalar(0.0)); };
  return d;
}

Demo linreg() {
  Demo d;
  d.model.name = "linreg";
  d.model.ops = {
      make_op("MatMul", {"X", "w"}, {"xw"}),
      make_op("Add", {"xw", "b"}, {"pred"}),
      make_op("Sub", {"pred", "y"}, {"resid"}),
      make_op("Square", {"resid"}, {"sq"}),
      make_op("ReduceMean", {"sq"}, {"loss"}),
  };
  d.model.targets = {"loss"};
  d.model.derivative_pairs = {{"loss", "w"}, {"loss", "b"}};
  d.weights = {"w", "b"};
  d.default_lr = 0.1;
  d.default_steps = 200;
  d.setup = [](Workspace& ws) {
    GraphDef data;
    data.name = "linreg-data";
    data.ops = {
        make_op("FillUniform", {}, {"X"},
                {{"shape", std::vector<int64_t>{64, 3}},
                 {"low", -1.0},
                 {"high", 1.0},
                 {"seed", int64_t{1}}}),
        make_op("MatMul", {"X", "w_true"}, {"xw_true"}),
        make_op("Add", {"xw_true", "b_true"}, {"y"}),
    };
    data.targets = {"X", "y"};
    number_anchors(data);
    ws.feed("w_true", Tensor::from_values({3, 1}, DType::kFloat64,
                                          std::vector<double>{1.5, -2.0, 0.5}));
    ws.feed("b_true", Tensor::scalar(0.3));
    CompileOptions plain;
    plain.inplace = false;
    run(ws, *compile(ws, data, plain));
    ws.feed("w", Tensor::from_values({3, 1}, DType::kFloat64,
                                     std::vector<double>{0.0, 0.0, 0.0}));
    ws.feed("b", Tensor::scalar(0.0));
  };
  return d;
}

constexpr int kRnnSteps = 5;

Demo rnn_unroll() {
  ScanBody body;
  body.graph.name = "rnn-cell";
  body.graph.ops = {
      make_op("Mul", {"h", "w"}, {"hw"}),
      make_op("Mul", {"x", "u"}, {"xu"}),
      make_op("Add", {"hw", "xu"}, {"pre"}),
      make_op("Tanh", {"pre"}, {"h_next"}),
  };
  number_anchors(body.graph);
  body.graph.targets = {"h_next"};
  body.carries = {{"h", "h_next"}};
  body.per_step = {"x"};
  Demo d;
  d.model = scan_unroll(body, kRnnSteps, {{"h", "h0"}});
  TensorName last = step_name("h_next", kRnnSteps);
  d.model.ops.push_back(
      make_op("Scale", {last}, {"err"}, {{"alpha", 1.0}, {"beta", -0.8}}));
  d.model.ops.push_back(make_op("Square", {"err"}, {"sq"}));
  d.model.ops.push_back(
      make_op("Scale", {"sq"}, {"loss"}, {{"alpha", 0.5}, {"beta", 0.0}}));
  for (std::size_t i = d.model.ops.size() - 3; i < d.model.ops.size(); ++i) {
    d.model.ops[i].anchor = "loss:" + std::to_string(i);
  }
  d.model.name = "rnn-unroll";
  d.model.targets = {"loss"};
  d.model.derivative_pairs = {{"loss", "w"}, {"loss", "u"}};
  d.weights = {"w", "u"};
  d.default_lr = 0.5;
  d.default_steps = 100;
  d.setup = [](Workspace& ws) {
    CounterRng rng(mix64(ws.seed()) ^ 0x5eedULL, 0);
    for (int k = 1; k <= kRnnSteps; ++k) {
      ws.feed(step_name("x", k), Tensor::scalar(rng.uniform() * 2.0 - 1.0));
    }
    ws.feed("h0", Tensor::scalar(0.1));
    ws.feed("w", Tensor::scalar(0.5));
    ws.feed("u", Tensor::scalar(0.5));
  };
  return d;
}

UpdaterSpec make_updater(const std::string& rule, double lr) {
  UpdaterSpec spec;
  spec.base_lr = lr;
  if (rule == "sgd") {
    spec.rule = UpdateRule::kMomentum;
    spec.momentum = 0.0;
  } else if (auto parsed = parse_update_rule(rule)) {
    spec.rule = *parsed;
  } else {
    throw UsageError("unknown update rule '" + rule +
                     "' (expected sgd, momentum, rmsprop or adam)");
  }
  return spec;
}

}  // namespace

std::vector<std::string> demo_names() {
  return {"quadratic", "linreg", "rnn-unroll"};
}

std::vector<TrainRow> train_demo(const TrainOptions& options) {
  Demo demo;
  if (options.demo == "quadratic") {
    demo = quadratic();
  } else if (options.demo == "linreg") {
    demo = linreg();
  } else if (options.demo == "rnn-unroll") {
    demo = rnn_unroll();
  } else {
    throw UsageError("unknown demo '" + options.demo +
                     "' (expected quadratic, linreg or rnn-unroll)");
  }
  LrPolicy policy;
  try {
    policy = LrPolicy::parse(options.lr_policy);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  double base_lr = options.lr.value_or(demo.default_lr);
  int steps = options.steps.value_or(demo.default_steps);
  if (steps < 0) throw UsageError("steps must be non-negative");
  UpdaterSpec spec = make_updater(options.rule, base_lr);
  for (const auto& w : demo.weights) {
    spec.pairs.push_back({w, gradient_name(w)});
  }
  number_anchors(demo.model);

  Workspace ws(options.seed);
  demo.setup(ws);
  initialize_learning_rate(ws, spec);
  auto model = compile(ws, demo.model);
  CompileOptions as_written;
  as_written.optimize = false;
  auto update = compile(ws, build_update_graph(spec), as_written);

  std::vector<TrainRow> rows;
  for (int t = 0; t <= steps; ++t) {
    double lr = policy.rate(base_lr, t);
    set_learning_rate(ws, spec.lr_tensor, lr);
    run(ws, *model);
    rows.push_back({t, ws.fetch("loss").get(0), lr});
    if (t < steps) run(ws, *update);
  }
  return rows;
}

}  // namespace tgraph
