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

#include <cmath>

#include "doctest.h"
#include "support.h"
#include "tgraph/errors.h"
#include "tgraph/kernels.h"
#include "tgraph/workspace.h"

namespace tgraph {
namespace {

using testing::make_op;

const KernelSpec& spec(std::string_view type) {
  return KernelRegistry::global().at(type);
}

Tensor eval1(std::string_view type, std::vector<Tensor> inputs,
             std::vector<Argument> args = {}, uint64_t seed = 0) {
  std::vector<TensorName> names;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    names.push_back("in" + std::to_string(i));
  }
  OperatorDef op = make_op(std::string(type), names, {"out"}, std::move(args),
                           std::string(type) + ":0");
  return run_kernel(spec(type), inputs, op, seed)[0];
}

Tensor vec(std::vector<double> v) {
  return Tensor::from_values({static_cast<int64_t>(v.size())},
                             DType::kFloat64, v);
}

TEST_CASE("registry lookups") {
  const KernelRegistry& r = KernelRegistry::global();
  CHECK(r.find("Sigmoid") != nullptr);
  CHECK(r.find("NoSuchOp") == nullptr);
  CHECK_THROWS_AS(r.at("NoSuchOp"), CompileError);
  KernelRegistry local = KernelRegistry::with_builtins();
  KernelSpec dup;
  dup.op_type = "Sigmoid";
  CHECK_THROWS_AS(local.register_kernel(dup), Error);
  auto types = r.op_types();
  CHECK(std::is_sorted(types.begin(), types.end()));
  CHECK(spec("Sigmoid").inplace_safe);
  CHECK_FALSE(spec("MatMul").inplace_safe);
}

TEST_CASE("shape inference contracts") {
  auto infer = [](std::string_view type, std::vector<Shape> shapes) {
    OperatorDef op = make_op(std::string(type), {}, {"out"});
    return spec(type).infer_shape(shapes, op)[0];
  };
  CHECK(infer("MatMul", {{3, 4}, {4, 5}}) == Shape{3, 5});
  CHECK_THROWS_AS(infer("MatMul", {{3, 4}, {5, 4}}), ShapeError);
  CHECK(infer("Add", {{2, 2}, {2, 2}}) == Shape{2, 2});
  CHECK_THROWS_AS(infer("Add", {{2, 2}, {3}}), ShapeError);
  CHECK(infer("Mul", {{}, {2, 3}}) == Shape{2, 3});
  CHECK(infer("ReduceSum", {{2, 3}}) == Shape{});
}

TEST_CASE("infer_shapes propagates scalars through xsin") {
  Workspace ws;
  for (const char* n : {"a", "x", "b"}) ws.feed(n, Tensor::scalar(1.0));
  auto shapes = infer_shapes(testing::xsin_graph(), ws, true);
  for (const char* n : {"a", "x", "b", "ax", "s", "t", "f", "y"}) {
    REQUIRE(shapes.count(n));
    CHECK(shapes[n] == Shape{});
  }
}

TEST_CASE("infer_shapes is monotone") {
  testing::Rng rng(301);
  for (int trial = 0; trial < 50; ++trial) {
    auto c = testing::random_runnable_graph(rng, 10);
    Workspace ws;
    for (const auto& [n, t] : c.feeds) ws.feed(n, t);
    GraphDef prefix = c.graph;
    prefix.ops.clear();
    std::map<TensorName, Shape> previous;
    for (const auto& op : c.graph.ops) {
      prefix.ops.push_back(op);
      auto shapes = infer_shapes(prefix, ws);
      for (const auto& [name, shape] : previous) {
        REQUIRE(shapes.count(name));
        CHECK(shapes[name] == shape);
      }
      previous = shapes;
    }
  }
}

TEST_CASE("strict shape inference reports the op") {
  GraphDef g;
  g.ops = {make_op("Add", {"p", "q"}, {"r"}, {}, "Add:0")};
  Workspace ws;
  ws.feed("p", Tensor({2, 2}, DType::kFloat64));
  ws.feed("q", Tensor({3}, DType::kFloat64));
  try {
    infer_shapes(g, ws, true);
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("Add:0") != std::string::npos);
  }
  Workspace unfed;
  CHECK_THROWS_AS(infer_shapes(g, unfed, true), ShapeError);
  CHECK(infer_shapes(g, unfed, false).empty());
}

TEST_CASE("elementwise kernels") {
  CHECK(eval1("Sigmoid", {Tensor::scalar(0.0)}).scalar_value() == 0.5);
  CHECK(eval1("ReLU", {vec({-1, 2})}).to_vector() == std::vector<double>{0, 2});
  CHECK(eval1("Tanh", {Tensor::scalar(0.5)}).scalar_value() == std::tanh(0.5));
  CHECK(eval1("Square", {vec({-3, 2})}).to_vector() == std::vector<double>{9, 4});
  CHECK(eval1("Sub", {vec({1, 2}), Tensor::scalar(1.0)}).to_vector() ==
        std::vector<double>{0, 1});
  CHECK(eval1("Scale", {vec({1, 2})}, {{"alpha", 2.0}, {"beta", 1.0}})
            .to_vector() == std::vector<double>{3, 5});
  CHECK(eval1("ReduceMean", {vec({1, 2, 3, 6})}).scalar_value() == 3.0);
  Tensor a = Tensor::from_values({2, 2}, DType::kFloat64,
                                 std::vector<double>{1, 2, 3, 4});
  Tensor b = Tensor::from_values({2, 1}, DType::kFloat64,
                                 std::vector<double>{5, 6});
  Tensor c = eval1("MatMul", {a, b});
  CHECK(c.shape() == Shape{2, 1});
  CHECK(c.to_vector() == std::vector<double>{17, 39});
}

TEST_CASE("float32 kernels keep their dtype") {
  Tensor x = Tensor::from_values({2}, DType::kFloat32,
                                 std::vector<double>{0.0, 1.0});
  Tensor y = eval1("Sigmoid", {x});
  CHECK(y.dtype() == DType::kFloat32);
  CHECK(y.get(0) == 0.5);
  Tensor z = Tensor::from_values({2}, DType::kFloat64,
                                 std::vector<double>{0.0, 1.0});
  CHECK_THROWS_AS(eval1("Add", {x, z}), ShapeError);
}

TEST_CASE("dropout") {
  Tensor x(Shape{1000}, DType::kFloat64);
  x.fill(1.0);
  std::vector<Argument> args = {{"prob", 0.5}, {"seed", int64_t{7}}};
  CHECK(eval1("Dropout", {x}, args).identical(eval1("Dropout", {x}, args)));
  CHECK_FALSE(eval1("Dropout", {x}, args)
                  .identical(eval1("Dropout", {x}, {{"prob", 0.5},
                                                    {"seed", int64_t{8}}})));
  CHECK(eval1("Dropout", {x}, {{"prob", 0.0}}).identical(x));
  CHECK(eval1("Dropout", {x}, {{"prob", 0.5}, {"phase", std::string("test")}})
            .identical(x));
  CHECK_THROWS_AS(spec("Dropout").validate(make_op("Dropout", {"x"}, {"y"},
                                                   {{"prob", 1.0}})),
                  GraphError);

  Workspace ws;
  Tensor big(Shape{100000}, DType::kFloat64);
  big.fill(1.0);
  ws.feed("x", big);
  OperatorDef op = make_op("Dropout", {"x"}, {"y"}, {{"prob", 0.5}, {"seed", int64_t{3}}},
                           "Dropout:3");
  execute_op(ws, spec("Dropout"), op);
  const Tensor& mask = anchor_fetch(ws, "Dropout:3", "mask");
  double mean = 0.0;
  for (int64_t i = 0; i < mask.numel(); ++i) mean += mask.get(i);
  mean /= static_cast<double>(mask.numel());
  CHECK(std::abs(mean - 1.0) < 0.02);
  CHECK(ws.fetch("y").identical(mask));

  Workspace ones;
  ones.feed("x", x);
  execute_op(ones, spec("Dropout"),
             make_op("Dropout", {"x"}, {"y"}, {{"prob", 0.0}}, "d"));
  for (int64_t i = 0; i < 1000; ++i) {
    CHECK(anchor_fetch(ones, "d", "mask").get(i) == 1.0);
  }
}

TEST_CASE("seeded fills are reproducible") {
  std::vector<Argument> args = {{"shape", std::vector<int64_t>{3, 4}},
                                {"seed", int64_t{5}}};
  OperatorDef op = make_op("FillGaussian", {}, {"out"}, args, "g");
  Tensor a = run_kernel(spec("FillGaussian"), {}, op, 1)[0];
  Tensor b = run_kernel(spec("FillGaussian"), {}, op, 1)[0];
  CHECK(a.shape() == Shape{3, 4});
  CHECK(a.identical(b));
  Tensor c = run_kernel(spec("FillGaussian"), {}, op, 2)[0];
  CHECK_FALSE(a.identical(c));
  OperatorDef k = make_op("FillConstant", {}, {"out"},
                          {{"shape", std::vector<int64_t>{2}}, {"value", 3.0}});
  CHECK(run_kernel(spec("FillConstant"), {}, k)[0].to_vector() ==
        std::vector<double>{3, 3});
}

TEST_CASE("in-place-safe kernels give the same result when aliased") {
  testing::Rng rng(302);
  for (const auto& type : KernelRegistry::global().op_types()) {
    const KernelSpec& s = spec(type);
    if (!s.inplace_safe) continue;
    Tensor x = testing::random_tensor(rng, {3, 4}, -2.0, 2.0);
    std::vector<Argument> args;
    if (type == "Dropout") args = {{"prob", 0.4}, {"seed", int64_t{9}}};
    OperatorDef plain = make_op(type, {"x"}, {"y"}, args, "k");
    OperatorDef aliased = make_op(type, {"x"}, {"x"}, args, "k");
    Workspace a, b;
    a.feed("x", x);
    b.feed("x", x);
    execute_op(a, s, plain);
    execute_op(b, s, aliased);
    CHECK_MESSAGE(a.fetch("y").identical(b.fetch("x")), type);
  }
}

TEST_CASE("execute_op errors") {
  Workspace ws;
  OperatorDef op = make_op("Sigmoid", {"missing"}, {"y"}, {}, "s");
  CHECK_THROWS_AS(execute_op(ws, spec("Sigmoid"), op), ExecutionError);
  OperatorDef wrong = make_op("Sigmoid", {"a", "b"}, {"y"}, {}, "s");
  CHECK_THROWS_AS(execute_op(ws, spec("Sigmoid"), wrong), GraphError);
  ws.feed("p", Tensor({2, 2}, DType::kFloat64));
  ws.feed("q", Tensor({3}, DType::kFloat64));
  try {
    execute_op(ws, spec("Add"), make_op("Add", {"p", "q"}, {"r"}, {}, "Add:7"));
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    std::string msg = e.what();
    CHECK(msg.find("Add:7") != std::string::npos);
    CHECK(msg.find("[2,2]") != std::string::npos);
  }
}

}  // namespace
}  // namespace tgraph
