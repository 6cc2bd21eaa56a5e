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
#include <sstream>

#include "doctest.h"
#include "support.h"
#include "tgraph/dten.h"
#include "tgraph/errors.h"
#include "tgraph/executor.h"
#include "tgraph/workspace.h"

namespace tgraph {
namespace {

using testing::make_op;

TEST_CASE("feed and fetch") {
  Workspace ws;
  std::vector<double> values = {1, 2, 3, 4};
  ws.feed("x", {2, 2}, DType::kFloat32, values);
  Tensor x = ws.fetch("x");
  CHECK(x.shape() == Shape{2, 2});
  CHECK(x.dtype() == DType::kFloat32);
  CHECK(x.to_vector() == values);
  CHECK_THROWS_AS(ws.fetch("y"), ExecutionError);
  CHECK_THROWS_AS(ws.fetch("ignore"), ExecutionError);
  CHECK_THROWS_AS(ws.feed("z", {3}, DType::kFloat64, values), ShapeError);
}

TEST_CASE("memory accounting") {
  Workspace ws;
  CHECK(ws.memory_report().total_bytes == 0);
  ws.feed("x", Tensor({4}, DType::kFloat64));
  CHECK(ws.memory_report().total_bytes == 32);
  ws.feed("x", Tensor({2}, DType::kFloat32));
  MemoryReport r = ws.memory_report();
  CHECK(r.total_bytes == 8);
  CHECK(r.count == 1);
  ws.feed("x", Tensor({2}, DType::kFloat32));
  CHECK(ws.memory_report().count == 1);
  ws.feed("y", Tensor::scalar(1.0));
  CHECK(ws.memory_report().count == 2);
  CHECK(ws.memory_report().to_json().find("\"total_bytes\":16") !=
        std::string::npos);
}

TEST_CASE("reset") {
  Workspace ws;
  ws.feed("x", Tensor::scalar(1.0));
  ws.feed("y", Tensor::scalar(2.0));
  ws.reset("x");
  CHECK_THROWS_AS(ws.fetch("x"), ExecutionError);
  CHECK(ws.fetch("y").scalar_value() == 2.0);
  ws.reset_all();
  CHECK(ws.memory_report().total_bytes == 0);
  CHECK(ws.memory_report().count == 0);
}

TEST_CASE("a reset weight is rebuilt by its fill op") {
  Workspace ws(3);
  GraphDef init;
  init.ops = {make_op("FillGaussian", {}, {"W"},
                      {{"shape", std::vector<int64_t>{3, 2}}, {"seed", int64_t{1}}},
                      "init")};
  init.targets = {"W"};
  auto cg = compile(ws, init);
  run(ws, *cg);
  Tensor first = ws.fetch("W");
  ws.reset("W");
  run(ws, *cg);
  CHECK(ws.fetch("W").shape() == Shape{3, 2});
  CHECK(ws.fetch("W").identical(first));
}

TEST_CASE("graphs in one workspace share tensors by name") {
  Workspace ws;
  ws.feed("W", Tensor::scalar(1.0));
  GraphDef train;
  train.ops = {make_op("Scale", {"W"}, {"W"}, {{"alpha", 2.0}}, "double")};
  train.optimized = true;
  train.targets = {"W"};
  GraphDef eval;
  eval.ops = {make_op("Square", {"W"}, {"y"}, {}, "sq")};
  eval.targets = {"y"};
  CompileOptions as_written;
  as_written.optimize = false;
  auto t = compile(ws, train, as_written);
  auto e = compile(ws, eval);
  ws.add_graph("train", t);
  ws.add_graph("eval", e);
  CHECK(ws.graph_names() == std::vector<std::string>{"eval", "train"});
  run(ws, *ws.graph("train"));
  run(ws, *ws.graph("eval"));
  CHECK(ws.fetch("y").scalar_value() == 4.0);
}

TEST_CASE("ignore writes never touch fetchable tensors") {
  Workspace ws;
  ws.feed("x", Tensor::scalar(5.0));
  Tensor& sink = ws.tensor_for_write("ignore");
  sink.resize({100}, DType::kFloat64);
  sink.fill(-1.0);
  CHECK(ws.fetch("x").scalar_value() == 5.0);
  CHECK(ws.tensor_names() == std::vector<TensorName>{"x"});
  // The sink counts once at its high-water size.
  CHECK(ws.memory_report().total_bytes == 8 + 800);
  CHECK_THROWS_AS(ws.feed("ignore", Tensor::scalar(1.0)), ExecutionError);
}

TEST_CASE("aliases resolve to the physical tensor") {
  Workspace ws;
  ws.feed("x", Tensor::scalar(3.0));
  ws.set_alias("y", "x");
  CHECK(ws.fetch("y").scalar_value() == 3.0);
  CHECK(ws.resolve("y") == "x");
  ws.feed("y", Tensor::scalar(4.0));
  CHECK(ws.fetch("x").scalar_value() == 3.0);
  CHECK(ws.fetch("y").scalar_value() == 4.0);
  CHECK(ws.memory_report().count == 2);
}

TEST_CASE("random streams") {
  Workspace a(7), b(7);
  CounterRng ra = a.random_stream(int64_t{3}, 10);
  CounterRng rb = b.random_stream(int64_t{3}, 10);
  CHECK(ra.next_u64() == rb.next_u64());
  CounterRng u1 = a.random_stream(std::nullopt, 4);
  CounterRng u2 = a.random_stream(std::nullopt, 4);
  CHECK(u1.next_u64() != u2.next_u64());
  Workspace c(8);
  CHECK(c.random_stream(int64_t{3}, 1).next_u64() !=
        b.random_stream(int64_t{3}, 1).next_u64());
}

TEST_CASE("dten layout and round trip") {
  Tensor t = Tensor::from_values({2, 3}, DType::kFloat32,
                                 std::vector<double>{1, 2, 3, 4, 5, 6});
  std::ostringstream os;
  write_dten(os, t);
  std::string bytes = os.str();
  REQUIRE(bytes.size() == 4 + 1 + 1 + 2 * 4 + 6 * 4);
  CHECK(bytes.substr(0, 4) == "DTEN");
  CHECK(bytes[4] == 0);
  CHECK(bytes[5] == 2);
  CHECK(bytes[6] == 2);
  CHECK(bytes[10] == 3);
  std::istringstream is(bytes);
  Tensor back = read_dten(is);
  CHECK(back.identical(t));

  std::istringstream bad("DTEX\x01\x00");
  CHECK_THROWS_AS(read_dten(bad), Error);
  std::istringstream truncated(bytes.substr(0, bytes.size() - 1));
  CHECK_THROWS_AS(read_dten(truncated), Error);

  Tensor s = Tensor::scalar(-0.0);
  std::ostringstream so;
  write_dten(so, s);
  CHECK(so.str().size() == 4 + 1 + 1 + 8);
}

}  // namespace
}  // namespace tgraph
