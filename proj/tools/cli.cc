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

#include "cli.h"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "demos.h"
#include "tgraph/autodiff.h"
#include "tgraph/dten.h"
#include "tgraph/executor.h"
#include "tgraph/gradcheck.h"
#include "tgraph/graph.h"
#include "tgraph/kernels.h"
#include "tgraph/passes.h"
#include "tgraph/workspace.h"

namespace tgraph {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UsageError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os || !(os << content)) {
    throw ExecutionError("cannot write '" + path + "'");
  }
}

std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

DerivativePair parse_pair(const std::string& text) {
  std::size_t colon = text.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw UsageError("expected --grad <objective>:<wrt>, got '" + text + "'");
  }
  return {text.substr(0, colon), text.substr(colon + 1)};
}

std::map<TensorName, Tensor> load_feeds(const std::vector<std::string>& specs) {
  std::map<TensorName, Tensor> feeds;
  for (const auto& spec : specs) {
    std::size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      throw UsageError("expected --feed <name>=<file.dten>, got '" + spec +
                       "'");
    }
    std::string path = spec.substr(eq + 1);
    Tensor t;
    try {
      t = load_dten(path);
    } catch (const Error& e) {
      throw UsageError(path + ": " + e.what());
    }
    feeds[spec.substr(0, eq)] = std::move(t);
  }
  return feeds;
}

std::string file_stem(const TensorName& name) {
  std::string out = name;
  for (char& c : out) {
    if (c == '/' || c == ':' || c == '@') c = '_';
  }
  return out;
}

std::vector<TensorName> objectives_of(const GraphDef& g) {
  std::vector<TensorName> objs;
  for (const auto& p : g.derivative_pairs) {
    if (std::find(objs.begin(), objs.end(), p.objective) == objs.end()) {
      objs.push_back(p.objective);
    }
  }
  return objs;
}

// Maps an exception to the exit-code taxonomy. Shape errors count as
// compile failures until execution starts.
int classify(const std::exception& e, bool running) {
  if (dynamic_cast<const UsageError*>(&e) ||
      dynamic_cast<const ParseError*>(&e)) {
    return kExitUsage;
  }
  if (dynamic_cast<const CompileError*>(&e) ||
      dynamic_cast<const GraphError*>(&e)) {
    return kExitCompile;
  }
  if (dynamic_cast<const ShapeError*>(&e)) {
    return running ? kExitRuntime : kExitCompile;
  }
  if (dynamic_cast<const ExecutionError*>(&e)) return kExitRuntime;
  return running ? kExitRuntime : kExitUsage;
}

struct OptimizeArgs {
  std::string graph;
  std::vector<std::string> targets;
  std::vector<std::string> grads;
  bool no_inplace = false;
  bool strict = false;
  std::string dot;
  std::string output;
};

int cmd_optimize(const OptimizeArgs& a, std::ostream& out, std::ostream& err,
                 bool& running) {
  GraphDef g = parse_graph(read_file(a.graph));
  if (!a.targets.empty()) g.targets = a.targets;
  if (!a.grads.empty()) {
    g.derivative_pairs.clear();
    for (const auto& s : a.grads) g.derivative_pairs.push_back(parse_pair(s));
  }
  Workspace ws;
  CompileOptions options;
  options.inplace = !a.no_inplace;
  options.strict_shapes = a.strict;
  auto cg = compile(ws, g, options);
  for (const auto& w : cg->warnings()) err << "warning: " << w << "\n";

  running = true;
  std::string output = a.output.empty() ? a.graph + ".opt" : a.output;
  write_file(output, serialize_graph(cg->optimized()));
  if (!a.dot.empty()) {
    std::string before;
    if (g.renamed) {
      before = export_dot(g);
    } else {
      Topology topo = build_topology(g);
      std::vector<TensorName> keep;
      for (const auto& t : g.targets) {
        if (topo.contains(t)) keep.push_back(t);
      }
      for (const auto& o : objectives_of(g)) {
        if (topo.contains(o)) keep.push_back(o);
      }
      MarkSet marks = forward_prune(topo, keep);
      before = export_dot(g, &marks);
    }
    write_file(a.dot + ".before.dot", before);
    write_file(a.dot + ".after.dot", export_dot(cg->optimized()));
  }
  out << cg->stats().to_json() << "\n";
  return kExitOk;
}

struct RunArgs {
  std::string graph;
  std::vector<std::string> feeds;
  std::vector<std::string> fetches;
  std::string out_dir = ".";
  uint64_t seed = 0;
  bool memory = false;
  bool no_inplace = false;
};

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err,
            bool& running) {
  GraphDef g = parse_graph(read_file(a.graph));
  std::map<TensorName, Tensor> feeds = load_feeds(a.feeds);
  std::vector<TensorName> fetches = a.fetches;
  if (fetches.empty()) fetches = g.targets;
  if (!g.renamed) {
    for (const auto& name : fetches) {
      bool is_grad = false;
      for (const auto& p : g.derivative_pairs) {
        is_grad = is_grad || gradient_name(p.wrt) == name;
      }
      if (!is_grad && !feeds.count(name) &&
          std::find(g.targets.begin(), g.targets.end(), name) ==
              g.targets.end()) {
        g.targets.push_back(name);
      }
    }
  }
  Workspace ws(a.seed);
  for (const auto& [name, t] : feeds) ws.feed(name, t);
  CompileOptions options;
  options.inplace = !a.no_inplace;
  auto cg = compile(ws, g, options);
  for (const auto& w : cg->warnings()) err << "warning: " << w << "\n";

  running = true;
  run(ws, *cg);
  std::filesystem::path dir(a.out_dir);
  for (const auto& name : fetches) {
    Tensor t = ws.fetch(name);
    std::string path = (dir / (file_stem(name) + ".dten")).string();
    save_dten(path, t);
    out << name << " -> " << path << "\n";
  }
  if (a.memory) out << ws.memory_report().to_json() << "\n";
  return kExitOk;
}

struct GradcheckArgs {
  std::string graph;
  std::vector<std::string> grads;
  std::vector<std::string> feeds;
  double eps = 1e-6;
  double tol = 1e-6;
  double abs_floor = 1e-8;
  uint64_t seed = 0;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out, std::ostream&,
                  bool& running) {
  GraphDef g = parse_graph(read_file(a.graph));
  std::vector<DerivativePair> pairs = g.derivative_pairs;
  if (!a.grads.empty()) {
    pairs.clear();
    for (const auto& s : a.grads) pairs.push_back(parse_pair(s));
  }
  if (pairs.empty()) throw UsageError("no --grad pairs and none in the graph");
  std::map<TensorName, Tensor> feeds = load_feeds(a.feeds);
  GradCheckOptions options;
  options.eps = a.eps;
  options.tol = a.tol;
  options.abs_floor = a.abs_floor;
  options.seed = a.seed;
  running = true;
  GradCheckReport report = gradcheck(g, pairs, feeds, options);
  out << report.to_string();
  return report.passed() ? kExitOk : kExitCheckFailed;
}

int cmd_train(const TrainOptions& options, std::ostream& out, bool& running) {
  running = true;
  std::vector<TrainRow> rows = train_demo(options);
  out << "step,loss,lr\n";
  for (const auto& r : rows) {
    out << r.step << "," << format_real(r.loss) << "," << format_real(r.lr)
        << "\n";
  }
  return kExitOk;
}

int cmd_ops_list(std::ostream& out) {
  const KernelRegistry& kernels = KernelRegistry::global();
  const GradientRegistry& grads = GradientRegistry::global();
  out << "op_type,inputs,outputs,inplace_safe,has_gradient\n";
  for (const auto& type : kernels.op_types()) {
    const KernelSpec& spec = kernels.at(type);
    auto range = [](int lo, int hi) {
      return lo == hi ? std::to_string(lo)
                      : std::to_string(lo) + ".." + std::to_string(hi);
    };
    out << type << "," << range(spec.min_inputs, spec.max_inputs) << ","
        << range(spec.min_outputs, spec.max_outputs) << ","
        << (spec.inplace_safe ? "yes" : "no") << ","
        << (grads.has_gradient(type) ? "yes" : "no") << "\n";
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"tgraph: computation-graph optimizer and runtime"};
  app.name("tgraph");
  app.require_subcommand(1);

  OptimizeArgs opt;
  auto* optimize = app.add_subcommand(
      "optimize", "Prune, expand gradients and share buffers");
  optimize->add_option("graph", opt.graph, "Graph text file")->required();
  optimize->add_option("--targets", opt.targets, "Solving targets")
      ->delimiter(',');
  optimize->add_option("--grad", opt.grads, "Derivative pair obj:wrt");
  optimize->add_flag("--no-inplace", opt.no_inplace, "Skip buffer sharing");
  optimize->add_flag("--strict", opt.strict, "Strict shape checking");
  optimize->add_option("--dot", opt.dot,
                       "Write <prefix>.before.dot and <prefix>.after.dot");
  optimize->add_option("-o,--output", opt.output,
                       "Optimized graph file (default <graph>.opt)");

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Execute a graph");
  run_cmd->add_option("graph", run_args.graph, "Graph text file")->required();
  run_cmd->add_option("--feed", run_args.feeds, "name=file.dten");
  run_cmd->add_option("--fetch", run_args.fetches, "Tensor to write")
      ->delimiter(',');
  run_cmd->add_option("--out-dir", run_args.out_dir, "Output directory");
  run_cmd->add_option("--seed", run_args.seed, "Workspace RNG seed");
  run_cmd->add_flag("--memory", run_args.memory, "Print the memory report");
  run_cmd->add_flag("--no-inplace", run_args.no_inplace,
                    "Skip buffer sharing");

  TrainOptions train_opts;
  auto* train = app.add_subcommand("train", "Run a training demo");
  train->add_option("demo", train_opts.demo, "quadratic, linreg or rnn-unroll")
      ->required();
  train->add_option("--rule", train_opts.rule,
                    "sgd, momentum, rmsprop or adam");
  train->add_option("--lr", train_opts.lr, "Base learning rate");
  train->add_option("--steps", train_opts.steps, "Update steps");
  train->add_option("--seed", train_opts.seed, "Workspace RNG seed");
  train->add_option("--lr-policy", train_opts.lr_policy,
                    "fixed, step:<gamma>:<stepsize> or exp:<gamma>");

  GradcheckArgs gc;
  auto* gradcheck_cmd =
      app.add_subcommand("gradcheck", "Compare gradients to finite differences");
  gradcheck_cmd->add_option("graph", gc.graph, "Graph text file")->required();
  gradcheck_cmd->add_option("--grad", gc.grads, "Derivative pair obj:wrt");
  gradcheck_cmd->add_option("--feed", gc.feeds, "name=file.dten");
  gradcheck_cmd->add_option("--eps", gc.eps, "Finite-difference step");
  gradcheck_cmd->add_option("--tol", gc.tol, "Relative tolerance");
  gradcheck_cmd->add_option("--abs-floor", gc.abs_floor, "Absolute floor");
  gradcheck_cmd->add_option("--seed", gc.seed, "Workspace RNG seed");

  auto* ops = app.add_subcommand("ops", "Inspect the operator registry");
  ops->require_subcommand(1);
  auto* ops_list = ops->add_subcommand("list", "List registered op types");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  bool running = false;
  try {
    if (*optimize) return cmd_optimize(opt, out, err, running);
    if (*run_cmd) return cmd_run(run_args, out, err, running);
    if (*train) return cmd_train(train_opts, out, running);
    if (*gradcheck_cmd) return cmd_gradcheck(gc, out, err, running);
    if (*ops_list) return cmd_ops_list(out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return classify(e, running);
  }
  return kExitUsage;
}

}  // namespace tgraph
