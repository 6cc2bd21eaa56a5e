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

#ifndef TGRAPH_WORKSPACE_H_
#define TGRAPH_WORKSPACE_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tgraph/graph.h"
#include "tgraph/rng.h"
#include "tgraph/tensor.h"

namespace tgraph {

class CompiledGraph;

struct MemoryReport {
  struct Entry {
    TensorName name;
    std::size_t bytes = 0;
  };
  std::vector<Entry> entries;
  std::size_t total_bytes = 0;
  std::size_t count = 0;

  std::string to_json() const;
};

// "<anchor>/<slot>", or the bare slot when the anchor is empty (global).
std::string slot_name(std::string_view anchor, std::string_view slot);

// Owner of every named tensor and compiled graph. Graphs exchange data only
// through names held here. Single writer: one run or feed at a time.
class Workspace {
 public:
  explicit Workspace(uint64_t seed = 0) : seed_(seed) {}
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  // Creates or overwrites `name`. Throws ShapeError on a length mismatch.
  void feed(const TensorName& name, const Shape& shape, DType dtype,
            std::span<const double> values);
  void feed(const TensorName& name, Tensor value);

  // Deep copy. Throws ExecutionError for unknown names and for "ignore".
  Tensor fetch(std::string_view name) const;

  bool has(std::string_view name) const { return find(name) != nullptr; }
  // Resolves aliases; nullptr when absent or not materialized.
  const Tensor* find(std::string_view name) const;
  Tensor* find(std::string_view name);
  // Writable slot for `name`, created on demand. Writing a name drops any
  // alias it carried. "ignore" yields the shared discard buffer.
  Tensor& tensor_for_write(const TensorName& name);

  void set_alias(const TensorName& name, const TensorName& physical);
  const TensorName& resolve(const TensorName& name) const;
  const std::map<TensorName, TensorName>& aliases() const { return aliases_; }

  void reset(std::string_view name);
  void reset_all();

  // Per-tensor bytes. Aliases own nothing; the ignore sink counts once at its
  // high-water size.
  MemoryReport memory_report() const;
  std::vector<TensorName> tensor_names() const;

  // Anchor-scoped storage shared between a Run-Op and its Gradient-Op.
  Tensor& stash(std::string_view anchor, std::string_view slot);

  uint64_t seed() const { return seed_; }
  void set_seed(uint64_t seed) {
    seed_ = seed;
    rng_counter_ = 0;
  }
  // A stream of `draws` values. With `op_seed` the stream is fixed by
  // (workspace seed, op_seed); otherwise it continues the workspace counter.
  CounterRng random_stream(std::optional<int64_t> op_seed, uint64_t draws);

  void add_graph(const std::string& name,
                 std::shared_ptr<const CompiledGraph> graph);
  std::shared_ptr<const CompiledGraph> graph(const std::string& name) const;
  std::vector<std::string> graph_names() const;

 private:
  std::map<TensorName, std::unique_ptr<Tensor>, std::less<>> tensors_;
  std::map<TensorName, TensorName> aliases_;
  std::map<std::string, std::shared_ptr<const CompiledGraph>> graphs_;
  Tensor ignore_sink_;
  uint64_t seed_ = 0;
  uint64_t rng_counter_ = 0;
};

// Tensor stashed by the Run-Op owning `anchor`. Throws ExecutionError naming
// anchor and slot when nothing was stashed.
const Tensor& anchor_fetch(const Workspace& ws, std::string_view anchor,
                           std::string_view slot);

}  // namespace tgraph

#endif  // TGRAPH_WORKSPACE_H_
