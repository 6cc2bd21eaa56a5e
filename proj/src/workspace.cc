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

#include "tgraph/workspace.h"

#include <utility>

#include "json.hpp"
#include "tgraph/errors.h"

namespace tgraph {

std::string MemoryReport::to_json() const {
  nlohmann::json tensors = nlohmann::json::object();
  for (const auto& e : entries) tensors[e.name] = e.bytes;
  nlohmann::json j;
  j["tensors"] = tensors;
  j["total_bytes"] = total_bytes;
  j["count"] = count;
  return j.dump();
}

std::string slot_name(std::string_view anchor, std::string_view slot) {
  if (anchor.empty()) return std::string(slot);
  std::string out(anchor);
  out += '/';
  out += slot;
  return out;
}

void Workspace::feed(const TensorName& name, const Shape& shape, DType dtype,
                     std::span<const double> values) {
  feed(name, Tensor::from_values(shape, dtype, values));
}

void Workspace::feed(const TensorName& name, Tensor value) {
  if (name == kIgnore) throw ExecutionError("cannot feed the ignore sink");
  if (!is_valid_tensor_name(name)) {
    throw ExecutionError("invalid tensor name '" + name + "'");
  }
  if (!value.materialized()) {
    throw ExecutionError("cannot feed empty tensor to '" + name + "'");
  }
  aliases_.erase(name);
  value.set_name(name);
  auto& slot = tensors_[name];
  if (slot) {
    *slot = std::move(value);
  } else {
    slot = std::make_unique<Tensor>(std::move(value));
  }
}

Tensor Workspace::fetch(std::string_view name) const {
  if (name == kIgnore) throw ExecutionError("cannot fetch the ignore sink");
  const Tensor* t = find(name);
  if (!t) throw ExecutionError("unknown tensor '" + std::string(name) + "'");
  Tensor copy = *t;
  copy.set_name(std::string(name));
  return copy;
}

const Tensor* Workspace::find(std::string_view name) const {
  if (name == kIgnore) return nullptr;
  auto alias = aliases_.find(std::string(name));
  if (alias != aliases_.end()) name = alias->second;
  auto it = tensors_.find(name);
  if (it == tensors_.end() || !it->second->materialized()) return nullptr;
  return it->second.get();
}

Tensor* Workspace::find(std::string_view name) {
  return const_cast<Tensor*>(std::as_const(*this).find(name));
}

Tensor& Workspace::tensor_for_write(const TensorName& name) {
  if (name == kIgnore) return ignore_sink_;
  aliases_.erase(name);
  auto& slot = tensors_[name];
  if (!slot) {
    slot = std::make_unique<Tensor>();
    slot->set_name(name);
  }
  return *slot;
}

void Workspace::set_alias(const TensorName& name, const TensorName& physical) {
  if (name == physical) {
    aliases_.erase(name);
    return;
  }
  // The alias takes over the name; a stale buffer under it is released.
  tensors_.erase(name);
  aliases_[name] = physical;
}

const TensorName& Workspace::resolve(const TensorName& name) const {
  auto it = aliases_.find(name);
  return it == aliases_.end() ? name : it->second;
}

void Workspace::reset(std::string_view name) {
  std::string key(name);
  if (aliases_.erase(key)) return;
  tensors_.erase(key);
  for (auto it = aliases_.begin(); it != aliases_.end();) {
    it = (it->second == key) ? aliases_.erase(it) : std::next(it);
  }
}

void Workspace::reset_all() {
  tensors_.clear();
  aliases_.clear();
  ignore_sink_.release();
  rng_counter_ = 0;
}

MemoryReport Workspace::memory_report() const {
  MemoryReport report;
  for (const auto& [name, tensor] : tensors_) {
    if (!tensor->materialized()) continue;
    report.entries.push_back({name, tensor->nbytes()});
    report.total_bytes += tensor->nbytes();
    ++report.count;
  }
  if (ignore_sink_.materialized()) {
    report.entries.push_back(
        {std::string(kIgnore), ignore_sink_.capacity_bytes()});
    report.total_bytes += ignore_sink_.capacity_bytes();
    ++report.count;
  }
  return report;
}

std::vector<TensorName> Workspace::tensor_names() const {
  std::vector<TensorName> names;
  for (const auto& [name, tensor] : tensors_) {
    if (tensor->materialized()) names.push_back(name);
  }
  return names;
}

Tensor& Workspace::stash(std::string_view anchor, std::string_view slot) {
  return tensor_for_write(slot_name(anchor, slot));
}

CounterRng Workspace::random_stream(std::optional<int64_t> op_seed,
                                    uint64_t draws) {
  if (op_seed) {
    return CounterRng(mix64(seed_) ^ mix64(static_cast<uint64_t>(*op_seed) +
                                           0x632be59bd9b4e019ULL),
                      0);
  }
  CounterRng stream(mix64(seed_), rng_counter_);
  rng_counter_ += draws;
  return stream;
}

void Workspace::add_graph(const std::string& name,
                          std::shared_ptr<const CompiledGraph> graph) {
  graphs_[name] = std::move(graph);
}

std::shared_ptr<const CompiledGraph> Workspace::graph(
    const std::string& name) const {
  auto it = graphs_.find(name);
  if (it == graphs_.end()) {
    throw ExecutionError("unknown graph '" + name + "'");
  }
  return it->second;
}

std::vector<std::string> Workspace::graph_names() const {
  std::vector<std::string> names;
  for (const auto& [name, g] : graphs_) names.push_back(name);
  return names;
}

const Tensor& anchor_fetch(const Workspace& ws, std::string_view anchor,
                           std::string_view slot) {
  const Tensor* t = ws.find(slot_name(anchor, slot));
  if (!t) {
    throw ExecutionError("missing anchor data: anchor '" +
                         std::string(anchor) + "', slot '" +
                         std::string(slot) + "'");
  }
  return *t;
}

}  // namespace tgraph
