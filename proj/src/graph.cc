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

#include "tgraph/graph.h"

#include <algorithm>
#include <charconv>
#include <deque>
#include <set>
#include <sstream>
#include <unordered_set>

#include "tgraph/errors.h"
#include "tgraph/passes.h"

namespace tgraph {

namespace {

constexpr std::string_view kDelimiters = "=[]{},#\"";

bool is_delimiter(char c) {
  return kDelimiters.find(c) != std::string_view::npos;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, end);
  if (s.find_first_of(".eni") == std::string::npos) s += ".0";
  return s;
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  out += '"';
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F render) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += render(items[i]);
  }
  return out;
}

std::string format_value(const ArgValue& value) {
  struct Visitor {
    std::string operator()(int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return format_real(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
    std::string operator()(const std::string& v) const { return quote(v); }
    std::string operator()(const std::vector<int64_t>& v) const {
      return "[" + join(v, [](int64_t x) { return std::to_string(x); }) + "]";
    }
    std::string operator()(const std::vector<double>& v) const {
      if (v.empty()) return "real[]";
      return "[" + join(v, format_real) + "]";
    }
    std::string operator()(const std::vector<std::string>& v) const {
      if (v.empty()) return "str[]";
      return "[" + join(v, [](const std::string& x) { return quote(x); }) +
             "]";
    }
  };
  return std::visit(Visitor{}, value);
}

// Cursor over one line of graph text.
class LineReader {
 public:
  LineReader(std::string_view text, int line) : text_(text), line_(line) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(line_, static_cast<int>(pos_) + 1, what);
  }

  // Skips blanks; a '#' ends the line.
  void skip_space() {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '#') pos_ = text_.size();
  }

  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  bool consume(char c) {
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!consume(c)) fail(std::string("expected '") + c + "'");
  }

  // A run of non-blank, non-delimiter characters. May be empty.
  std::string_view word() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && !is_space(text_[pos_]) &&
           !is_delimiter(text_[pos_])) {
      ++pos_;
    }
    return text_.substr(start, pos_ - start);
  }

  std::string name(std::string_view what) {
    skip_space();
    std::size_t start = pos_;
    std::string_view w = word();
    if (w.empty()) {
      pos_ = start;
      fail("expected " + std::string(what));
    }
    if (!is_valid_tensor_name(w)) {
      pos_ = start;
      fail("invalid name '" + std::string(w) + "'");
    }
    return std::string(w);
  }

  std::string string_literal() {
    expect('"');
    std::string out;
    while (true) {
      if (pos_ >= text_.size()) fail("unterminated string");
      char c = text_[pos_++];
      if (c == '"') break;
      if (c == '\\') {
        if (pos_ >= text_.size()) fail("unterminated escape");
        char e = text_[pos_++];
        out += (e == 'n') ? '\n' : e;
      } else {
        out += c;
      }
    }
    return out;
  }

  double real(std::string_view token) {
    double v = 0.0;
    const char* first = token.data();
    if (!token.empty() && token[0] == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      fail("invalid number '" + std::string(token) + "'");
    }
    return v;
  }

  int64_t integer(std::string_view token) {
    int64_t v = 0;
    auto [ptr, ec] =
        std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      fail("invalid integer '" + std::string(token) + "'");
    }
    return v;
  }

  static bool looks_integral(std::string_view token) {
    if (token.empty()) return false;
    std::size_t i = (token[0] == '-' || token[0] == '+') ? 1 : 0;
    if (i == token.size()) return false;
    return std::all_of(token.begin() + static_cast<long>(i), token.end(),
                       [](char c) { return c >= '0' && c <= '9'; });
  }

  std::vector<TensorName> name_list() {
    expect('[');
    std::vector<TensorName> names;
    skip_space();
    if (consume(']')) return names;
    while (true) {
      names.push_back(name("tensor name"));
      skip_space();
      if (consume(']')) break;
      expect(',');
    }
    return names;
  }

  ArgValue list_value(std::string_view tag) {
    expect('[');
    skip_space();
    std::vector<std::string> strings;
    std::vector<std::string_view> tokens;
    bool quoted = peek() == '"';
    if (!consume(']')) {
      while (true) {
        skip_space();
        if (quoted) {
          strings.push_back(string_literal());
        } else {
          std::string_view t = word();
          if (t.empty()) fail("expected list element");
          tokens.push_back(t);
        }
        skip_space();
        if (consume(']')) break;
        expect(',');
      }
    }
    if (tag == "str" || quoted) {
      if (!tokens.empty()) fail("expected quoted string list");
      return strings;
    }
    bool as_real = tag == "real" ||
                   std::any_of(tokens.begin(), tokens.end(), [](auto t) {
                     return !looks_integral(t);
                   });
    if (tag == "int" && as_real) fail("expected integer list");
    if (as_real) {
      std::vector<double> out;
      for (auto t : tokens) out.push_back(real(t));
      return out;
    }
    std::vector<int64_t> out;
    for (auto t : tokens) out.push_back(integer(t));
    return out;
  }

  ArgValue value() {
    skip_space();
    if (peek() == '"') return string_literal();
    if (peek() == '[') return list_value("");
    std::size_t start = pos_;
    std::string_view token = word();
    if ((token == "int" || token == "real" || token == "str") &&
        peek() == '[') {
      return list_value(token);
    }
    if (token.empty()) {
      pos_ = start;
      fail("expected value");
    }
    if (token == "true") return true;
    if (token == "false") return false;
    if (looks_integral(token)) return integer(token);
    return real(token);
  }

  std::vector<Argument> args_block() {
    expect('{');
    std::vector<Argument> args;
    skip_space();
    if (consume('}')) return args;
    while (true) {
      skip_space();
      std::string key(word());
      if (key.empty()) fail("expected argument key");
      if (std::any_of(args.begin(), args.end(),
                      [&](const Argument& a) { return a.key == key; })) {
        fail("duplicate argument '" + key + "'");
      }
      skip_space();
      expect('=');
      args.push_back({key, value()});
      skip_space();
      if (consume('}')) break;
      expect(',');
    }
    return args;
  }

  // key=value where value is a bare word.
  std::pair<std::string, std::string> keyword() {
    skip_space();
    std::string key(word());
    if (key.empty()) fail("expected key=value");
    expect('=');
    return {key, std::string(word())};
  }

 private:
  std::string_view text_;
  int line_;
  std::size_t pos_ = 0;
};

OperatorDef parse_op(LineReader& in, std::size_t index) {
  OperatorDef op;
  in.skip_space();
  op.op_type = std::string(in.word());
  if (op.op_type.empty()) in.fail("expected operator type");
  bool has_anchor = false, has_role = false, has_inputs = false,
       has_outputs = false, has_args = false;
  auto once = [&](bool& seen, const char* field) {
    if (seen) in.fail(std::string("duplicate field '") + field + "'");
    seen = true;
  };
  while (!in.at_end()) {
    std::string_view key = in.word();
    if (key == "args" && in.peek() == '{') {
      once(has_args, "args");
      op.args = in.args_block();
      continue;
    }
    if (key.empty()) in.fail("expected operator field");
    in.expect('=');
    if (key == "anchor") {
      once(has_anchor, "anchor");
      op.anchor = std::string(in.word());
    } else if (key == "role") {
      once(has_role, "role");
      std::string_view role = in.word();
      if (role == "run") {
        op.role = OpRole::kRun;
      } else if (role == "grad") {
        op.role = OpRole::kGradient;
      } else {
        in.fail("unknown role '" + std::string(role) + "'");
      }
    } else if (key == "inputs") {
      once(has_inputs, "inputs");
      op.inputs = in.name_list();
    } else if (key == "outputs") {
      once(has_outputs, "outputs");
      op.outputs = in.name_list();
      if (op.outputs.empty()) in.fail("empty outputs list");
    } else {
      in.fail("unknown operator field '" + std::string(key) + "'");
    }
  }
  if (!has_outputs) in.fail("expected 'outputs=[...]'");
  if (!has_anchor) op.anchor = op.op_type + ":" + std::to_string(index);
  return op;
}

void parse_updater(LineReader& in, UpdaterSpec& spec) {
  while (!in.at_end()) {
    auto [key, value] = in.keyword();
    if (key == "rule") {
      auto rule = parse_update_rule(value);
      if (!rule) in.fail("unknown update rule '" + value + "'");
      spec.rule = *rule;
    } else if (key == "lr_tensor") {
      if (!is_valid_tensor_name(value)) in.fail("invalid lr tensor name");
      spec.lr_tensor = value;
    } else {
      double v = in.real(value);
      if (key == "lr") {
        spec.base_lr = v;
      } else if (key == "momentum") {
        spec.momentum = v;
      } else if (key == "rho") {
        spec.rho = v;
      } else if (key == "eps") {
        spec.eps = v;
      } else if (key == "beta1") {
        spec.beta1 = v;
      } else if (key == "beta2") {
        spec.beta2 = v;
      } else if (key == "decay") {
        spec.weight_decay = v;
      } else {
        in.fail("unknown updater key '" + key + "'");
      }
    }
  }
}

}  // namespace

bool is_valid_tensor_name(std::string_view name) {
  if (name.empty()) return false;
  return std::none_of(name.begin(), name.end(), [](char c) {
    return is_space(c) || c == '\n' || is_delimiter(c);
  });
}

const Argument* OperatorDef::find_arg(std::string_view key) const {
  for (const auto& a : args) {
    if (a.key == key) return &a;
  }
  return nullptr;
}

double OperatorDef::real_arg(std::string_view key, double fallback) const {
  const Argument* a = find_arg(key);
  if (!a) return fallback;
  if (auto* d = std::get_if<double>(&a->value)) return *d;
  if (auto* i = std::get_if<int64_t>(&a->value)) return static_cast<double>(*i);
  throw GraphError("argument '" + std::string(key) + "' of " + op_type +
                   " is not a number");
}

int64_t OperatorDef::int_arg(std::string_view key, int64_t fallback) const {
  const Argument* a = find_arg(key);
  if (!a) return fallback;
  if (auto* i = std::get_if<int64_t>(&a->value)) return *i;
  throw GraphError("argument '" + std::string(key) + "' of " + op_type +
                   " is not an integer");
}

bool OperatorDef::bool_arg(std::string_view key, bool fallback) const {
  const Argument* a = find_arg(key);
  if (!a) return fallback;
  if (auto* b = std::get_if<bool>(&a->value)) return *b;
  throw GraphError("argument '" + std::string(key) + "' of " + op_type +
                   " is not a boolean");
}

std::string OperatorDef::string_arg(std::string_view key,
                                    std::string_view fallback) const {
  const Argument* a = find_arg(key);
  if (!a) return std::string(fallback);
  if (auto* s = std::get_if<std::string>(&a->value)) return *s;
  throw GraphError("argument '" + std::string(key) + "' of " + op_type +
                   " is not a string");
}

std::optional<std::vector<int64_t>> OperatorDef::ints_arg(
    std::string_view key) const {
  const Argument* a = find_arg(key);
  if (!a) return std::nullopt;
  if (auto* v = std::get_if<std::vector<int64_t>>(&a->value)) return *v;
  throw GraphError("argument '" + std::string(key) + "' of " + op_type +
                   " is not an integer list");
}

OperatorDef& OperatorDef::set_arg(std::string key, ArgValue value) {
  for (auto& a : args) {
    if (a.key == key) {
      a.value = std::move(value);
      return *this;
    }
  }
  args.push_back({std::move(key), std::move(value)});
  return *this;
}

std::string_view update_rule_name(UpdateRule rule) {
  switch (rule) {
    case UpdateRule::kMomentum:
      return "momentum";
    case UpdateRule::kRMSProp:
      return "rmsprop";
    case UpdateRule::kAdam:
      return "adam";
  }
  return "momentum";
}

std::optional<UpdateRule> parse_update_rule(std::string_view name) {
  if (name == "momentum") return UpdateRule::kMomentum;
  if (name == "rmsprop") return UpdateRule::kRMSProp;
  if (name == "adam") return UpdateRule::kAdam;
  return std::nullopt;
}

GraphDef parse_graph(std::string_view text) {
  GraphDef g;
  std::set<std::string, std::less<>> run_anchors;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;

    LineReader in(line, line_no);
    if (in.at_end()) {
      if (end == text.size()) break;
      continue;
    }
    std::string_view directive = in.word();
    if (directive == "op") {
      OperatorDef op = parse_op(in, g.ops.size());
      if (op.role == OpRole::kRun && !op.anchor.empty() &&
          !run_anchors.insert(op.anchor).second) {
        throw ParseError(line_no, 1, "duplicate anchor '" + op.anchor + "'");
      }
      g.ops.push_back(std::move(op));
    } else if (directive == "graph") {
      in.skip_space();
      g.name = std::string(in.word());
    } else if (directive == "input") {
      g.external_inputs.push_back(in.name("input name"));
    } else if (directive == "target") {
      g.targets.push_back(in.name("target name"));
    } else if (directive == "grad") {
      DerivativePair pair;
      pair.objective = in.name("objective");
      in.skip_space();
      if (in.word() != "wrt") in.fail("expected 'wrt'");
      pair.wrt = in.name("wrt tensor");
      g.derivative_pairs.push_back(std::move(pair));
    } else if (directive == "alias") {
      TensorName from = in.name("alias name");
      g.aliases[from] = in.name("aliased tensor");
    } else if (directive == "optimized") {
      g.optimized = true;
    } else if (directive == "renamed") {
      g.renamed = true;
    } else if (directive == "updater") {
      if (g.updater) in.fail("duplicate updater block");
      g.updater.emplace();
      parse_updater(in, *g.updater);
    } else if (directive == "pair") {
      if (!g.updater) in.fail("'pair' before 'updater'");
      UpdatePair pair;
      pair.weight = in.name("weight name");
      pair.grad = in.name("gradient name");
      while (!in.at_end()) {
        auto [key, value] = in.keyword();
        if (key == "lr_mult") {
          pair.lr_mult = in.real(value);
        } else if (key == "decay_mult") {
          pair.decay_mult = in.real(value);
        } else {
          in.fail("unknown pair key '" + key + "'");
        }
      }
      g.updater->pairs.push_back(std::move(pair));
      continue;
    } else {
      in.fail("unknown directive '" + std::string(directive) + "'");
    }
    if (!in.at_end()) in.fail("unexpected trailing text");
    if (end == text.size()) break;
  }
  return g;
}

std::string serialize_graph(const GraphDef& g) {
  std::ostringstream os;
  os << "graph " << g.name << "\n";
  if (g.optimized) os << "optimized\n";
  if (g.renamed) os << "renamed\n";
  for (const auto& name : g.external_inputs) os << "input " << name << "\n";
  for (const auto& name : g.targets) os << "target " << name << "\n";
  for (const auto& p : g.derivative_pairs) {
    os << "grad " << p.objective << " wrt " << p.wrt << "\n";
  }
  for (const auto& [from, to] : g.aliases) {
    os << "alias " << from << " " << to << "\n";
  }
  if (g.updater) {
    const UpdaterSpec& u = *g.updater;
    os << "updater rule=" << update_rule_name(u.rule)
       << " lr=" << format_real(u.base_lr) << " lr_tensor=" << u.lr_tensor
       << " momentum=" << format_real(u.momentum)
       << " rho=" << format_real(u.rho) << " eps=" << format_real(u.eps)
       << " beta1=" << format_real(u.beta1)
       << " beta2=" << format_real(u.beta2)
       << " decay=" << format_real(u.weight_decay) << "\n";
    for (const auto& p : u.pairs) {
      os << "pair " << p.weight << " " << p.grad
         << " lr_mult=" << format_real(p.lr_mult)
         << " decay_mult=" << format_real(p.decay_mult) << "\n";
    }
  }
  auto names = [](const std::vector<TensorName>& v) {
    return "[" + join(v, [](const TensorName& n) { return n; }) + "]";
  };
  for (const auto& op : g.ops) {
    os << "op " << op.op_type << " anchor=" << op.anchor;
    if (op.role == OpRole::kGradient) os << " role=grad";
    os << " inputs=" << names(op.inputs) << " outputs=" << names(op.outputs);
    if (!op.args.empty()) {
      os << " args{"
         << join(op.args,
                 [](const Argument& a) {
                   return a.key + "=" + format_value(a.value);
                 })
         << "}";
    }
    os << "\n";
  }
  return os.str();
}

bool Topology::contains(std::string_view name) const {
  return find(name).has_value();
}

std::optional<int> Topology::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Topology::id(std::string_view name) const {
  auto found = find(name);
  if (!found) throw GraphError("unknown tensor '" + std::string(name) + "'");
  return *found;
}

std::vector<TensorName> Topology::children(std::string_view name) const {
  std::vector<TensorName> out;
  for (int c : children_[id(name)]) out.push_back(names_[c]);
  return out;
}

std::vector<TensorName> Topology::parents(std::string_view name) const {
  std::vector<TensorName> out;
  for (int p : parents_[id(name)]) out.push_back(names_[p]);
  return out;
}

int Topology::add_node(const TensorName& name) {
  auto [it, inserted] = index_.emplace(name, size());
  if (inserted) {
    names_.push_back(name);
    children_.emplace_back();
    parents_.emplace_back();
    producer_.push_back(kNoProducer);
  }
  return it->second;
}

Topology build_topology(const GraphDef& g) {
  Topology topo;
  for (const auto& name : g.external_inputs) topo.add_node(name);
  for (std::size_t i = 0; i < g.ops.size(); ++i) {
    const OperatorDef& op = g.ops[i];
    std::vector<int> in_ids, out_ids;
    for (const auto& name : op.inputs) {
      if (name != kIgnore) in_ids.push_back(topo.add_node(name));
    }
    for (const auto& name : op.outputs) {
      if (name == kIgnore) continue;
      int id = topo.add_node(name);
      if (topo.producer_[id] != Topology::kNoProducer) {
        throw GraphError("tensor '" + name + "' is produced by op " +
                         std::to_string(topo.producer_[id]) + " and op " +
                         std::to_string(i));
      }
      topo.producer_[id] = static_cast<int>(i);
      out_ids.push_back(id);
    }
    for (int out : out_ids) {
      for (int in : in_ids) {
        auto& parents = topo.parents_[out];
        if (std::find(parents.begin(), parents.end(), in) != parents.end()) {
          continue;
        }
        parents.push_back(in);
        topo.children_[in].push_back(out);
        ++topo.edge_count_;
      }
    }
  }

  // Kahn's algorithm; leftover nodes sit on or below a cycle.
  const int n = topo.size();
  std::vector<int> indegree(n);
  std::deque<int> ready;
  for (int v = 0; v < n; ++v) {
    indegree[v] = static_cast<int>(topo.parents_[v].size());
    if (indegree[v] == 0) ready.push_back(v);
  }
  int processed = 0;
  while (!ready.empty()) {
    int v = ready.front();
    ready.pop_front();
    ++processed;
    for (int c : topo.children_[v]) {
      if (--indegree[c] == 0) ready.push_back(c);
    }
  }
  if (processed != n) {
    int v = 0;
    while (indegree[v] == 0) ++v;
    // Every leftover node has a leftover parent; walking parents must revisit.
    std::vector<bool> seen(n, false);
    while (!seen[v]) {
      seen[v] = true;
      for (int p : topo.parents_[v]) {
        if (indegree[p] > 0) {
          v = p;
          break;
        }
      }
    }
    throw GraphError("cycle detected through tensor '" + topo.names_[v] +
                     "'");
  }
  return topo;
}

std::vector<TensorName> free_inputs(const GraphDef& g) {
  std::unordered_set<TensorName> produced, seen;
  for (const auto& op : g.ops) {
    for (const auto& out : op.outputs) produced.insert(out);
  }
  std::vector<TensorName> result;
  for (const auto& name : g.external_inputs) {
    if (seen.insert(name).second) result.push_back(name);
  }
  // A tensor read before it is first written is still fed from outside.
  std::unordered_set<TensorName> written;
  for (const auto& op : g.ops) {
    for (const auto& in : op.inputs) {
      if (in == kIgnore || written.count(in)) continue;
      if (seen.insert(in).second) result.push_back(in);
    }
    for (const auto& out : op.outputs) written.insert(out);
  }
  return result;
}

std::string export_dot(const GraphDef& g, const MarkSet* marks) {
  std::ostringstream os;
  os << "digraph g {\n";
  if (!g.name.empty()) os << "  graph [label=" << quote(g.name) << "];\n";
  std::map<TensorName, int> ids;
  auto tensor_id = [&](const TensorName& name) {
    auto [it, inserted] = ids.emplace(name, static_cast<int>(ids.size()));
    if (inserted) {
      os << "  t" << it->second << " [label=" << quote(name)
         << ", shape=ellipse";
      if (marks && !marks->is_marked(name)) os << ", style=dashed";
      os << "];\n";
    }
    return it->second;
  };
  for (const auto& name : g.external_inputs) tensor_id(name);
  for (std::size_t i = 0; i < g.ops.size(); ++i) {
    const OperatorDef& op = g.ops[i];
    for (const auto& name : op.inputs) tensor_id(name);
    for (const auto& name : op.outputs) tensor_id(name);
    bool dashed = marks && std::none_of(op.outputs.begin(), op.outputs.end(),
                                        [&](const TensorName& name) {
                                          return marks->is_marked(name);
                                        });
    os << "  op" << i << " [label=" << quote(op.op_type) << ", shape=box";
    if (dashed) os << ", style=dashed";
    os << "];\n";
    for (const auto& name : op.inputs) {
      os << "  t" << ids[name] << " -> op" << i << ";\n";
    }
    for (const auto& name : op.outputs) {
      os << "  op" << i << " -> t" << ids[name] << ";\n";
    }
  }
  os << "}\n";
  return os.str();
}

}  // namespace tgraph
