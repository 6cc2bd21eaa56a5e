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

#ifndef TGRAPH_ERRORS_H_
#define TGRAPH_ERRORS_H_

#include <stdexcept>
#include <string>

namespace tgraph {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed graph text. Line and column are 1-based.
class ParseError : public Error {
 public:
  ParseError(int line, int column, const std::string& what)
      : Error("line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// Structurally invalid graph: cycles, duplicate producers, unknown names.
class GraphError : public Error {
 public:
  using Error::Error;
};

// Failure while turning a GraphDef into a runnable CompiledGraph.
class CompileError : public Error {
 public:
  using Error::Error;
};

// Shape or dtype disagreement between tensors.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Failure while executing kernels against a workspace.
class ExecutionError : public Error {
 public:
  using Error::Error;
};

}  // namespace tgraph

#endif  // TGRAPH_ERRORS_H_
