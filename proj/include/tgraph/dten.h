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

// Binary tensor files:
//
//   "DTEN"            4 bytes
//   dtype             u8 (0 = f32, 1 = f64)
//   rank              u8
//   dims              rank x u32, little-endian
//   data              numel elements, little-endian, row-major

#ifndef TGRAPH_DTEN_H_
#define TGRAPH_DTEN_H_

#include <iosfwd>
#include <string>

#include "tgraph/tensor.h"

namespace tgraph {

void write_dten(std::ostream& os, const Tensor& t);
// Throws Error on a bad magic, unknown dtype or truncated payload.
Tensor read_dten(std::istream& is);

void save_dten(const std::string& path, const Tensor& t);
Tensor load_dten(const std::string& path);

}  // namespace tgraph

#endif  // TGRAPH_DTEN_H_
