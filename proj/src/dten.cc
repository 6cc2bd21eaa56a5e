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

#include "tgraph/dten.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

namespace tgraph {

namespace {

constexpr char kMagic[4] = {'D', 'T', 'E', 'N'};

template <typename U>
void put_le(std::ostream& os, U v) {
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  }
  os.write(bytes, sizeof(U));
}

template <typename U>
U get_le(std::istream& is) {
  unsigned char bytes[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(U))) {
    throw Error("truncated tensor file");
  }
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<U>(bytes[i]) << (8 * i);
  }
  return v;
}

}  // namespace

void write_dten(std::ostream& os, const Tensor& t) {
  if (!t.materialized()) throw Error("cannot write an empty tensor");
  if (t.shape().size() > std::numeric_limits<uint8_t>::max()) {
    throw Error("rank too large for tensor file");
  }
  os.write(kMagic, sizeof(kMagic));
  put_le<uint8_t>(os, static_cast<uint8_t>(t.dtype()));
  put_le<uint8_t>(os, static_cast<uint8_t>(t.shape().size()));
  for (int64_t d : t.shape()) {
    if (d > std::numeric_limits<uint32_t>::max()) {
      throw Error("extent too large for tensor file");
    }
    put_le<uint32_t>(os, static_cast<uint32_t>(d));
  }
  if (t.dtype() == DType::kFloat32) {
    for (float v : t.data<float>()) put_le(os, std::bit_cast<uint32_t>(v));
  } else {
    for (double v : t.data<double>()) put_le(os, std::bit_cast<uint64_t>(v));
  }
  if (!os) throw Error("failed to write tensor file");
}

Tensor read_dten(std::istream& is) {
  char magic[4];
  if (!is.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw Error("not a tensor file (bad magic)");
  }
  auto code = get_le<uint8_t>(is);
  if (code > 1) throw Error("unknown dtype code " + std::to_string(code));
  auto dtype = static_cast<DType>(code);
  auto rank = get_le<uint8_t>(is);
  Shape shape(rank);
  for (auto& d : shape) d = get_le<uint32_t>(is);
  Tensor t(shape, dtype);
  if (dtype == DType::kFloat32) {
    for (float& v : t.data<float>()) v = std::bit_cast<float>(get_le<uint32_t>(is));
  } else {
    for (double& v : t.data<double>()) {
      v = std::bit_cast<double>(get_le<uint64_t>(is));
    }
  }
  return t;
}

void save_dten(const std::string& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_dten(os, t);
}

Tensor load_dten(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path + "'");
  return read_dten(is);
}

}  // namespace tgraph
