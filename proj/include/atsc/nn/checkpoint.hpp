/*
 * Copyright 2026 The ATSC Lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "atsc/nn/tensor.hpp"

namespace atsc::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint layout assumes a little-endian host");

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DType : std::uint8_t { F32 = 1, F64 = 2 };

template <typename S>
constexpr DType dtype_of() {
  static_assert(std::is_same_v<S, float> || std::is_same_v<S, double>);
  return std::is_same_v<S, float> ? DType::F32 : DType::F64;
}

struct TensorRecord {
  Shape shape;
  DType dtype = DType::F64;
  std::vector<std::byte> data;  // row-major raw values

  friend bool operator==(const TensorRecord&, const TensorRecord&) = default;
};

/// Named tensors plus string metadata. The byte layout is described in
/// docs/checkpoint_format.md; a save/load round trip is bit-exact.
struct Checkpoint {
  std::map<std::string, std::string> metadata;
  std::map<std::string, TensorRecord> tensors;

  template <typename S>
  void put(const std::string& name, const Shape& shape, const Matrix<S>& values) {
    TensorRecord rec;
    rec.shape = shape;
    rec.dtype = dtype_of<S>();
    rec.data.resize(static_cast<std::size_t>(values.size()) * sizeof(S));
    std::memcpy(rec.data.data(), values.data(), rec.data.size());
    tensors[name] = std::move(rec);
  }

  template <typename S>
  void put(const std::string& name, const Tensor<S>& t) {
    put<S>(name, t.shape(), t.value());
  }

  /// Reads a tensor back, checking dtype and (when given) shape.
  template <typename S>
  Matrix<S> get(const std::string& name, const Shape& expected) const {
    const auto it = tensors.find(name);
    if (it == tensors.end()) throw CheckpointError("checkpoint has no tensor '" + name + "'");
    const TensorRecord& rec = it->second;
    if (rec.dtype != dtype_of<S>()) throw CheckpointError("tensor '" + name + "' has a different scalar type");
    if (rec.shape != expected) {
      throw CheckpointError("tensor '" + name + "' has shape " + shape_string(rec.shape) + ", expected " +
                            shape_string(expected));
    }
    const Index cols = expected.empty() ? 1 : expected.back();
    Matrix<S> m(numel(expected) / cols, cols);
    std::memcpy(m.data(), rec.data.data(), rec.data.size());
    return m;
  }

  const std::string& meta(const std::string& key) const;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Serialized form, exposed for tests and in-memory use.
std::vector<std::byte> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::byte>& bytes);

}  // namespace atsc::nn
