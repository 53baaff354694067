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

#include "atsc/nn/checkpoint.hpp"

#include <fstream>
#include <iterator>

namespace atsc::nn {
namespace {

constexpr char kMagic[8] = {'A', 'T', 'S', 'C', 'C', 'K', 'P', 'T'};

std::uint64_t fnv1a(const std::byte* p, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<std::uint8_t>(p[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  template <typename T>
  void pod(T v) {
    const auto* p = reinterpret_cast<const std::byte*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
  }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::byte*>(p);
    out.insert(out.end(), b, b + n);
  }
  void str(const std::string& s) {
    pod(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<std::byte> out;
};

class Reader {
 public:
  Reader(const std::byte* p, std::size_t n) : p_(p), n_(n) {}
  template <typename T>
  T pod() {
    T v;
    std::memcpy(&v, take(sizeof(T)), sizeof(T));
    return v;
  }
  const std::byte* take(std::size_t n) {
    if (n > n_ - at_) throw CheckpointError("checkpoint truncated");
    const std::byte* r = p_ + at_;
    at_ += n;
    return r;
  }
  std::string str() {
    const auto len = pod<std::uint32_t>();
    const auto* b = take(len);
    return std::string(reinterpret_cast<const char*>(b), len);
  }
  bool done() const { return at_ == n_; }

 private:
  const std::byte* p_;
  std::size_t n_;
  std::size_t at_ = 0;
};

std::size_t dtype_size(DType d) {
  switch (d) {
    case DType::F32: return 4;
    case DType::F64: return 8;
  }
  throw CheckpointError("unknown dtype tag");
}

}  // namespace

const std::string& Checkpoint::meta(const std::string& key) const {
  const auto it = metadata.find(key);
  if (it == metadata.end()) throw CheckpointError("checkpoint has no metadata key '" + key + "'");
  return it->second;
}

std::vector<std::byte> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.pod(kCheckpointVersion);
  w.pod(static_cast<std::uint32_t>(ckpt.metadata.size()));
  w.pod(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [k, v] : ckpt.metadata) {
    w.str(k);
    w.str(v);
  }
  for (const auto& [name, rec] : ckpt.tensors) {
    w.str(name);
    w.pod(static_cast<std::uint8_t>(rec.dtype));
    w.pod(static_cast<std::uint8_t>(rec.shape.size()));
    for (Index d : rec.shape) w.pod(static_cast<std::uint64_t>(d));
    w.pod(static_cast<std::uint64_t>(rec.data.size()));
    w.bytes(rec.data.data(), rec.data.size());
  }
  w.pod(fnv1a(w.out.data(), w.out.size()));
  return std::move(w.out);
}

Checkpoint decode_checkpoint(const std::vector<std::byte>& bytes) {
  if (bytes.size() < sizeof kMagic + 8) throw CheckpointError("checkpoint truncated");
  const std::size_t body = bytes.size() - 8;
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body, 8);
  if (stored != fnv1a(bytes.data(), body)) throw CheckpointError("checkpoint checksum mismatch");

  Reader r(bytes.data(), body);
  if (std::memcmp(r.take(sizeof kMagic), kMagic, sizeof kMagic) != 0) throw CheckpointError("not a checkpoint file");
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const auto n_meta = r.pod<std::uint32_t>();
  const auto n_tensors = r.pod<std::uint32_t>();
  Checkpoint ckpt;
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = r.str();
    ckpt.metadata[k] = r.str();
  }
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    std::string name = r.str();
    TensorRecord rec;
    rec.dtype = static_cast<DType>(r.pod<std::uint8_t>());
    const auto rank = r.pod<std::uint8_t>();
    for (std::uint8_t d = 0; d < rank; ++d) rec.shape.push_back(static_cast<Index>(r.pod<std::uint64_t>()));
    const auto n = r.pod<std::uint64_t>();
    if (n != static_cast<std::uint64_t>(numel(rec.shape)) * dtype_size(rec.dtype)) {
      throw CheckpointError("tensor '" + name + "' payload does not match its shape");
    }
    const auto* p = r.take(n);
    rec.data.assign(p, p + n);
    ckpt.tensors[name] = std::move(rec);
  }
  if (!r.done()) throw CheckpointError("trailing bytes in checkpoint");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> bytes(raw.size());
  std::memcpy(bytes.data(), raw.data(), raw.size());
  return decode_checkpoint(bytes);
}

}  // namespace atsc::nn
