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

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <string_view>

namespace atsc::sim {

/// Mixes a run seed with a stream name into an independent 64-bit seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name);

/// Builds a generator whose state depends only on (seed, name).
std::mt19937_64 make_engine(std::uint64_t seed, std::string_view name);

// Lazily created generators keyed by name. Adding a stream never perturbs the
// draws of another one, so e.g. routing changes leave arrival sequences intact.
class RngStreams {
 public:
  explicit RngStreams(std::uint64_t seed = 0) : seed_(seed) {}

  std::mt19937_64& stream(std::string_view name);
  std::uint64_t seed() const { return seed_; }

  friend bool operator==(const RngStreams&, const RngStreams&) = default;

 private:
  std::uint64_t seed_;
  std::map<std::string, std::mt19937_64, std::less<>> streams_;
};

}  // namespace atsc::sim
