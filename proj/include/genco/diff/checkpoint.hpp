// Copyright 2026 The genco Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "genco/diff/tape.hpp"

namespace genco::diff {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary layout (all integers little-endian):
///   magic "GCKP" | u32 version | u32 dtype bytes (4 or 8) | u32 tensor count
///   per tensor: u32 name length | name | u32 rank | u64 dims[rank] | values
inline constexpr char kCheckpointMagic[4] = {'G', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw CheckpointError("checkpoint truncated");
  return v;
}

}  // namespace detail

template <typename Scalar>
void save_checkpoint(std::ostream& out, const ParameterStore<Scalar>& store) {
  static_assert(std::is_same_v<Scalar, float> || std::is_same_v<Scalar, double>);
  out.write(kCheckpointMagic, 4);
  detail::put<std::uint32_t>(out, kCheckpointVersion);
  detail::put<std::uint32_t>(out, sizeof(Scalar));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, p] : store) {
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put<std::uint32_t>(out, 2);
    detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(p.value.rows()));
    detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(p.value.cols()));
    out.write(reinterpret_cast<const char*>(p.value.data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(Scalar)));
  }
  if (!out) throw CheckpointError("checkpoint write failed");
}

/// Loads values into an existing store. The checkpoint must carry exactly
/// the store's parameter names with identical shapes and dtype.
template <typename Scalar>
void load_checkpoint(std::istream& in, ParameterStore<Scalar>& store) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw CheckpointError("not a checkpoint (bad magic)");
  const auto version = detail::get<std::uint32_t>(in);
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const auto dtype = detail::get<std::uint32_t>(in);
  if (dtype != sizeof(Scalar))
    throw CheckpointError("checkpoint dtype is " + std::to_string(dtype * 8) + "-bit, model is " +
                          std::to_string(sizeof(Scalar) * 8) + "-bit");
  const auto count = detail::get<std::uint32_t>(in);
  if (count != store.size())
    throw CheckpointError("checkpoint has " + std::to_string(count) + " tensors, model expects " +
                          std::to_string(store.size()));
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = detail::get<std::uint32_t>(in);
    if (len > 4096) throw CheckpointError("corrupt tensor name length");
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw CheckpointError("checkpoint truncated");
    if (!store.contains(name)) throw CheckpointError("unexpected tensor '" + name + "'");
    auto& p = store.at(name);
    const auto rank = detail::get<std::uint32_t>(in);
    if (rank != 2) throw CheckpointError("tensor '" + name + "' has unsupported rank");
    const auto rows = detail::get<std::uint64_t>(in);
    const auto cols = detail::get<std::uint64_t>(in);
    if (rows != static_cast<std::uint64_t>(p.value.rows()) ||
        cols != static_cast<std::uint64_t>(p.value.cols()))
      throw CheckpointError("shape mismatch for '" + name + "'");
    if (!in.read(reinterpret_cast<char*>(p.value.data()),
                 static_cast<std::streamsize>(p.value.size() * sizeof(Scalar))))
      throw CheckpointError("checkpoint truncated in '" + name + "'");
  }
}

template <typename Scalar>
void save_checkpoint_file(const std::string& path, const ParameterStore<Scalar>& store) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path);
  save_checkpoint(out, store);
}

template <typename Scalar>
void load_checkpoint_file(const std::string& path, ParameterStore<Scalar>& store) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  load_checkpoint(in, store);
}

/// Name of the first stored tensor, used to tell model kinds apart.
inline std::string checkpoint_first_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw CheckpointError("not a checkpoint (bad magic)");
  detail::get<std::uint32_t>(in);
  detail::get<std::uint32_t>(in);
  if (detail::get<std::uint32_t>(in) == 0) return {};
  const auto len = detail::get<std::uint32_t>(in);
  if (len > 4096) throw CheckpointError("corrupt tensor name length");
  std::string name(len, '\0');
  if (!in.read(name.data(), len)) throw CheckpointError("checkpoint truncated");
  return name;
}

}  // namespace genco::diff
