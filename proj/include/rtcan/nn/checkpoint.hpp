// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "rtcan/core/errors.hpp"
#include "rtcan/core/tensor.hpp"
#include "rtcan/nn/module.hpp"

namespace rtcan::nn {

// Named-tensor archive: magic, config hash, then {name, kind, shape, f32 data}
// records. Little-endian, f32 payloads regardless of the in-memory scalar type.
inline constexpr char kArchiveMagic[8] = {'R', 'T', 'C', 'K', 'P', 'T', '0', '1'};

namespace detail {
template <typename T>
void write_pod(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T read_pod(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}
}  // namespace detail

struct ArchiveTensor {
  uint8_t kind = 0;  // 0 = parameter, 1 = buffer
  Tensor<float> data;
};

template <typename T>
void save_archive(const std::filesystem::path& path, uint64_t config_hash, Module<T>& module) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open archive for writing: " + path.string());
  os.write(kArchiveMagic, sizeof(kArchiveMagic));
  detail::write_pod(os, config_hash);

  const auto params = module.named_parameters();
  const auto buffers = module.named_buffers();
  detail::write_pod(os, uint32_t(params.size() + buffers.size()));

  auto write_tensor = [&os](const std::string& name, uint8_t kind, const Tensor<T>& t) {
    detail::write_pod(os, uint32_t(name.size()));
    os.write(name.data(), std::streamsize(name.size()));
    detail::write_pod(os, kind);
    detail::write_pod(os, uint32_t(t.dim()));
    for (int i = 0; i < t.dim(); ++i) detail::write_pod(os, int64_t(t.size(i)));
    if constexpr (std::is_same_v<T, float>) {
      os.write(reinterpret_cast<const char*>(t.data()), std::streamsize(t.numel() * 4));
    } else {
      for (int64_t i = 0; i < t.numel(); ++i) detail::write_pod(os, float(t[i]));
    }
  };
  for (const auto& [name, p] : params) write_tensor(name, 0, p.value());
  for (const auto& [name, b] : buffers) write_tensor(name, 1, *b);
  if (!os) throw IoError("failed writing archive: " + path.string());
}

struct Archive {
  uint64_t config_hash = 0;
  std::map<std::string, ArchiveTensor> tensors;
};

inline Archive load_archive(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open archive: " + path.string());
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kArchiveMagic, 8) != 0)
    throw IoError("not a checkpoint archive: " + path.string());
  Archive ar;
  ar.config_hash = detail::read_pod<uint64_t>(is);
  const uint32_t count = detail::read_pod<uint32_t>(is);
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = detail::read_pod<uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    ArchiveTensor at;
    at.kind = detail::read_pod<uint8_t>(is);
    const uint32_t ndim = detail::read_pod<uint32_t>(is);
    Shape shape(ndim);
    for (uint32_t d = 0; d < ndim; ++d) shape[d] = detail::read_pod<int64_t>(is);
    at.data = Tensor<float>(shape);
    is.read(reinterpret_cast<char*>(at.data.data()), std::streamsize(at.data.numel() * 4));
    if (!is) throw IoError("truncated archive: " + path.string());
    ar.tensors.emplace(std::move(name), std::move(at));
  }
  return ar;
}

/// Strict restore: the archive and module must carry exactly the same names
/// and shapes.
template <typename T>
void load_into_module(const Archive& ar, Module<T>& module) {
  size_t used = 0;
  auto assign = [&](const std::string& name, Tensor<T>& dst) {
    auto it = ar.tensors.find(name);
    if (it == ar.tensors.end()) throw IoError("archive is missing tensor '" + name + "'");
    if (it->second.data.shape() != dst.shape())
      throw IoError("archive tensor '" + name + "' has shape " +
                    shape_str(it->second.data.shape()) + ", expected " + shape_str(dst.shape()));
    for (int64_t i = 0; i < dst.numel(); ++i) dst[i] = T(it->second.data[i]);
    ++used;
  };
  for (auto& [name, p] : module.named_parameters()) assign(name, p.value());
  for (auto& [name, b] : module.named_buffers()) assign(name, *b);
  if (used != ar.tensors.size())
    throw IoError("archive carries " + std::to_string(ar.tensors.size() - used) +
                  " tensor(s) unknown to the model");
}

}  // namespace rtcan::nn
