// Copyright (C) 2026 obbkit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Flat binary container for named float arrays (PAM weights and feature
// fixtures). Layout, all integers little-endian:
//
//   "OBKT"  u32 version(=1)  u32 count
//   count x { u16 name_len, name bytes, u32 rank (1..4), u32 dims[rank],
//             f32 data[prod(dims)] }
//
// Arrays of rank < 4 are left-padded with ones when read as a DenseTensor.

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "obbkit/error.hpp"
#include "obbkit/pam.hpp"
#include "obbkit/tensor.hpp"

namespace obbkit {

struct NamedArray {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
};

using TensorArchive = std::map<std::string, NamedArray>;

namespace detail {

template <typename U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    U out{};
    auto* src = reinterpret_cast<const unsigned char*>(&v);
    auto* dst = reinterpret_cast<unsigned char*>(&out);
    for (std::size_t i = 0; i < sizeof(U); ++i) dst[i] = src[sizeof(U) - 1 - i];
    return out;
  }
  return v;
}

template <typename U>
void put(std::ostream& os, U v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename U>
U get(std::istream& is) {
  U v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  require(static_cast<bool>(is), ErrorKind::schema, "tensor archive truncated");
  return to_little(v);
}

}  // namespace detail

inline void write_archive(std::ostream& os, const TensorArchive& archive) {
  os.write("OBKT", 4);
  detail::put<std::uint32_t>(os, 1);
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(archive.size()));
  for (const auto& [name, arr] : archive) {
    require(!arr.dims.empty() && arr.dims.size() <= 4, ErrorKind::invalid_argument,
            "array '" + name + "' must have rank 1..4");
    std::size_t numel = 1;
    for (auto d : arr.dims) numel *= d;
    require(numel == arr.data.size(), ErrorKind::shape_mismatch,
            "array '" + name + "' data length does not match dims");
    detail::put<std::uint16_t>(os, static_cast<std::uint16_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(arr.dims.size()));
    for (auto d : arr.dims) detail::put<std::uint32_t>(os, d);
    for (float v : arr.data) detail::put<std::uint32_t>(os, std::bit_cast<std::uint32_t>(v));
  }
  require(static_cast<bool>(os), ErrorKind::io, "failed writing tensor archive");
}

inline TensorArchive read_archive(std::istream& is) {
  char magic[4] = {};
  is.read(magic, 4);
  require(is && std::memcmp(magic, "OBKT", 4) == 0, ErrorKind::schema,
          "not a tensor archive (bad magic)");
  const auto version = detail::get<std::uint32_t>(is);
  require(version == 1, ErrorKind::schema,
          "unsupported tensor archive version " + std::to_string(version));
  const auto count = detail::get<std::uint32_t>(is);
  TensorArchive archive;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = detail::get<std::uint16_t>(is);
    std::string name(len, '\0');
    is.read(name.data(), len);
    require(static_cast<bool>(is), ErrorKind::schema, "tensor archive truncated");
    NamedArray arr;
    const auto rank = detail::get<std::uint32_t>(is);
    require(rank >= 1 && rank <= 4, ErrorKind::schema, "array '" + name + "' has invalid rank");
    std::size_t numel = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      arr.dims.push_back(detail::get<std::uint32_t>(is));
      numel *= arr.dims.back();
    }
    arr.data.resize(numel);
    for (auto& v : arr.data) v = std::bit_cast<float>(detail::get<std::uint32_t>(is));
    archive.emplace(std::move(name), std::move(arr));
  }
  return archive;
}

inline DenseTensor as_tensor(const NamedArray& arr) {
  std::array<std::size_t, 4> d{1, 1, 1, 1};
  const std::size_t offset = 4 - arr.dims.size();
  for (std::size_t i = 0; i < arr.dims.size(); ++i) d[offset + i] = arr.dims[i];
  return DenseTensor(Shape4{d[0], d[1], d[2], d[3]}, arr.data);
}

inline NamedArray from_tensor(const DenseTensor& t) {
  const Shape4 s = t.shape();
  return {{static_cast<std::uint32_t>(s.n), static_cast<std::uint32_t>(s.c),
           static_cast<std::uint32_t>(s.h), static_cast<std::uint32_t>(s.w)},
          {t.data().begin(), t.data().end()}};
}

inline NamedArray from_matrix(const Matrix& m) {
  return {{static_cast<std::uint32_t>(m.rows), static_cast<std::uint32_t>(m.cols)}, m.data};
}

/// Array names: w0, w1, branch_3x3, branch_1x3, branch_3x1, branch_3x3_dil,
/// fuse_3x3 and meta = [reduction, dilation, eta].
inline TensorArchive pam_to_archive(const PamWeights& w) {
  return {{"w0", from_matrix(w.w0)},
          {"w1", from_matrix(w.w1)},
          {"branch_3x3", from_tensor(w.branch_3x3)},
          {"branch_1x3", from_tensor(w.branch_1x3)},
          {"branch_3x1", from_tensor(w.branch_3x1)},
          {"branch_3x3_dil", from_tensor(w.branch_3x3_dil)},
          {"fuse_3x3", from_tensor(w.fuse_3x3)},
          {"meta",
           {{3},
            {static_cast<float>(w.reduction), static_cast<float>(w.dilation),
             static_cast<float>(w.eta)}}}};
}

inline PamWeights pam_from_archive(const TensorArchive& archive) {
  auto find = [&](const std::string& name) -> const NamedArray& {
    auto it = archive.find(name);
    require(it != archive.end(), ErrorKind::schema, "PAM weights missing array '" + name + "'");
    return it->second;
  };
  auto matrix = [&](const std::string& name) {
    const auto& arr = find(name);
    require(arr.dims.size() == 2, ErrorKind::schema, "'" + name + "' must be a matrix");
    return Matrix{arr.dims[0], arr.dims[1], arr.data};
  };
  const auto& meta = find("meta");
  require(meta.data.size() == 3, ErrorKind::schema, "'meta' must hold 3 values");
  PamWeights w{matrix("w0"),
               matrix("w1"),
               as_tensor(find("branch_3x3")),
               as_tensor(find("branch_1x3")),
               as_tensor(find("branch_3x1")),
               as_tensor(find("branch_3x3_dil")),
               as_tensor(find("fuse_3x3")),
               static_cast<std::size_t>(meta.data[0]),
               static_cast<std::size_t>(meta.data[1]),
               meta.data[2]};
  w.validate(w.w0.cols);
  return w;
}

inline PamWeights load_pam_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path);
  return pam_from_archive(read_archive(in));
}

inline void save_pam_weights(const std::string& path, const PamWeights& w) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path);
  write_archive(out, pam_to_archive(w));
}

}  // namespace obbkit
