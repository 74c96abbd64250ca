// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "geofno/tensor.hpp"

namespace geofno::blob {

/// Binary array container: magic "GFNO", u32 version, u8 dtype code, u8
/// rank, rank x u64 dims, then the row-major payload. All little-endian.
inline constexpr std::uint32_t kVersion = 1;

enum class Code : std::uint8_t { kReal64 = 1, kComplex128 = 2, kMask = 3 };

std::size_t header_size(std::size_t rank);

std::string encode(const Tensor& tensor);
/// Byte flags (0 or 1) of the given shape.
std::string encode_mask(const std::vector<std::uint8_t>& mask, const Shape& shape);

/// `base` is added to offsets reported by FormatError, for blobs embedded in
/// a larger file.
Tensor decode(std::string_view bytes, std::uint64_t base = 0);
std::vector<std::uint8_t> decode_mask(std::string_view bytes, std::uint64_t base = 0);

/// Appends little-endian scalars to a byte string.
void put_u8(std::string& out, std::uint8_t v);
void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);
void put_f64(std::string& out, double v);

/// Bounds-checked little-endian reader over a byte buffer.
class Reader {
 public:
  explicit Reader(std::string_view bytes, std::uint64_t base = 0) : bytes_(bytes), base_(base) {}
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string_view take(std::size_t n);
  std::size_t pos() const noexcept { return pos_; }
  std::uint64_t offset() const noexcept { return base_ + pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const;
  std::string_view bytes_;
  std::uint64_t base_;
  std::size_t pos_ = 0;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace geofno::blob
