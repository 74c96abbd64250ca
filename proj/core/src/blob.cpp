// SPDX-License-Identifier: Apache-2.0
#include "geofno/blob.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "geofno/error.hpp"

namespace geofno::blob {

namespace {

constexpr char kMagic[4] = {'G', 'F', 'N', 'O'};

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(std::string_view bytes) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<unsigned char>(bytes[i])) << (8 * i);
  return v;
}

void put_header(std::string& out, Code code, const Shape& shape) {
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_u8(out, static_cast<std::uint8_t>(code));
  put_u8(out, static_cast<std::uint8_t>(shape.size()));
  for (std::size_t d : shape) put_u64(out, d);
}

struct Header {
  Code code;
  Shape shape;
};

Header read_header(Reader& r) {
  const auto magic = r.take(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw FormatError("bad blob magic", r.offset() - 4);
  const std::uint32_t version = r.u32();
  if (version != kVersion) throw VersionError(version, kVersion);
  const std::uint64_t code_at = r.offset();
  const std::uint8_t code = r.u8();
  if (code < 1 || code > 3) throw FormatError("unknown blob dtype code " + std::to_string(code), code_at);
  const std::uint8_t rank = r.u8();
  Header h{static_cast<Code>(code), Shape(rank)};
  for (auto& d : h.shape) d = r.u64();
  return h;
}

std::size_t checked_count(const Shape& shape, std::size_t width, std::size_t available, std::uint64_t at) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d != 0 && n > available / d) throw FormatError("blob dimensions exceed payload", at);
    n *= d;
  }
  if (n > available / width || n * width != available) {
    throw FormatError("blob payload length " + std::to_string(available) + " does not match dims", at);
  }
  return n;
}

}  // namespace

std::size_t header_size(std::size_t rank) { return 10 + 8 * rank; }

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }
void put_u32(std::string& out, std::uint32_t v) { put_le(out, v); }
void put_u64(std::string& out, std::uint64_t v) { put_le(out, v); }
void put_f64(std::string& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

void Reader::need(std::size_t n) const {
  if (remaining() < n) {
    throw FormatError("truncated data: need " + std::to_string(n) + " bytes, " + std::to_string(remaining()) +
                          " left",
                      offset());
  }
}

std::uint8_t Reader::u8() {
  need(1);
  return static_cast<std::uint8_t>(bytes_[pos_++]);
}

std::uint32_t Reader::u32() {
  need(4);
  const auto v = get_le<std::uint32_t>(bytes_.substr(pos_));
  pos_ += 4;
  return v;
}

std::uint64_t Reader::u64() {
  need(8);
  const auto v = get_le<std::uint64_t>(bytes_.substr(pos_));
  pos_ += 8;
  return v;
}

double Reader::f64() { return std::bit_cast<double>(u64()); }

std::string_view Reader::take(std::size_t n) {
  need(n);
  const auto v = bytes_.substr(pos_, n);
  pos_ += n;
  return v;
}

std::string encode(const Tensor& tensor) {
  std::string out;
  const auto raw = tensor.raw();
  out.reserve(header_size(tensor.rank()) + raw.size() * 8);
  put_header(out, tensor.is_complex() ? Code::kComplex128 : Code::kReal64, tensor.shape());
  for (double v : raw) put_f64(out, v);
  return out;
}

std::string encode_mask(const std::vector<std::uint8_t>& mask, const Shape& shape) {
  if (shape_numel(shape) != mask.size()) throw DimensionError("mask length does not match its shape");
  std::string out;
  put_header(out, Code::kMask, shape);
  for (auto m : mask) put_u8(out, m ? 1 : 0);
  return out;
}

Tensor decode(std::string_view bytes, std::uint64_t base) {
  Reader r(bytes, base);
  const Header h = read_header(r);
  if (h.code == Code::kMask) throw FormatError("expected a numeric blob, found a mask", base + 8);
  const std::size_t width = h.code == Code::kComplex128 ? 16 : 8;
  const std::size_t n = checked_count(h.shape, width, r.remaining(), r.offset());
  std::vector<double> raw(n * (width / 8));
  for (auto& v : raw) v = r.f64();
  return Tensor::from_raw(h.shape, h.code == Code::kComplex128 ? Dtype::kComplex128 : Dtype::kReal64,
                          std::move(raw));
}

std::vector<std::uint8_t> decode_mask(std::string_view bytes, std::uint64_t base) {
  Reader r(bytes, base);
  const Header h = read_header(r);
  if (h.code != Code::kMask) throw FormatError("expected a mask blob", base + 8);
  const std::size_t n = checked_count(h.shape, 1, r.remaining(), r.offset());
  std::vector<std::uint8_t> out(n);
  for (auto& m : out) {
    const std::uint64_t at = r.offset();
    m = r.u8();
    if (m > 1) throw FormatError("mask entries must be 0 or 1", at);
  }
  return out;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = kDigits[v & 0xf];
  return s;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace geofno::blob
