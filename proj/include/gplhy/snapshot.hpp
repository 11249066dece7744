#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "gplhy/common.hpp"
#include "gplhy/grid.hpp"

namespace gplhy {

// Field snapshot, binary little-endian:
//   magic "GPLHYFLD" (8 bytes), u32 version=1, u8 dtype (0=real64, 1=complex128),
//   3 reserved bytes, u32 nx,ny,nz, f64 Lx,Ly,Lz, f64 b, f64 lambda,
//   then raw samples, z fastest, complex as (re,im) pairs.

struct SnapshotData {
  Field field;
  double b = 0.0;
  double lambda = 0.0;
};

namespace detail {

inline constexpr char kSnapshotMagic[8] = {'G', 'P', 'L', 'H', 'Y', 'F', 'L', 'D'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_f64(std::ostream& os, double v) {
  const auto u = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline double get_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(u);
}

}  // namespace detail

inline void write_snapshot(const std::string& path, const Field& f, double b, double lambda) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open snapshot for writing: " + path);
  const bool real = f.is_real(0.0);
  os.write(detail::kSnapshotMagic, 8);
  detail::put_u32(os, detail::kSnapshotVersion);
  const unsigned char dtype = real ? 0 : 1;
  os.put(static_cast<char>(dtype));
  os.put('\0');
  os.put('\0');
  os.put('\0');
  detail::put_u32(os, static_cast<std::uint32_t>(f.grid.nx));
  detail::put_u32(os, static_cast<std::uint32_t>(f.grid.ny));
  detail::put_u32(os, static_cast<std::uint32_t>(f.grid.nz));
  detail::put_f64(os, f.grid.lx);
  detail::put_f64(os, f.grid.ly);
  detail::put_f64(os, f.grid.lz);
  detail::put_f64(os, b);
  detail::put_f64(os, lambda);
  for (const auto& v : f.values) {
    detail::put_f64(os, v.real());
    if (!real) detail::put_f64(os, v.imag());
  }
  if (!os) throw std::runtime_error("snapshot write failed: " + path);
}

inline SnapshotData read_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open snapshot: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, detail::kSnapshotMagic, 8) != 0)
    throw FormatError("snapshot: unknown magic in " + path);
  const std::uint32_t version = detail::get_u32(is);
  if (version != detail::kSnapshotVersion)
    throw FormatError("snapshot: unsupported version " + std::to_string(version));
  const int dtype = is.get();
  if (dtype != 0 && dtype != 1) throw FormatError("snapshot: unknown dtype");
  is.get();
  is.get();
  is.get();
  GridSpec g;
  g.nx = static_cast<int>(detail::get_u32(is));
  g.ny = static_cast<int>(detail::get_u32(is));
  g.nz = static_cast<int>(detail::get_u32(is));
  g.lx = detail::get_f64(is);
  g.ly = detail::get_f64(is);
  g.lz = detail::get_f64(is);
  SnapshotData out;
  out.b = detail::get_f64(is);
  out.lambda = detail::get_f64(is);
  g.validate();
  out.field = Field(g);
  for (auto& v : out.field.values) {
    const double re = detail::get_f64(is);
    const double im = dtype == 1 ? detail::get_f64(is) : 0.0;
    v = cdouble{re, im};
  }
  if (!is) throw FormatError("snapshot: truncated file " + path);
  return out;
}

}  // namespace gplhy
