// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "xvgs/gaussian.hpp"

namespace xvgs {

// On-disk model format, little-endian throughout:
//   "XVGS"  magic
//   u32     version (currently 1)
//   u64     primitive count
//   f32     voxel_size
//   then per primitive 14 f32 values:
//   position xyz, log_scale xyz, rotation wxyz, opacity_logit, color rgb
inline constexpr char kCheckpointMagic[4] = {'X', 'V', 'G', 'S'};
inline constexpr uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u32(std::ostream& out, uint32_t v) {
  const char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                     static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
  out.write(b, 4);
}

inline void put_u64(std::ostream& out, uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(v >> (8 * i));
  out.write(b, 8);
}

inline void put_f32(std::ostream& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

inline bool get_bytes(std::istream& in, char* dst, size_t n) {
  in.read(dst, static_cast<std::streamsize>(n));
  return static_cast<size_t>(in.gcount()) == n;
}

inline bool get_u32(std::istream& in, uint32_t& v) {
  unsigned char b[4];
  if (!get_bytes(in, reinterpret_cast<char*>(b), 4)) return false;
  v = static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
      static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
  return true;
}

inline bool get_u64(std::istream& in, uint64_t& v) {
  unsigned char b[8];
  if (!get_bytes(in, reinterpret_cast<char*>(b), 8)) return false;
  v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return true;
}

inline bool get_f32(std::istream& in, float& v) {
  uint32_t bits;
  if (!get_u32(in, bits)) return false;
  std::memcpy(&v, &bits, 4);
  return true;
}

}  // namespace detail

/// Writes the model in the binary format above. Parameters are narrowed to
/// f32; round-tripping is bit-exact only for values already representable
/// in single precision.
inline void serialize_model(std::ostream& out, const GaussianModel& m) {
  out.write(kCheckpointMagic, 4);
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u64(out, static_cast<uint64_t>(m.size()));
  detail::put_f32(out, static_cast<float>(m.voxel_size));
  for (const Gaussian3D& g : m.gaussians) {
    const std::array<double, 14> vals = {
        g.position.x(),  g.position.y(),  g.position.z(),
        g.log_scale.x(), g.log_scale.y(), g.log_scale.z(),
        g.rotation.w,    g.rotation.x,    g.rotation.y,    g.rotation.z,
        g.opacity_logit,
        g.color.x(),     g.color.y(),     g.color.z()};
    for (double v : vals) detail::put_f32(out, static_cast<float>(v));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

inline GaussianModel deserialize_model(std::istream& in) {
  char magic[4];
  if (!detail::get_bytes(in, magic, 4))
    throw std::runtime_error("checkpoint: truncated header");
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  uint32_t version;
  if (!detail::get_u32(in, version))
    throw std::runtime_error("checkpoint: truncated header");
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  uint64_t count;
  float voxel_size;
  if (!detail::get_u64(in, count) || !detail::get_f32(in, voxel_size))
    throw std::runtime_error("checkpoint: truncated header");

  GaussianModel m;
  m.voxel_size = voxel_size;
  m.gaussians.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    float v[14];
    for (float& f : v)
      if (!detail::get_f32(in, f))
        throw std::runtime_error("checkpoint: truncated primitive data");
    Gaussian3D g;
    g.position = Vec3(v[0], v[1], v[2]);
    g.log_scale = Vec3(v[3], v[4], v[5]);
    g.rotation = Quat{v[6], v[7], v[8], v[9]};
    g.opacity_logit = v[10];
    g.color = Vec3(v[11], v[12], v[13]);
    m.gaussians.push_back(g);
  }
  return m;
}

inline void save_model(const std::filesystem::path& path, const GaussianModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");
  serialize_model(out, m);
}

inline GaussianModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  return deserialize_model(in);
}

}  // namespace xvgs
