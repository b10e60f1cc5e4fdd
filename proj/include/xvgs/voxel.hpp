// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <unordered_set>

#include "xvgs/gaussian.hpp"
#include "xvgs/math.hpp"

namespace xvgs {

struct VoxelKey {
  int64_t x = 0, y = 0, z = 0;

  friend bool operator==(const VoxelKey&, const VoxelKey&) = default;
  friend auto operator<=>(const VoxelKey&, const VoxelKey&) = default;
};

struct VoxelKeyHash {
  size_t operator()(const VoxelKey& k) const {
    // Mix the three lanes through distinct odd multipliers; collisions only
    // cost probe time so this does not need to be cryptographic.
    uint64_t h = static_cast<uint64_t>(k.x) * 0x9e3779b97f4a7c15ull;
    h ^= static_cast<uint64_t>(k.y) * 0xc2b2ae3d27d4eb4full + (h << 6) + (h >> 2);
    h ^= static_cast<uint64_t>(k.z) * 0x165667b19e3779f9ull + (h << 6) + (h >> 2);
    return static_cast<size_t>(h);
  }
};

/// Componentwise floor(p / voxel_size). Positions exactly on a voxel face
/// belong to the higher cell, matching floor semantics.
inline VoxelKey voxel_key(const Vec3& p, double voxel_size) {
  if (!(voxel_size > 0.0)) throw std::invalid_argument("voxel_key: voxel_size must be positive");
  if (!p.allFinite()) throw std::invalid_argument("voxel_key: non-finite position");
  return {static_cast<int64_t>(std::floor(p.x() / voxel_size)),
          static_cast<int64_t>(std::floor(p.y() / voxel_size)),
          static_cast<int64_t>(std::floor(p.z() / voxel_size))};
}

/// Center point of a voxel cell, (k + 0.5) * voxel_size per axis.
inline Vec3 voxel_center(const VoxelKey& k, double voxel_size) {
  return {(static_cast<double>(k.x) + 0.5) * voxel_size,
          (static_cast<double>(k.y) + 0.5) * voxel_size,
          (static_cast<double>(k.z) + 0.5) * voxel_size};
}

/// Set of occupied voxel cells at a fixed edge length.
struct VoxelGrid {
  double voxel_size = 0.05;
  std::unordered_set<VoxelKey, VoxelKeyHash> keys;

  bool contains(const VoxelKey& k) const { return keys.count(k) != 0; }
  void insert(const VoxelKey& k) { keys.insert(k); }
  size_t size() const { return keys.size(); }
};

/// Occupied cells of a model at its own voxel_size. Duplicate cells collapse.
inline VoxelGrid voxel_grid_of(const GaussianModel& m) {
  VoxelGrid grid;
  grid.voxel_size = m.voxel_size;
  grid.keys.reserve(m.size());
  for (const Gaussian3D& g : m.gaussians) grid.insert(voxel_key(g.position, m.voxel_size));
  return grid;
}

}  // namespace xvgs
