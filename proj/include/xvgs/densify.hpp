// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <unordered_set>
#include <vector>

#include "xvgs/accumulator.hpp"
#include "xvgs/adam.hpp"
#include "xvgs/gaussian.hpp"
#include "xvgs/voxel.hpp"

namespace xvgs {

/// How per-group statistics collapse into one selection score.
/// kAverage pools all groups first; a group whose views rarely see a
/// primitive can drown out a group that urgently wants it split.
/// kGroupMax scores each group on its own and takes the best, so a
/// primitive qualifies as soon as any single vantage class demands it.
enum class DensifyMode { kAverage, kGroupMax };

struct DensifyPolicy {
  double threshold = 0.0;  // selection threshold on the gradient score, > 0
  DensifyMode mode = DensifyMode::kGroupMax;
  int interval = 100;
  double prune_opacity = 0.005;
  size_t max_primitives = 200000;
};

/// Scale divisor applied to clones spawned by densification.
inline constexpr double kDensifyScaleShrink = 1.6;

/// Indices (ascending) whose selection score strictly exceeds the threshold.
inline std::vector<size_t> select_densify(const GradientAccumulator& acc,
                                          const DensifyPolicy& policy) {
  if (!(policy.threshold > 0.0))
    throw std::invalid_argument("select_densify: threshold must be positive");
  std::vector<size_t> out;
  for (size_t i = 0; i < acc.size(); ++i) {
    const double score = policy.mode == DensifyMode::kAverage ? acc.pooled_average(i)
                                                              : acc.max_group_average(i);
    if (score > policy.threshold) out.push_back(i);
  }
  return out;
}

/// Appends a shrunken clone at the voxel center of each selected primitive
/// whose cell has no center-anchored occupant yet, keeping at most one new
/// anchor per cell and never growing past policy.max_primitives. The grid
/// must describe the model as passed in; it is updated incrementally.
/// Optional accumulator and optimizer grow in lockstep with zero rows.
inline size_t densify(GaussianModel& m, const std::vector<size_t>& selected, VoxelGrid& grid,
                      const DensifyPolicy& policy, GradientAccumulator* acc = nullptr,
                      AdamOptimizer* opt = nullptr) {
  if (grid.voxel_size != m.voxel_size)
    throw std::invalid_argument("densify: voxel grid size mismatch");
  {
    const VoxelGrid fresh = voxel_grid_of(m);
    if (fresh.size() != grid.size())
      throw std::invalid_argument("densify: voxel grid is stale");
    for (const VoxelKey& k : fresh.keys)
      if (!grid.contains(k)) throw std::invalid_argument("densify: voxel grid is stale");
  }
  const size_t original_size = m.size();
  if (acc && acc->size() != original_size)
    throw std::invalid_argument("densify: accumulator size mismatch");
  if (opt && opt->size() != original_size)
    throw std::invalid_argument("densify: optimizer size mismatch");

  // Cells already holding a primitive exactly at their center are anchored;
  // densification adds at most one anchor per cell.
  std::unordered_set<VoxelKey, VoxelKeyHash> anchored;
  for (const Gaussian3D& g : m.gaussians) {
    const VoxelKey k = voxel_key(g.position, m.voxel_size);
    if (g.position == voxel_center(k, m.voxel_size)) anchored.insert(k);
  }

  size_t added = 0;
  const double shrink = std::log(kDensifyScaleShrink);
  for (size_t idx : selected) {
    if (idx >= original_size)
      throw std::invalid_argument("densify: selected index out of range");
    if (m.size() >= policy.max_primitives) break;
    const Gaussian3D& src = m.gaussians[idx];
    const VoxelKey k = voxel_key(src.position, m.voxel_size);
    if (anchored.count(k)) continue;

    Gaussian3D clone = src;
    clone.position = voxel_center(k, m.voxel_size);
    clone.log_scale.array() -= shrink;
    m.gaussians.push_back(clone);
    anchored.insert(k);
    grid.insert(k);  // clone stays in the source cell, so the set is unchanged
    ++added;
  }
  if (acc) acc->extend(added);
  if (opt) opt->extend(added);
  return added;
}

/// Removes primitives whose opacity fell below the floor, compacting the
/// survivors in order along with any attached accumulator/optimizer rows.
inline size_t prune(GaussianModel& m, const DensifyPolicy& policy,
                    GradientAccumulator* acc = nullptr, AdamOptimizer* opt = nullptr) {
  std::vector<uint8_t> keep(m.size());
  size_t kept = 0;
  for (size_t i = 0; i < m.size(); ++i) {
    keep[i] = sigmoid(m.gaussians[i].opacity_logit) < policy.prune_opacity ? 0 : 1;
    kept += keep[i];
  }
  if (kept == m.size()) return 0;
  size_t out = 0;
  for (size_t i = 0; i < m.size(); ++i)
    if (keep[i]) m.gaussians[out++] = m.gaussians[i];
  m.gaussians.resize(out);
  if (acc) acc->compact(keep);
  if (opt) opt->compact(keep);
  return keep.size() - kept;
}

}  // namespace xvgs
