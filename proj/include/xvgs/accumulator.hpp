// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "xvgs/render_backward.hpp"

namespace xvgs {

/// Per-view-group densification statistics: for every primitive, the sum of
/// screen-gradient norms and the number of renders in which it was visible,
/// kept separately per group so group-aware selection can compare vantage
/// classes instead of pooling them away.
class GradientAccumulator {
 public:
  GradientAccumulator(std::vector<int> group_ids, size_t model_size)
      : group_ids_(std::move(group_ids)) {
    if (group_ids_.empty())
      throw std::invalid_argument("GradientAccumulator: no view groups");
    for (size_t g = 0; g < group_ids_.size(); ++g)
      if (!group_index_.emplace(group_ids_[g], g).second)
        throw std::invalid_argument("GradientAccumulator: duplicate group id");
    grad_sum_.assign(group_ids_.size(), std::vector<double>(model_size, 0.0));
    vis_count_.assign(group_ids_.size(), std::vector<int64_t>(model_size, 0));
  }

  size_t size() const { return grad_sum_.front().size(); }
  const std::vector<int>& group_ids() const { return group_ids_; }

  /// Folds one render's gradients into the group's row. Only primitives that
  /// actually contributed pixels count, so idle primitives never dilute
  /// their own statistics.
  void accumulate(int group_id, const RenderGradients& grads) {
    const size_t g = index_of(group_id);
    if (grads.size() != size())
      throw std::invalid_argument("GradientAccumulator: gradient size mismatch");
    for (size_t i = 0; i < grads.size(); ++i) {
      if (!grads.visible[i]) continue;
      grad_sum_[g][i] += grads.screen_grad_norm[i];
      vis_count_[g][i] += 1;
    }
  }

  void reset() {
    for (auto& row : grad_sum_) std::fill(row.begin(), row.end(), 0.0);
    for (auto& row : vis_count_) std::fill(row.begin(), row.end(), 0);
  }

  /// Appends zero rows for newly added primitives.
  void extend(size_t added) {
    for (auto& row : grad_sum_) row.resize(row.size() + added, 0.0);
    for (auto& row : vis_count_) row.resize(row.size() + added, 0);
  }

  /// Drops rows whose keep flag is false, preserving order.
  void compact(const std::vector<uint8_t>& keep) {
    if (keep.size() != size())
      throw std::invalid_argument("GradientAccumulator: keep mask size mismatch");
    for (size_t g = 0; g < grad_sum_.size(); ++g) {
      size_t out = 0;
      for (size_t i = 0; i < keep.size(); ++i) {
        if (!keep[i]) continue;
        grad_sum_[g][out] = grad_sum_[g][i];
        vis_count_[g][out] = vis_count_[g][i];
        ++out;
      }
      grad_sum_[g].resize(out);
      vis_count_[g].resize(out);
    }
  }

  double grad_sum(int group_id, size_t i) const { return grad_sum_[index_of(group_id)].at(i); }
  int64_t vis_count(int group_id, size_t i) const { return vis_count_[index_of(group_id)].at(i); }

  /// Group-blind statistic: all groups pooled before dividing.
  double pooled_average(size_t i) const {
    double num = 0.0;
    int64_t den = 0;
    for (size_t g = 0; g < grad_sum_.size(); ++g) {
      num += grad_sum_[g].at(i);
      den += vis_count_[g].at(i);
    }
    return den > 0 ? num / static_cast<double>(den) : 0.0;
  }

  /// Largest per-group average; groups that never saw the primitive are
  /// skipped rather than treated as zero.
  double max_group_average(size_t i) const {
    double best = 0.0;
    for (size_t g = 0; g < grad_sum_.size(); ++g) {
      const int64_t c = vis_count_[g].at(i);
      if (c > 0) best = std::max(best, grad_sum_[g][i] / static_cast<double>(c));
    }
    return best;
  }

 private:
  size_t index_of(int group_id) const {
    const auto it = group_index_.find(group_id);
    if (it == group_index_.end())
      throw std::invalid_argument("GradientAccumulator: unknown group id");
    return it->second;
  }

  std::vector<int> group_ids_;
  std::unordered_map<int, size_t> group_index_;
  std::vector<std::vector<double>> grad_sum_;   // [group][primitive]
  std::vector<std::vector<int64_t>> vis_count_;  // [group][primitive]
};

}  // namespace xvgs
