// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "xvgs/accumulator.hpp"
#include "xvgs/adam.hpp"
#include "xvgs/config.hpp"
#include "xvgs/densify.hpp"
#include "xvgs/metrics.hpp"
#include "xvgs/objectives.hpp"
#include "xvgs/pointcloud.hpp"
#include "xvgs/render.hpp"
#include "xvgs/render_backward.hpp"
#include "xvgs/view_group.hpp"
#include "xvgs/voxel.hpp"

namespace xvgs {

/// RNG stream salts. Branch and cross training share one stream on purpose:
/// with a single view group and the hinge disabled, cross training must
/// replay branch training decision for decision.
inline constexpr uint64_t kSaltTrain = 1;
inline constexpr uint64_t kSaltFinetune = 2;
inline constexpr uint64_t kSaltScene = 3;
inline constexpr uint64_t kSaltInit = 4;

struct TrainOptions {
  int iterations = 0;
  bool densify = true;
  /// Regularize against per-group reference renders. Requires a reference
  /// model for every group when the regularization weight is nonzero.
  bool hinge = false;
  uint64_t rng_salt = kSaltTrain;
};

/// Gradient threshold actually applied: the configured value, or a default
/// proportional to the mean training-image diagonal so the same config works
/// across resolutions.
inline double effective_densify_threshold(const PipelineConfig& cfg,
                                          const std::vector<ViewGroup>& groups) {
  if (cfg.densify_threshold > 0.0) return cfg.densify_threshold;
  double diag_sum = 0.0;
  size_t n = 0;
  for (const ViewGroup& group : groups) {
    for (const View& view : group.views) {
      diag_sum += view.camera.image_diagonal();
      ++n;
    }
  }
  if (n == 0) throw std::invalid_argument("train: no views to size the densify threshold");
  return 2e-4 * diag_sum / static_cast<double>(n);
}

namespace detail {

/// Renders of the frozen reference models, computed once per (group, view)
/// and reused for the rest of the stage.
class PseudoLabelCache {
 public:
  PseudoLabelCache(const std::map<int, const GaussianModel*>& refs, Vec3 background)
      : refs_(refs), background_(background) {}

  const ImageBuffer& get(int group_id, size_t view_index, const Camera& cam) {
    const auto key = std::make_pair(group_id, view_index);
    auto it = cache_.find(key);
    if (it == cache_.end())
      it = cache_.emplace(key, render(*refs_.at(group_id), cam, background_)).first;
    return it->second;
  }

 private:
  const std::map<int, const GaussianModel*>& refs_;
  Vec3 background_;
  std::map<std::pair<int, size_t>, ImageBuffer> cache_;
};

inline void emit_densify_line(std::ostream& out, int iteration, const DensifyPolicy& policy,
                              size_t candidates, size_t added, size_t pruned,
                              const GradientAccumulator& acc, const std::vector<int>& group_ids) {
  out << "densify iter=" << iteration << " mode="
      << (policy.mode == DensifyMode::kAverage ? "average" : "groupmax")
      << " candidates=" << candidates << " added=" << added << " pruned=" << pruned;
  char buf[64];
  for (int id : group_ids) {
    double best = 0.0;
    for (size_t i = 0; i < acc.size(); ++i) {
      if (acc.vis_count(id, i) > 0)
        best = std::max(best, acc.grad_sum(id, i) / static_cast<double>(acc.vis_count(id, i)));
    }
    std::snprintf(buf, sizeof buf, " maxavg[%d]=%.6g", id, best);
    out << buf;
  }
  out << '\n';
}

}  // namespace detail

/// One optimization stage shared by every training entry point. Samples
/// train views uniformly across all groups, steps the optimizer on the
/// composite objective, and runs density control on a fixed interval.
inline GaussianModel run_training(GaussianModel model, const std::vector<ViewGroup>& groups,
                                  const std::map<int, const GaussianModel*>& refs,
                                  const PipelineConfig& cfg, const TrainOptions& opt,
                                  std::ostream* diag = nullptr) {
  std::vector<int> group_ids;
  std::vector<std::pair<size_t, size_t>> train_views;  // (group index, view index)
  for (size_t g = 0; g < groups.size(); ++g) {
    group_ids.push_back(groups[g].group_id);
    for (size_t v = 0; v < groups[g].views.size(); ++v)
      if (groups[g].views[v].split == Split::kTrain) train_views.push_back({g, v});
  }
  if (train_views.empty()) throw std::invalid_argument("train: no training views");

  const bool hinge = opt.hinge && cfg.weights.lambda_reg > 0.0;
  if (hinge)
    for (int id : group_ids)
      if (!refs.count(id))
        throw std::invalid_argument("train: no reference model for group " +
                                    std::to_string(id));

  DensifyPolicy policy;
  policy.threshold = effective_densify_threshold(cfg, groups);
  policy.mode = cfg.densify_mode;
  policy.interval = cfg.densify_interval;
  policy.prune_opacity = cfg.prune_opacity;
  policy.max_primitives = cfg.max_primitives;

  GradientAccumulator acc(group_ids, model.size());
  AdamOptimizer adam(model.size(), cfg.rates, std::max(opt.iterations, 1));
  detail::PseudoLabelCache labels(refs, cfg.background);
  Rng rng(mix_seed(cfg.seed, opt.rng_salt));

  for (int it = 0; it < opt.iterations; ++it) {
    const auto [g, v] = train_views[rng.uniform_int(static_cast<int64_t>(train_views.size()))];
    const View& view = groups[g].views[v];
    const int group_id = groups[g].group_id;

    const ImageBuffer pred = render(model, view.camera, cfg.background);
    ImageBuffer d_pred = reconstruction_loss_backward(pred, view.image, cfg.weights);
    if (hinge) {
      const ImageBuffer& ref = labels.get(group_id, v, view.camera);
      const ImageBuffer d_reg = regularization_backward(pred, ref, view.image, cfg.reg_distance);
      for (size_t i = 0; i < d_pred.data().size(); ++i)
        d_pred.data()[i] += cfg.weights.lambda_reg * d_reg.data()[i];
    }

    RenderGradients grads = render_backward(model, view.camera, cfg.background, d_pred);
    const std::vector<Vec3> d_vol = volume_reg_backward(model);
    for (size_t i = 0; i < model.size(); ++i)
      grads.d_log_scale[i] += cfg.weights.lambda_vol * d_vol[i];

    adam.step(model, grads);
    acc.accumulate(group_id, grads);

    if (opt.densify && (it + 1) % policy.interval == 0 && it + 1 < opt.iterations) {
      VoxelGrid grid = voxel_grid_of(model);
      const std::vector<size_t> selected = select_densify(acc, policy);
      const size_t added = densify(model, selected, grid, policy, &acc, &adam);
      const size_t pruned = prune(model, policy, &acc, &adam);
      if (diag)
        detail::emit_densify_line(*diag, it + 1, policy, selected.size(), added, pruned, acc,
                                  group_ids);
      acc.reset();
    }
  }
  return model;
}

/// Trains one sub-model on a single view group starting from a point cloud.
inline GaussianModel train_branch(const ViewGroup& group, const PointCloud& init,
                                  const PipelineConfig& cfg, std::ostream* diag = nullptr) {
  if (group.views.empty()) throw std::invalid_argument("train: empty view group");
  TrainOptions opt;
  opt.iterations = cfg.branch_iters;
  opt.rng_salt = kSaltTrain;
  return run_training(init_cross(init, cfg), {group}, {}, cfg, opt, diag);
}

/// Trains the cross-view model over all groups, regularized toward the
/// per-group reference models whenever the hinge weight is nonzero.
inline GaussianModel train_cross(GaussianModel init, const std::vector<ViewGroup>& groups,
                                 const std::map<int, const GaussianModel*>& branches,
                                 const PipelineConfig& cfg, std::ostream* diag = nullptr) {
  TrainOptions opt;
  opt.iterations = cfg.cross_iters;
  opt.hinge = true;  // inert when lambda_reg is zero
  opt.rng_salt = kSaltTrain;
  return run_training(std::move(init), groups, branches, cfg, opt, diag);
}

/// Consolidation pass over all groups with the reconstruction objective
/// only. Density control stays off unless explicitly enabled.
inline GaussianModel finetune(GaussianModel m, const std::vector<ViewGroup>& groups,
                              const PipelineConfig& cfg, std::ostream* diag = nullptr) {
  if (m.empty()) throw std::invalid_argument("finetune: empty model");
  TrainOptions opt;
  opt.iterations = cfg.finetune_iters;
  opt.densify = cfg.finetune_densify;
  opt.rng_salt = kSaltFinetune;
  return run_training(std::move(m), groups, {}, cfg, opt, diag);
}

struct BranchSupplement {
  size_t branch_index = 0;
  size_t added = 0;   // landed in voxels the model did not occupy yet
  size_t common = 0;  // voxel already occupied, primitive dropped
};

struct SupplementReport {
  std::vector<BranchSupplement> branches;

  size_t total_added() const {
    size_t n = 0;
    for (const BranchSupplement& b : branches) n += b.added;
    return n;
  }

  std::string to_text() const {
    std::ostringstream out;
    for (const BranchSupplement& b : branches)
      out << "branch " << b.branch_index << " added " << b.added << " common " << b.common
          << '\n';
    out << "total added " << total_added() << '\n';
    return out.str();
  }
};

/// Appends every branch primitive whose voxel the model does not cover,
/// walking branches in order with an incrementally updated grid: once a
/// voxel is filled, later primitives aiming at it count as common.
inline std::pair<GaussianModel, SupplementReport> supplement(
    const GaussianModel& cross, const std::vector<GaussianModel>& branches) {
  for (const GaussianModel& b : branches)
    if (b.voxel_size != cross.voxel_size)
      throw std::invalid_argument("supplement: models disagree on voxel size");

  GaussianModel out = cross;
  VoxelGrid grid = voxel_grid_of(cross);
  SupplementReport report;
  for (size_t bi = 0; bi < branches.size(); ++bi) {
    BranchSupplement entry;
    entry.branch_index = bi;
    for (const Gaussian3D& g : branches[bi].gaussians) {
      const VoxelKey key = voxel_key(g.position, cross.voxel_size);
      if (grid.contains(key)) {
        ++entry.common;
      } else {
        out.gaussians.push_back(g);
        grid.insert(key);
        ++entry.added;
      }
    }
    report.branches.push_back(entry);
  }
  return {std::move(out), std::move(report)};
}

struct EvalRow {
  std::string name;
  int group_id = 0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct EvalStats {
  int group_id = -1;  // -1 marks the overall aggregate
  size_t count = 0;
  /// Views with zero error report an infinite PSNR; they are counted here
  /// and excluded from the PSNR mean.
  size_t infinite = 0;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<EvalStats> groups;
  EvalStats overall;

  std::string to_text() const {
    std::ostringstream out;
    char buf[128];
    for (const EvalRow& row : rows) {
      std::snprintf(buf, sizeof buf, "view %s %d %.9g %.9g", row.name.c_str(), row.group_id,
                    row.psnr, row.ssim);
      out << buf << '\n';
    }
    const auto stats_line = [&](const char* label, const EvalStats& s) {
      out << label;
      if (s.group_id >= 0) out << ' ' << s.group_id;
      std::snprintf(buf, sizeof buf, " views %zu psnr %.9g ssim %.9g infinite %zu", s.count,
                    s.mean_psnr, s.mean_ssim, s.infinite);
      out << buf << '\n';
    };
    for (const EvalStats& s : groups) stats_line("group", s);
    stats_line("overall", overall);
    return out.str();
  }
};

namespace detail {

inline EvalStats finalize_stats(int group_id, const std::vector<const EvalRow*>& rows) {
  EvalStats s;
  s.group_id = group_id;
  s.count = rows.size();
  double psnr_sum = 0.0;
  size_t psnr_n = 0;
  double ssim_sum = 0.0;
  for (const EvalRow* row : rows) {
    ssim_sum += row->ssim;
    if (std::isinf(row->psnr)) {
      ++s.infinite;
    } else {
      psnr_sum += row->psnr;
      ++psnr_n;
    }
  }
  s.mean_ssim = rows.empty() ? 0.0 : ssim_sum / static_cast<double>(rows.size());
  s.mean_psnr = psnr_n == 0 ? std::numeric_limits<double>::infinity()
                            : psnr_sum / static_cast<double>(psnr_n);
  return s;
}

}  // namespace detail

/// Scores the model on every test view. Predictions are quantized to 8 bits
/// before comparison so they live on the same grid as the stored images; a
/// model that reproduces the ground truth exactly scores infinite PSNR.
inline EvalReport evaluate(const GaussianModel& m, const std::vector<ViewGroup>& groups,
                           const Vec3& background) {
  EvalReport report;
  for (const ViewGroup& group : groups) {
    for (const View& view : group.views) {
      if (view.split != Split::kTest) continue;
      const ImageBuffer pred = quantize8(render(m, view.camera, background));
      EvalRow row;
      row.name = view.name;
      row.group_id = group.group_id;
      row.psnr = psnr(pred, view.image);
      row.ssim = ssim(pred, view.image);
      report.rows.push_back(std::move(row));
    }
  }
  if (report.rows.empty()) throw std::invalid_argument("evaluate: no test views");

  std::vector<const EvalRow*> all;
  for (const ViewGroup& group : groups) {
    std::vector<const EvalRow*> members;
    for (const EvalRow& row : report.rows)
      if (row.group_id == group.group_id) members.push_back(&row);
    if (!members.empty())
      report.groups.push_back(detail::finalize_stats(group.group_id, members));
    all.insert(all.end(), members.begin(), members.end());
  }
  report.overall = detail::finalize_stats(-1, all);
  return report;
}

struct OverlapPair {
  size_t a = 0;
  size_t b = 0;
  size_t common = 0;  // primitives of model a whose voxel model b occupies
  size_t unique = 0;
};

/// Voxel-level containment counts for every ordered model pair.
inline std::vector<OverlapPair> overlap_report(const std::vector<GaussianModel>& models) {
  for (const GaussianModel& m : models)
    if (m.voxel_size != models.front().voxel_size)
      throw std::invalid_argument("overlap: models disagree on voxel size");

  std::vector<VoxelGrid> grids;
  grids.reserve(models.size());
  for (const GaussianModel& m : models) grids.push_back(voxel_grid_of(m));

  std::vector<OverlapPair> pairs;
  for (size_t a = 0; a < models.size(); ++a) {
    for (size_t b = 0; b < models.size(); ++b) {
      if (a == b) continue;
      OverlapPair pair;
      pair.a = a;
      pair.b = b;
      for (const Gaussian3D& g : models[a].gaussians)
        if (grids[b].contains(voxel_key(g.position, models[a].voxel_size))) ++pair.common;
      pair.unique = models[a].size() - pair.common;
      pairs.push_back(pair);
    }
  }
  return pairs;
}

}  // namespace xvgs
