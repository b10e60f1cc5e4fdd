// SPDX-License-Identifier: Apache-2.0
//
// Command-line surface for the cross-view splatting toolkit. Subcommands
// cover the whole workflow: synthetic dataset generation, per-group branch
// training, cross-view training, supplementation, fine-tuning, rendering,
// evaluation, and overlap reporting.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "xvgs/checkpoint.hpp"
#include "xvgs/config.hpp"
#include "xvgs/datagen.hpp"
#include "xvgs/dataset.hpp"
#include "xvgs/pipeline.hpp"
#include "xvgs/pointcloud.hpp"

namespace {

using namespace xvgs;

struct SeedOverride {
  std::optional<uint64_t> value;

  void apply(PipelineConfig& cfg) const {
    if (value) cfg.seed = *value;
  }
};

/// Splits a trailing positional list into (middle files, final output path).
std::pair<std::vector<std::string>, std::string> split_tail(std::vector<std::string> rest,
                                                            const char* what) {
  if (rest.empty()) throw std::runtime_error(std::string(what) + ": missing output path");
  std::string out = rest.back();
  rest.pop_back();
  return {std::move(rest), std::move(out)};
}

Vec3 background_of(const std::vector<double>& bg) {
  return Vec3(bg[0], bg[1], bg[2]);
}

Camera parse_pose_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("render: cannot open pose file " + path);
  Camera cam;
  if (!(in >> cam.width >> cam.height >> cam.fx >> cam.fy >> cam.cx >> cam.cy))
    throw std::runtime_error("render: malformed pose file " + path);
  double entry[16];
  for (double& v : entry)
    if (!(in >> v)) throw std::runtime_error("render: malformed pose file " + path);
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) cam.rotation(row, col) = entry[row * 4 + col];
    cam.translation[row] = entry[row * 4 + 3];
  }
  validate_camera(cam, 1e-4);
  return cam;
}

int run_gen(const std::string& spec_path, const std::string& out_dir, const SeedOverride& seed) {
  SceneSpec spec = load_scene_spec(spec_path);
  if (seed.value) spec.seed = *seed.value;
  const GaussianModel teacher = generate_synthetic(spec, out_dir);
  std::cout << "generated " << spec.aerial_count + spec.ground_count << " views from "
            << teacher.size() << " teacher primitives into " << out_dir << "\n";
  return 0;
}

int run_train_branch(const std::string& dataset_dir, int group_id, const std::string& config_path,
                     const std::string& out_path, const SeedOverride& seed) {
  PipelineConfig cfg = load_config(config_path);
  seed.apply(cfg);
  const std::vector<ViewGroup> groups = load_dataset(dataset_dir);
  const ViewGroup* group = nullptr;
  for (const ViewGroup& g : groups)
    if (g.group_id == group_id) group = &g;
  if (!group)
    throw std::runtime_error("train-branch: dataset has no group " + std::to_string(group_id));

  const PointCloud pc = random_pointcloud(
      {*group}, cfg.init_points,
      mix_seed(mix_seed(cfg.seed, kSaltInit), static_cast<uint64_t>(group_id) + 1));
  const GaussianModel model = train_branch(*group, pc, cfg, &std::cerr);
  save_model(out_path, model);
  std::cout << "branch " << group_id << ": " << model.size() << " primitives -> " << out_path
            << "\n";
  return 0;
}

int run_train_cross(const std::string& dataset_dir, const std::string& config_path,
                    const std::vector<std::string>& branch_paths, const std::string& out_path,
                    bool random_init, const SeedOverride& seed) {
  PipelineConfig cfg = load_config(config_path);
  seed.apply(cfg);
  const std::vector<ViewGroup> groups = load_dataset(dataset_dir);

  std::vector<GaussianModel> branches;
  std::map<int, const GaussianModel*> refs;
  if (!branch_paths.empty()) {
    if (branch_paths.size() != groups.size())
      throw std::runtime_error("train-cross: got " + std::to_string(branch_paths.size()) +
                               " branch models for " + std::to_string(groups.size()) +
                               " groups (pass one per group, ascending group id)");
    branches.reserve(branch_paths.size());
    for (const std::string& path : branch_paths) branches.push_back(load_model(path));
    for (size_t i = 0; i < groups.size(); ++i) refs[groups[i].group_id] = &branches[i];
  }
  if (cfg.weights.lambda_reg > 0.0 && refs.empty())
    throw std::runtime_error("train-cross: lambda_reg > 0 requires branch models");

  GaussianModel init;
  if (random_init) {
    init = init_cross(random_pointcloud(groups, cfg.init_points, mix_seed(cfg.seed, kSaltInit)),
                      cfg);
  } else {
    if (refs.empty())
      throw std::runtime_error("train-cross: need branch models (or --random-init)");
    if (!refs.count(cfg.distant_group))
      throw std::runtime_error("train-cross: distant_group " +
                               std::to_string(cfg.distant_group) + " has no branch model");
    init = init_cross(
        downsample_to_pointcloud(*refs.at(cfg.distant_group), cfg.downsample_ratio), cfg);
  }

  const GaussianModel model = train_cross(std::move(init), groups, refs, cfg, &std::cerr);
  save_model(out_path, model);
  std::cout << "cross model: " << model.size() << " primitives -> " << out_path << "\n";
  return 0;
}

int run_supplement(const std::string& cross_path, const std::vector<std::string>& branch_paths,
                   const std::string& out_path) {
  if (branch_paths.empty())
    throw std::runtime_error("supplement: need at least one branch model");
  const GaussianModel cross = load_model(cross_path);
  std::vector<GaussianModel> branches;
  for (const std::string& path : branch_paths) branches.push_back(load_model(path));
  const auto [merged, report] = supplement(cross, branches);
  save_model(out_path, merged);
  std::cout << report.to_text();
  std::cout << "model: " << cross.size() << " + " << report.total_added() << " -> "
            << merged.size() << " primitives, " << out_path << "\n";
  return 0;
}

int run_finetune(const std::string& dataset_dir, const std::string& config_path,
                 const std::string& model_path, const std::string& out_path,
                 const SeedOverride& seed) {
  PipelineConfig cfg = load_config(config_path);
  seed.apply(cfg);
  const std::vector<ViewGroup> groups = load_dataset(dataset_dir);
  const GaussianModel model = finetune(load_model(model_path), groups, cfg, &std::cerr);
  save_model(out_path, model);
  std::cout << "finetuned: " << model.size() << " primitives -> " << out_path << "\n";
  return 0;
}

int run_render(const std::string& model_path, const std::string& camera_arg,
               const std::string& out_path, const std::string& dataset_dir,
               const std::vector<double>& bg) {
  const GaussianModel model = load_model(model_path);
  const bool is_index = !camera_arg.empty() &&
                        camera_arg.find_first_not_of("0123456789") == std::string::npos;
  Camera cam;
  if (is_index) {
    if (dataset_dir.empty())
      throw std::runtime_error("render: camera index requires --dataset");
    const std::vector<ViewGroup> groups = load_dataset(dataset_dir);
    std::vector<const View*> views;
    for (const ViewGroup& g : groups)
      for (const View& v : g.views) views.push_back(&v);
    const size_t index = std::stoul(camera_arg);
    if (index >= views.size())
      throw std::runtime_error("render: camera index " + camera_arg + " out of range (dataset has " +
                               std::to_string(views.size()) + " views)");
    cam = views[index]->camera;
  } else {
    cam = parse_pose_file(camera_arg);
  }
  write_ppm(out_path, quantize8(render(model, cam, background_of(bg))));
  std::cout << "rendered " << cam.width << "x" << cam.height << " -> " << out_path << "\n";
  return 0;
}

int run_eval(const std::string& dataset_dir, const std::string& model_path,
             const std::string& report_path, const std::vector<double>& bg) {
  const std::vector<ViewGroup> groups = load_dataset(dataset_dir);
  const GaussianModel model = load_model(model_path);
  const EvalReport report = evaluate(model, groups, background_of(bg));
  std::ofstream out(report_path);
  if (!out) throw std::runtime_error("eval: cannot write " + report_path);
  out << report.to_text();
  out.close();
  if (!out) throw std::runtime_error("eval: failed writing " + report_path);
  char line[128];
  std::snprintf(line, sizeof line, "overall views %zu psnr %.9g ssim %.9g infinite %zu\n",
                report.overall.count, report.overall.mean_psnr, report.overall.mean_ssim,
                report.overall.infinite);
  std::cout << line;
  return 0;
}

int run_report(const std::vector<std::string>& model_paths) {
  std::vector<GaussianModel> models;
  for (const std::string& path : model_paths) models.push_back(load_model(path));
  for (size_t i = 0; i < models.size(); ++i)
    std::cout << "model " << i << " " << model_paths[i] << " primitives " << models[i].size()
              << " voxels " << voxel_grid_of(models[i]).size() << "\n";
  for (const OverlapPair& pair : overlap_report(models))
    std::cout << "pair " << pair.a << " " << pair.b << " common " << pair.common << " unique "
              << pair.unique << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-view Gaussian splatting toolkit"};
  app.require_subcommand(1);

  SeedOverride seed;
  std::vector<double> bg{0.0, 0.0, 0.0};

  std::string spec_path, dataset_dir, config_path, model_path, camera_arg, out_path;
  std::vector<std::string> tail;
  int group_id = 0;
  bool random_init = false;

  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic cross-view dataset");
  gen->add_option("spec", spec_path, "Scene spec file")->required();
  gen->add_option("out", out_path, "Output dataset directory")->required();
  gen->add_option("--seed", seed.value, "Override the spec seed");

  CLI::App* tb = app.add_subcommand("train-branch", "Train one view group's sub-model");
  tb->add_option("dataset", dataset_dir, "Dataset directory")->required();
  tb->add_option("group", group_id, "View group id")->required();
  tb->add_option("config", config_path, "Pipeline config file")->required();
  tb->add_option("out", out_path, "Output checkpoint path")->required();
  tb->add_option("--seed", seed.value, "Override the config seed");

  CLI::App* tc = app.add_subcommand(
      "train-cross", "Train the cross-view model (branch checkpoints in ascending group id "
                     "order, output path last)");
  tc->add_option("dataset", dataset_dir, "Dataset directory")->required();
  tc->add_option("config", config_path, "Pipeline config file")->required();
  tc->add_option("paths", tail, "Branch checkpoints... followed by the output path")
      ->required()
      ->expected(-1);
  tc->add_flag("--random-init", random_init,
               "Start from a random cloud instead of the downsampled distant branch");
  tc->add_option("--seed", seed.value, "Override the config seed");

  CLI::App* sup = app.add_subcommand("supplement",
                                     "Append branch primitives from unoccupied voxels");
  sup->add_option("cross", model_path, "Cross-view checkpoint")->required();
  sup->add_option("paths", tail, "Branch checkpoints... followed by the output path")
      ->required()
      ->expected(-1);

  CLI::App* ft = app.add_subcommand("finetune", "Fine-tune a model on all groups");
  ft->add_option("dataset", dataset_dir, "Dataset directory")->required();
  ft->add_option("config", config_path, "Pipeline config file")->required();
  ft->add_option("model", model_path, "Input checkpoint")->required();
  ft->add_option("out", out_path, "Output checkpoint path")->required();
  ft->add_option("--seed", seed.value, "Override the config seed");

  CLI::App* rd = app.add_subcommand("render", "Render a model from a stored or explicit camera");
  rd->add_option("model", model_path, "Model checkpoint")->required();
  rd->add_option("camera", camera_arg, "Dataset view index (with --dataset) or pose file")
      ->required();
  rd->add_option("out", out_path, "Output PPM path")->required();
  rd->add_option("--dataset", dataset_dir, "Dataset directory for index lookup");
  rd->add_option("--background", bg, "Background color r g b")->expected(3);

  CLI::App* ev = app.add_subcommand("eval", "Score a model on the test split");
  ev->add_option("dataset", dataset_dir, "Dataset directory")->required();
  ev->add_option("model", model_path, "Model checkpoint")->required();
  ev->add_option("report", out_path, "Report file to write")->required();
  ev->add_option("--background", bg, "Background color r g b")->expected(3);

  CLI::App* rp = app.add_subcommand("report", "Voxel overlap statistics across models");
  rp->add_option("models", tail, "Model checkpoints")->required()->expected(-1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*gen) return run_gen(spec_path, out_path, seed);
    if (*tb) return run_train_branch(dataset_dir, group_id, config_path, out_path, seed);
    if (*tc) {
      auto [branches, out] = split_tail(tail, "train-cross");
      return run_train_cross(dataset_dir, config_path, branches, out, random_init, seed);
    }
    if (*sup) {
      auto [branches, out] = split_tail(tail, "supplement");
      return run_supplement(model_path, branches, out);
    }
    if (*ft) return run_finetune(dataset_dir, config_path, model_path, out_path, seed);
    if (*rd) return run_render(model_path, camera_arg, out_path, dataset_dir, bg);
    if (*ev) return run_eval(dataset_dir, model_path, out_path, bg);
    if (*rp) return run_report(tail);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}
