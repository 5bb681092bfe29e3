// Command-line front end for the reconstruction pipeline:
//   synth   generate a synthetic calibrated scene with ground truth
//   carve   visual-hull initialization from masks
//   train   two-stage mesh + shader optimization
//   render  render a view from a mesh + shader checkpoint
//   eval    Chamfer distance and per-view PSNR against ground truth
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include "hexrec/carve.hpp"
#include "hexrec/metrics.hpp"
#include "hexrec/render.hpp"
#include "hexrec/scene.hpp"
#include "hexrec/synthetic.hpp"
#include "hexrec/trainer.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <string>

namespace {

using namespace hexrec;

struct CarveArgs {
  std::string scene_dir;
  std::string out_mesh;
  int res = 128;
  int dilation = 1;
  int target_vertices = 2500;
  std::vector<double> bbox;  // x0 y0 z0 x1 y1 z1
  std::string grid_dump;
};

int run_carve(const CarveArgs& args) {
  Scene scene = load_scene(args.scene_dir);
  std::vector<Camera> cameras;
  std::vector<ImageU8> masks;
  for (const auto& view : scene.views) {
    cameras.push_back(view.camera);
    masks.push_back(view.mask);
  }
  Vec3 lo, hi;
  if (args.bbox.empty()) {
    default_carve_bbox(cameras, lo, hi);
  } else {
    lo = Vec3(args.bbox[0], args.bbox[1], args.bbox[2]);
    hi = Vec3(args.bbox[3], args.bbox[4], args.bbox[5]);
  }
  std::printf("carving %zu views into %d^3 voxels, bbox [%g %g %g] - [%g %g %g]\n",
              masks.size(), args.res, lo.x(), lo.y(), lo.z(), hi.x(), hi.y(),
              hi.z());
  VoxelGrid grid = carve(masks, cameras, lo, hi, {args.res, args.res, args.res},
                         args.dilation);
  std::printf("hull: %zu occupied voxels\n", grid.occupied_count());
  if (!args.grid_dump.empty()) save_grid(grid, args.grid_dump);
  HexMesh mesh = init_coarse_mesh(grid, args.target_vertices);
  std::printf("coarse mesh: %d vertices, %d faces, %.1f%% valence-6\n",
              mesh.vertex_count(), mesh.face_count(),
              100.0 * count_valence(mesh, 6) / mesh.vertex_count());
  export_mesh(mesh, args.out_mesh);
  std::printf("wrote %s\n", args.out_mesh.c_str());
  return 0;
}

struct TrainArgs {
  std::string scene_dir;
  std::string init_mesh;
  std::string config;
  std::string out_dir;
};

int run_train(const TrainArgs& args) {
  Scene scene = load_scene(args.scene_dir);
  HexMesh init = import_mesh(args.init_mesh);
  TrainConfig tc = args.config.empty() ? TrainConfig{} : parse_train_config(args.config);
  std::filesystem::create_directories(args.out_dir);
  save_train_config(tc, (std::filesystem::path(args.out_dir) / "config.txt").string());

  std::printf("training %d iterations (%d coarse) on %d views\n", tc.total_iters,
              tc.coarse_iters, static_cast<int>(train_view_indices(scene.view_count()).size()));
  auto result = train(scene, init, tc, args.out_dir);
  if (!result.log.empty()) {
    const auto& last = result.log.back();
    std::printf("final: L_rgb=%.5f L_mask=%.5f L_h=%.5f total=%.5f (%d vertices)\n",
                last.l_rgb, last.l_mask, last.l_h, last.total, last.n_vertices);
  }
  std::printf("wrote %s/mesh_final.ply, params_final.bin, log.csv\n",
              args.out_dir.c_str());
  return 0;
}

struct RenderArgs {
  std::string mesh_path;
  std::string params_path;
  std::string scene_dir;
  int camera_index = 0;
  std::string out_png;
  std::string coverage_png;
};

int run_render(const RenderArgs& args) {
  HexMesh mesh = import_mesh(args.mesh_path);
  Checkpoint ck = load_checkpoint(args.params_path);
  if (mesh.feature_dim() != ck.cfg.feat_dim)
    throw DataError("mesh feature dim " + std::to_string(mesh.feature_dim()) +
                    " does not match checkpoint feat_dim " +
                    std::to_string(ck.cfg.feat_dim));
  auto cameras = load_cameras_json(
      (std::filesystem::path(args.scene_dir) / "cameras.json").string());
  if (args.camera_index < 0 ||
      args.camera_index >= static_cast<int>(cameras.size()))
    throw DataError("camera index " + std::to_string(args.camera_index) +
                    " out of range (scene has " + std::to_string(cameras.size()) +
                    " views)");
  auto rendered = render_view(mesh, ck.params, ck.cfg, cameras[args.camera_index]);
  write_png_rgb8(args.out_png, encode_image(rendered.rgb));
  std::printf("wrote %s\n", args.out_png.c_str());
  if (!args.coverage_png.empty()) {
    ImageU8 cov(rendered.coverage.width, rendered.coverage.height, 1);
    for (std::size_t i = 0; i < cov.data.size(); ++i)
      cov.data[i] = static_cast<std::uint8_t>(
          std::lround(std::clamp(rendered.coverage.data[i], 0.0, 1.0) * 255.0));
    write_png_gray8(args.coverage_png, cov);
    std::printf("wrote %s\n", args.coverage_png.c_str());
  }
  return 0;
}

struct EvalArgs {
  std::string mesh_path;
  std::string gt_path;
  std::string scene_dir;
  std::string params_path;
  int samples = 100000;
  std::uint64_t seed = 1;
};

int run_eval(const EvalArgs& args) {
  HexMesh mesh = import_mesh(args.mesh_path);
  HexMesh gt = import_mesh(args.gt_path);
  Scene scene = load_scene(args.scene_dir);
  Checkpoint ck = load_checkpoint(args.params_path);

  const double cd = chamfer(mesh, gt, args.samples, args.seed);
  std::printf("chamfer: %.6f (%.3f%% of GT diameter)\n", cd,
              100.0 * cd / mesh_diameter(gt));

  auto held = heldout_view_indices(scene.view_count());
  auto is_held = [&](int v) {
    return std::find(held.begin(), held.end(), v) != held.end();
  };
  double sum_all = 0, sum_train = 0, sum_held = 0;
  int n_train = 0, n_held = 0;
  for (int v = 0; v < scene.view_count(); ++v) {
    const auto& view = scene.views[v];
    auto rendered = render_view(mesh, ck.params, ck.cfg, view.camera);
    const double db = psnr(rendered.rgb, view.image, &view.mask);
    std::printf("view %04d%s: PSNR %.3f dB\n", v, is_held(v) ? " [held-out]" : "",
                db);
    sum_all += db;
    if (is_held(v)) {
      sum_held += db;
      ++n_held;
    } else {
      sum_train += db;
      ++n_train;
    }
  }
  std::printf("mean PSNR (all): %.3f dB\n", sum_all / scene.view_count());
  if (n_train > 0)
    std::printf("mean PSNR (train): %.3f dB\n", sum_train / n_train);
  if (n_held > 0)
    std::printf("mean PSNR (held-out): %.3f dB\n", sum_held / n_held);
  return 0;
}

struct SynthArgs {
  std::string shape = "sphere";
  int views = 24;
  int res = 128;
  std::uint64_t seed = 1;
  std::string out_dir;
};

int run_synth(const SynthArgs& args) {
  auto synth = generate_synthetic(shape_from_name(args.shape), args.views,
                                  args.res, args.seed);
  save_scene(synth.scene, args.out_dir);
  std::printf("wrote %d views at %dx%d plus gt_mesh.ply (%d vertices) to %s\n",
              args.views, args.res, args.res, synth.gt_mesh.vertex_count(),
              args.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view surface reconstruction with hexagonal meshes"};
  app.require_subcommand(1);

  CarveArgs carve_args;
  auto* carve_cmd = app.add_subcommand("carve", "Visual-hull coarse initialization");
  carve_cmd->add_option("--scene", carve_args.scene_dir, "Scene directory")->required();
  carve_cmd->add_option("--res", carve_args.res, "Voxel resolution per axis");
  carve_cmd->add_option("--out", carve_args.out_mesh, "Output mesh (.obj/.ply)")->required();
  carve_cmd->add_option("--dilation", carve_args.dilation, "Mask dilation in pixels");
  carve_cmd->add_option("--target-vertices", carve_args.target_vertices,
                        "Coarse mesh vertex budget");
  carve_cmd->add_option("--bbox", carve_args.bbox,
                        "Carving box x0 y0 z0 x1 y1 z1 (default: from cameras)")
      ->expected(6);
  carve_cmd->add_option("--grid-dump", carve_args.grid_dump,
                        "Optional voxel grid debug dump file");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Optimize mesh and shader");
  train_cmd->add_option("--scene", train_args.scene_dir, "Scene directory")->required();
  train_cmd->add_option("--init", train_args.init_mesh, "Initial mesh")->required();
  train_cmd->add_option("--config", train_args.config,
                        "Training config file (default: built-in defaults)");
  train_cmd->add_option("--out", train_args.out_dir, "Output directory")->required();

  RenderArgs render_args;
  auto* render_cmd = app.add_subcommand("render", "Render one view");
  render_cmd->add_option("--mesh", render_args.mesh_path, "Mesh file")->required();
  render_cmd->add_option("--params", render_args.params_path, "Shader checkpoint")->required();
  render_cmd->add_option("--scene", render_args.scene_dir,
                         "Scene directory providing cameras.json")->required();
  render_cmd->add_option("--camera-index", render_args.camera_index, "View index")->required();
  render_cmd->add_option("--out", render_args.out_png, "Output PNG")->required();
  render_cmd->add_option("--coverage", render_args.coverage_png,
                         "Optional coverage PNG output");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Chamfer and per-view PSNR");
  eval_cmd->add_option("--mesh", eval_args.mesh_path, "Reconstructed mesh")->required();
  eval_cmd->add_option("--gt", eval_args.gt_path, "Ground-truth mesh")->required();
  eval_cmd->add_option("--scene", eval_args.scene_dir, "Scene directory")->required();
  eval_cmd->add_option("--params", eval_args.params_path, "Shader checkpoint")->required();
  eval_cmd->add_option("--samples", eval_args.samples, "Chamfer sample count");
  eval_cmd->add_option("--seed", eval_args.seed, "Chamfer sampling seed");

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic scene");
  synth_cmd->add_option("--shape", synth_args.shape, "sphere|torus|blob")->required();
  synth_cmd->add_option("--views", synth_args.views, "Number of views")->required();
  synth_cmd->add_option("--res", synth_args.res, "Image resolution")->required();
  synth_cmd->add_option("--seed", synth_args.seed, "Scene seed")->required();
  synth_cmd->add_option("--out", synth_args.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (carve_cmd->parsed()) return run_carve(carve_args);
    if (train_cmd->parsed()) return run_train(train_args);
    if (render_cmd->parsed()) return run_render(render_args);
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (synth_cmd->parsed()) return run_synth(synth_args);
  } catch (const hexrec::NumericError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const hexrec::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const hexrec::TopologyError& e) {
    std::fprintf(stderr, "topology error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
