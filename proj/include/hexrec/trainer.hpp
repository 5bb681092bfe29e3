#pragma once

// Two-stage optimization loop: coarse iterations supervise color, mask and
// normals; fine iterations drop the normal term and reweight the hexagonal
// regularizer. Subdivision events at the configured iterations quadruple the
// face count, reset the mesh-tensor Adam moments and decay the learning
// rate.
//
// Gradient flow per view:
//   color loss -> shader backward -> (x_m, n_m, h_m)
//   x_m = o + t d  -> dt -> ray-constrained hit backward -> positions
//   n_m chain      -> barycentrics + vertex normals -> positions
//   h_m chain      -> barycentrics + features
//   mask loss -> coverage band -> projected silhouette edges -> positions
//   hex energy -> positions
// The per-pixel shader backward (the heavy part) runs in parallel chunks
// whose parameter-gradient buffers reduce in fixed chunk order; the cheap
// scatter passes are sequential, so whole iterations are bit-reproducible
// for any thread count.

#include "hexrec/adam.hpp"
#include "hexrec/carve.hpp"
#include "hexrec/hex.hpp"
#include "hexrec/losses.hpp"
#include "hexrec/metrics.hpp"
#include "hexrec/mlp.hpp"
#include "hexrec/render.hpp"
#include "hexrec/scene.hpp"
#include "hexrec/subdivide.hpp"
#include "hexrec/trainer_config.hpp"

#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

namespace hexrec {

enum class Stage { Coarse, Fine };

struct LossBreakdown {
  double rgb = 0, mask = 0, normal = 0, hex = 0, total = 0;
};

// Per-term weights of the composite loss; the stage presets implement the
// coarse and fine objectives. Tests exercise terms in isolation by zeroing
// the others.
struct LossWeights {
  double rgb = 1.0, mask = 0.0, normal = 0.0, hex = 0.0;
};

inline LossWeights stage_weights(Stage stage, const TrainConfig& tc) {
  LossWeights w;
  w.rgb = 1.0;
  w.mask = tc.lambda2;
  if (stage == Stage::Coarse) {
    w.hex = tc.lambda1;
    w.normal = tc.lambda2;
  } else {
    w.hex = tc.lambda1_prime;
    w.normal = 0.0;
  }
  return w;
}

struct ViewGradients {
  std::vector<Vec3> d_positions;
  Eigen::MatrixXd d_features;
  MlpGrads d_mlp;

  void init(const HexMesh& mesh, const MlpParams& params) {
    d_positions.assign(mesh.vertex_count(), Vec3::Zero());
    d_features = Eigen::MatrixXd::Zero(mesh.features.rows(), mesh.features.cols());
    d_mlp.init_like(params);
  }
};

// Losses (and optionally gradients) of one view under explicit term
// weights. `selection` restricts the shaded pixel set in ray-subset mode
// (null = all pixels); the mask loss always sees the full coverage image.
inline LossBreakdown compute_view_loss(const HexMesh& mesh, const MlpParams& params,
                                       const ShaderConfig& cfg, const View& view,
                                       const LossWeights& w, ViewGradients* grads,
                                       const ImageU8* selection = nullptr) {
  const Camera& cam = view.camera;
  const int W = cam.width, H = cam.height;

  Bvh bvh(mesh);
  const auto fn = face_normals_unnormalized(mesh);
  const auto vn = vertex_normals(mesh, fn);
  RenderResult pass = render_pass(mesh, bvh, vn, params, cfg, cam);

  const auto sil_edges = silhouette_edges(mesh, fn, cam);
  auto cov = silhouette_coverage_from_hits(mesh, sil_edges, cam, pass.hit_mask);

  ImageU8 rgb_domain = pass.hit_mask;
  if (selection)
    for (std::size_t i = 0; i < rgb_domain.data.size(); ++i)
      rgb_domain.data[i] &= selection->data[i];

  LossBreakdown parts;
  parts.rgb = loss_rgb(pass.rgb, view.image, rgb_domain);
  parts.mask = loss_mask(cov.coverage, view.mask);

  ImageU8 normal_domain(W, H, 1, 0);
  if (w.normal > 0.0) {
    if (!view.normals)
      throw DataError("coarse stage requires normal maps but the view has none");
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        normal_domain.at(x, y) =
            (rgb_domain.at(x, y) && mask_foreground(view.mask.at(x, y))) ? 1 : 0;
    parts.normal = loss_normal(pass.normals, *view.normals, normal_domain);
  }

  parts.hex = hex_energy(mesh);
  parts.total = w.rgb * parts.rgb + w.hex * parts.hex + w.mask * parts.mask +
                w.normal * parts.normal;
  if (!grads) return parts;

  // Upstream gradients on the three image-space loss surfaces.
  ImageF d_rgb(W, H, 3, 0.0);
  if (w.rgb > 0.0) loss_rgb_backward(pass.rgb, view.image, rgb_domain, w.rgb, d_rgb);
  ImageF d_cov(W, H, 1, 0.0);
  if (w.mask > 0.0) loss_mask_backward(cov.coverage, view.mask, w.mask, d_cov);
  ImageF d_normal_img(W, H, 3, 0.0);
  if (w.normal > 0.0)
    loss_normal_backward(pass.normals, *view.normals, normal_domain, w.normal,
                         d_normal_img);

  // Phase A (parallel): shader backward per shaded pixel. Parameter
  // gradients accumulate per chunk; per-pixel input gradients land in
  // images.
  ImageF dx_img(W, H, 3, 0.0), dn_img(W, H, 3, 0.0);
  ImageF dh_img(W, H, cfg.feat_dim, 0.0);
  const std::int64_t n_px = static_cast<std::int64_t>(W) * H;
  std::vector<MlpGrads> chunk_grads(kDefaultChunks);
  parallel_chunks(n_px, [&](int chunk, std::int64_t begin, std::int64_t end) {
    MlpWorkspace ws;
    MlpGrads& mg = chunk_grads[chunk];
    mg.init_like(params);
    ShadeInputGrads ig;
    for (std::int64_t i = begin; i < end; ++i) {
      const int x = static_cast<int>(i % W);
      const int y = static_cast<int>(i / W);
      if (!pass.hit_mask.at(x, y)) continue;
      const Vec3 up = pixel_rgb(d_rgb, x, y);
      if (up.isZero(0.0)) continue;
      const Ray ray = cam.ray_for_pixel(x, y);
      const SurfacePoint sp = interpolate_attributes(mesh, vn, pass.hits[i]);
      shade(params, cfg, sp.x, sp.n, sp.h, ray.dir, ws);
      ig.dx.setZero();
      ig.dn.setZero();
      if (ig.dh.size() != cfg.feat_dim) ig.dh = Eigen::VectorXd::Zero(cfg.feat_dim);
      ig.dh.setZero();
      shade_backward(params, cfg, sp.x, sp.n, sp.h, ray.dir, up, ws, mg, ig);
      set_pixel_rgb(dx_img, x, y, ig.dx);
      set_pixel_rgb(dn_img, x, y, ig.dn);
      for (int c = 0; c < cfg.feat_dim; ++c) dh_img.at(x, y, c) = ig.dh[c];
    }
  }, kDefaultChunks);
  for (const auto& mg : chunk_grads)
    if (!mg.d_weights.empty()) grads->d_mlp.add(mg);

  // Phase B (sequential): scatter per-pixel input gradients to mesh tensors.
  std::vector<Vec3> d_vnorms(mesh.vertex_count(), Vec3::Zero());
  Eigen::VectorXd dh(cfg.feat_dim);
  for (std::int64_t i = 0; i < n_px; ++i) {
    const int x = static_cast<int>(i % W);
    const int y = static_cast<int>(i / W);
    if (!pass.hit_mask.at(x, y)) continue;
    Vec3 dx = pixel_rgb(dx_img, x, y);
    Vec3 dn = pixel_rgb(dn_img, x, y) + pixel_rgb(d_normal_img, x, y);
    for (int c = 0; c < cfg.feat_dim; ++c) dh[c] = dh_img.at(x, y, c);
    if (dx.isZero(0.0) && dn.isZero(0.0) && dh.isZero(0.0)) continue;

    InterpGrads ig;
    ig.d_positions = &grads->d_positions;
    ig.d_vertex_normals = &d_vnorms;
    ig.d_features = &grads->d_features;
    interpolate_backward(mesh, vn, pass.hits[i], dx, dn, dh, ig,
                         /*route_x_to_positions=*/false);

    // x_m = o + t d: the position path goes through the moving intersection.
    const Ray ray = cam.ray_for_pixel(x, y);
    const double dt = ray.dir.dot(dx);
    if (dt != 0.0 || ig.db1 != 0.0 || ig.db2 != 0.0)
      hit_backward(mesh, ray, pass.hits[i], dt, ig.db1, ig.db2,
                   grads->d_positions);
  }

  // Phase C (sequential): normals to positions, silhouette band, hex term.
  vertex_normals_backward(mesh, fn, d_vnorms, grads->d_positions);
  if (w.mask > 0.0)
    coverage_backward(mesh, sil_edges, cam, cov, d_cov, grads->d_positions);
  if (w.hex > 0.0) {
    const auto hex_grad = hex_energy_gradient(mesh);
    for (int v = 0; v < mesh.vertex_count(); ++v)
      grads->d_positions[v] += w.hex * hex_grad[v];
  }

  return parts;
}

struct IterLog {
  int iter = 0;
  int stage = 0;  // 0 coarse, 1 fine
  double l_rgb = 0, l_mask = 0, l_normal = 0, l_h = 0, total = 0, lr = 0;
  int n_vertices = 0, n_faces = 0;
};

inline void write_log_csv(const std::vector<IterLog>& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "iter,stage,L_rgb,L_mask,L_normal,L_h,total,lr,n_vertices,n_faces\n";
  char buf[512];
  for (const auto& row : log) {
    std::snprintf(buf, sizeof buf,
                  "%d,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d\n", row.iter,
                  row.stage == 0 ? "coarse" : "fine", row.l_rgb, row.l_mask,
                  row.l_normal, row.l_h, row.total, row.lr, row.n_vertices,
                  row.n_faces);
    out << buf;
  }
  if (!out) throw DataError("write failed: " + path);
}

// Train-view selection: the lowest 10% of view indices are held out for
// evaluation whenever the scene has at least 10 views.
inline std::vector<int> heldout_view_indices(int n_views) {
  std::vector<int> held;
  const int n_held = n_views / 10;
  for (int i = 0; i < n_held; ++i) held.push_back(i);
  return held;
}

inline std::vector<int> train_view_indices(int n_views) {
  const int n_held = n_views / 10;
  std::vector<int> train;
  for (int i = n_held; i < n_views; ++i) train.push_back(i);
  return train;
}

struct TrainResult {
  HexMesh mesh;
  MlpParams params;
  std::vector<IterLog> log;
};

namespace trainer_detail {

inline Eigen::Map<Eigen::VectorXd> flat(std::vector<Vec3>& v) {
  return Eigen::Map<Eigen::VectorXd>(reinterpret_cast<double*>(v.data()),
                                     3 * static_cast<Eigen::Index>(v.size()));
}
inline Eigen::Map<const Eigen::VectorXd> flat(const std::vector<Vec3>& v) {
  return Eigen::Map<const Eigen::VectorXd>(
      reinterpret_cast<const double*>(v.data()),
      3 * static_cast<Eigen::Index>(v.size()));
}

// Foreground-biased random pixel selection for ray-subset mode.
inline ImageU8 select_rays(const View& view, int n_rays, Rng& rng) {
  const int W = view.camera.width, H = view.camera.height;
  ImageU8 sel(W, H, 1, 0);
  std::vector<std::int64_t> fg;
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(W) * H; ++i)
    if (mask_foreground(view.mask.data[i])) fg.push_back(i);
  const std::int64_t total = static_cast<std::int64_t>(W) * H;
  for (int k = 0; k < n_rays; ++k) {
    std::int64_t pick;
    if (!fg.empty() && rng.next_double() < 0.8)
      pick = fg[rng.next_below(fg.size())];
    else
      pick = static_cast<std::int64_t>(rng.next_below(total));
    sel.data[pick] = 1;
  }
  return sel;
}

}  // namespace trainer_detail

inline TrainResult train(const Scene& scene, const HexMesh& init_mesh,
                         const TrainConfig& tc, const std::string& out_dir = "") {
  tc.validate();
  if (scene.views.empty()) throw DataError("cannot train on an empty scene");
  for (std::size_t v = 0; v < scene.views.size(); ++v) {
    const auto& view = scene.views[v];
    if (tc.image_res != 0 &&
        (view.camera.width != tc.image_res || view.camera.height != tc.image_res))
      throw DataError("config image_res " + std::to_string(tc.image_res) +
                      " does not match view " + std::to_string(v));
  }

  TrainResult out;
  out.mesh = init_mesh;
  if (out.mesh.feature_dim() != tc.feat_dim) zero_features(out.mesh, tc.feat_dim);
  out.mesh.build_adjacency();

  const ShaderConfig shader_cfg = tc.shader_config();
  out.params = init_mlp(tc.seed, shader_cfg);
  if (tc.total_iters == 0) return out;

  // Round-robin over a seed-shuffled permutation of the training views.
  std::vector<int> order = train_view_indices(scene.view_count());
  if (order.empty())
    throw DataError("no training views (scene smaller than the holdout split)");
  Rng view_rng(tc.seed ^ 0xf1e1d0fULL);
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[view_rng.next_below(i)]);

  Rng subset_rng(tc.seed ^ 0x5ab5e77ULL);

  AdamState adam;
  constexpr std::size_t kSlotPositions = 0, kSlotFeatures = 1, kSlotMlp = 2;

  double lr = tc.lr;
  std::optional<std::filesystem::path> ckpt_dir;
  if (!out_dir.empty()) {
    ckpt_dir = out_dir;
    std::filesystem::create_directories(*ckpt_dir);
  }

  for (int iter = 1; iter <= tc.total_iters; ++iter) {
    const Stage stage = iter <= tc.coarse_iters ? Stage::Coarse : Stage::Fine;
    const View& view = scene.views[order[(iter - 1) % order.size()]];

    std::optional<ImageU8> selection;
    if (tc.ray_subset > 0 &&
        tc.ray_subset < view.camera.width * view.camera.height)
      selection = trainer_detail::select_rays(view, tc.ray_subset, subset_rng);

    ViewGradients grads;
    grads.init(out.mesh, out.params);
    LossBreakdown parts =
        compute_view_loss(out.mesh, out.params, shader_cfg, view,
                          stage_weights(stage, tc), &grads,
                          selection ? &*selection : nullptr);

    auto check = [&](double v, const char* name) {
      if (!std::isfinite(v))
        throw NumericError(std::string("non-finite ") + name + " at iteration " +
                           std::to_string(iter));
    };
    check(parts.rgb, "L_rgb");
    check(parts.mask, "L_mask");
    check(parts.normal, "L_normal");
    check(parts.hex, "L_h");
    check(parts.total, "total loss");

    ++adam.step;
    adam_update(adam, kSlotPositions, trainer_detail::flat(out.mesh.positions),
                trainer_detail::flat(grads.d_positions), lr);
    {
      Eigen::Map<Eigen::VectorXd> fparam(out.mesh.features.data(),
                                         out.mesh.features.size());
      Eigen::Map<const Eigen::VectorXd> fgrad(grads.d_features.data(),
                                              grads.d_features.size());
      adam_update(adam, kSlotFeatures, fparam, fgrad, lr);
    }
    for (int l = 0; l < out.params.layer_count(); ++l) {
      Eigen::Map<Eigen::VectorXd> w(out.params.weights[l].data(),
                                    out.params.weights[l].size());
      Eigen::Map<const Eigen::VectorXd> dw(grads.d_mlp.d_weights[l].data(),
                                           grads.d_mlp.d_weights[l].size());
      adam_update(adam, kSlotMlp + 2 * l, w, dw, lr);
      Eigen::Map<Eigen::VectorXd> b(out.params.biases[l].data(),
                                    out.params.biases[l].size());
      Eigen::Map<const Eigen::VectorXd> db(grads.d_mlp.d_biases[l].data(),
                                           grads.d_mlp.d_biases[l].size());
      adam_update(adam, kSlotMlp + 2 * l + 1, b, db, lr);
    }

    IterLog row;
    row.iter = iter;
    row.stage = stage == Stage::Coarse ? 0 : 1;
    row.l_rgb = parts.rgb;
    row.l_mask = parts.mask;
    row.l_normal = parts.normal;
    row.l_h = parts.hex;
    row.total = parts.total;
    row.lr = lr;
    row.n_vertices = out.mesh.vertex_count();
    row.n_faces = out.mesh.face_count();
    out.log.push_back(row);

    // Geometry moved; adjacency stays (topology unchanged), but cached
    // quantities above are rebuilt every iteration anyway.

    if (std::find(tc.decay_iters.begin(), tc.decay_iters.end(), iter) !=
        tc.decay_iters.end())
      lr *= tc.lr_decay_factor;

    if (std::find(tc.remesh_iters.begin(), tc.remesh_iters.end(), iter) !=
        tc.remesh_iters.end()) {
      out.mesh = subdivide(out.mesh);
      if (tc.remesh_passes > 0) {
        out.mesh = isotropic_remesh(out.mesh, mean_edge_length(out.mesh),
                                    tc.remesh_passes);
      }
      // Parameter identity changed: stale mesh moments are meaningless.
      adam.slot(kSlotPositions).reset(0);
      adam.slot(kSlotFeatures).reset(0);
      if (ckpt_dir) {
        char name[64];
        std::snprintf(name, sizeof name, "mesh_iter%04d.ply", iter);
        save_ply(out.mesh, (*ckpt_dir / name).string());
        std::snprintf(name, sizeof name, "params_iter%04d.bin", iter);
        save_checkpoint(out.params, shader_cfg, tc.seed, (*ckpt_dir / name).string());
      }
    }
  }

  if (adam.skipped_updates > 0)
    std::fprintf(stderr, "warning: %lld parameter updates skipped (non-finite gradients)\n",
                 static_cast<long long>(adam.skipped_updates));

  if (ckpt_dir) {
    save_ply(out.mesh, (*ckpt_dir / "mesh_final.ply").string());
    save_checkpoint(out.params, shader_cfg, tc.seed,
                    (*ckpt_dir / "params_final.bin").string());
    write_log_csv(out.log, (*ckpt_dir / "log.csv").string());
  }
  return out;
}

}  // namespace hexrec
