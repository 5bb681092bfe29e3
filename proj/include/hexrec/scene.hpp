#pragma once

// Scene I/O. A scene directory holds cameras.json plus images/, masks/ and
// optionally normals/, with views matched by zero-padded index filenames
// (0000.png, 0001.png, ...). Images are 8-bit RGB, masks 8-bit grayscale
// (>127 = foreground), normal maps 16-bit RGB mapping [0,65535] to [-1,1]
// per channel (renormalized after decode). A synthetic scene may also carry
// gt_mesh.ply.

#include "hexrec/camera.hpp"
#include "hexrec/image.hpp"
#include "hexrec/mesh_io.hpp"
#include "hexrec/png_io.hpp"

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hexrec {

struct View {
  ImageF image;                  // RGB in [0,1]
  ImageU8 mask;                  // binary foreground
  std::optional<ImageF> normals; // unit vectors, world frame
  Camera camera;
};

struct Scene {
  std::vector<View> views;
  std::optional<HexMesh> gt_mesh;

  int view_count() const { return static_cast<int>(views.size()); }
};

inline std::string view_filename(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d.png", index);
  return buf;
}

inline ImageF decode_image(const ImageU8& rgb8) {
  ImageF img(rgb8.width, rgb8.height, 3);
  for (std::size_t i = 0; i < rgb8.data.size(); ++i)
    img.data[i] = rgb8.data[i] / 255.0;
  return img;
}

inline ImageU8 encode_image(const ImageF& img) {
  ImageU8 rgb8(img.width, img.height, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    rgb8.data[i] = static_cast<std::uint8_t>(
        std::lround(std::clamp(img.data[i], 0.0, 1.0) * 255.0));
  return rgb8;
}

inline ImageF decode_normals(const ImageU16& raw) {
  ImageF img(raw.width, raw.height, 3);
  for (int y = 0; y < raw.height; ++y)
    for (int x = 0; x < raw.width; ++x) {
      Vec3 n(raw.at(x, y, 0) / 65535.0 * 2.0 - 1.0,
             raw.at(x, y, 1) / 65535.0 * 2.0 - 1.0,
             raw.at(x, y, 2) / 65535.0 * 2.0 - 1.0);
      const double len = n.norm();
      if (len > 1e-6) n /= len;
      set_pixel_rgb(img, x, y, n);
    }
  return img;
}

inline ImageU16 encode_normals(const ImageF& normals, const ImageU8& mask) {
  ImageU16 raw(normals.width, normals.height, 3, 0);
  for (int y = 0; y < normals.height; ++y)
    for (int x = 0; x < normals.width; ++x) {
      if (!mask_foreground(mask.at(x, y))) continue;  // background stays 0
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(normals.at(x, y, c), -1.0, 1.0);
        raw.at(x, y, c) =
            static_cast<std::uint16_t>(std::lround((v + 1.0) * 0.5 * 65535.0));
      }
    }
  return raw;
}

inline Scene load_scene(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw DataError("scene directory not found: " + dir);
  const fs::path cam_path = root / "cameras.json";
  if (!fs::exists(cam_path))
    throw DataError("missing camera file: " + cam_path.string());
  auto cameras = load_cameras_json(cam_path.string());
  if (cameras.empty()) throw DataError(cam_path.string() + ": no views");

  const bool has_normals = fs::is_directory(root / "normals");
  Scene scene;
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    const std::string name = view_filename(static_cast<int>(i));
    View view;
    view.camera = cameras[i];

    const fs::path img_path = root / "images" / name;
    if (!fs::exists(img_path))
      throw DataError("camera " + std::to_string(i) + " has no image: " +
                      img_path.string());
    view.image = decode_image(read_png_rgb8(img_path.string()));

    const fs::path mask_path = root / "masks" / name;
    if (!fs::exists(mask_path))
      throw DataError("camera " + std::to_string(i) + " has no mask: " +
                      mask_path.string());
    view.mask = read_png_gray8(mask_path.string());

    if (has_normals) {
      const fs::path n_path = root / "normals" / name;
      if (!fs::exists(n_path))
        throw DataError("camera " + std::to_string(i) + " has no normal map: " +
                        n_path.string());
      view.normals = decode_normals(read_png_rgb16(n_path.string()));
    }

    auto check_res = [&](int w, int h, const fs::path& p) {
      if (w != view.camera.width || h != view.camera.height)
        throw DataError(p.string() + ": resolution " + std::to_string(w) + "x" +
                        std::to_string(h) + " does not match camera " +
                        std::to_string(view.camera.width) + "x" +
                        std::to_string(view.camera.height));
    };
    check_res(view.image.width, view.image.height, img_path);
    check_res(view.mask.width, view.mask.height, mask_path);
    if (view.normals)
      check_res(view.normals->width, view.normals->height, root / "normals" / name);

    scene.views.push_back(std::move(view));
  }

  // Reject stray image files that no camera entry describes.
  for (const auto& entry : fs::directory_iterator(root / "images")) {
    if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
    bool matched = false;
    for (std::size_t i = 0; i < cameras.size() && !matched; ++i)
      matched = entry.path().filename() == view_filename(static_cast<int>(i));
    if (!matched)
      throw DataError("image without camera entry: " + entry.path().string());
  }

  const fs::path gt_path = root / "gt_mesh.ply";
  if (fs::exists(gt_path)) scene.gt_mesh = load_ply(gt_path.string());
  return scene;
}

inline void save_scene(const Scene& scene, const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  fs::create_directories(root / "images");
  fs::create_directories(root / "masks");
  bool any_normals = false;
  for (const auto& v : scene.views) any_normals |= v.normals.has_value();
  if (any_normals) fs::create_directories(root / "normals");

  std::vector<Camera> cameras;
  for (std::size_t i = 0; i < scene.views.size(); ++i) {
    const auto& view = scene.views[i];
    const std::string name = view_filename(static_cast<int>(i));
    write_png_rgb8((root / "images" / name).string(), encode_image(view.image));
    write_png_gray8((root / "masks" / name).string(), view.mask);
    if (view.normals)
      write_png_rgb16((root / "normals" / name).string(),
                      encode_normals(*view.normals, view.mask));
    cameras.push_back(view.camera);
  }
  save_cameras_json(cameras, (root / "cameras.json").string());
  if (scene.gt_mesh) save_ply(*scene.gt_mesh, (root / "gt_mesh.ply").string());
}

}  // namespace hexrec
