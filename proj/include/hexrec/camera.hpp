#pragma once

// Pinhole cameras. Continuous image coordinates (u, v) run over [0, W] x
// [0, H]; pixel (ix, iy) covers [ix, ix+1) x [iy, iy+1) with its center at
// (ix + 0.5, iy + 0.5). The camera looks down its local +z axis.

#include "hexrec/core.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <string>
#include <vector>

namespace hexrec {

struct Ray {
  Vec3 origin;
  Vec3 dir;  // unit length
  Vec3 at(double t) const { return origin + t * dir; }
};

struct Projection {
  double u = 0, v = 0;  // continuous image coordinates
  double depth = 0;     // camera-space z
  bool in_front = false;
};

struct Camera {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  Mat3 rotation = Mat3::Identity();   // world-to-camera
  Vec3 translation = Vec3::Zero();
  int width = 0, height = 0;

  void validate() const {
    if (fx <= 0 || fy <= 0) throw DataError("camera focal lengths must be positive");
    if (width <= 0 || height <= 0) throw DataError("camera image size must be positive");
    Mat3 should_be_identity = rotation * rotation.transpose();
    if ((should_be_identity - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
        rotation.determinant() < 0.5)
      throw DataError("camera rotation is not a proper rotation matrix");
  }

  Vec3 center() const { return -rotation.transpose() * translation; }
  Vec3 view_axis_world() const { return rotation.row(2).transpose(); }

  Vec3 world_to_cam(const Vec3& p) const { return rotation * p + translation; }

  // Ray through (px + 0.5, py + 0.5). Fractional pixel coordinates are
  // allowed; the sampling point must stay within the image rectangle.
  Ray ray_for_pixel(double px, double py) const {
    const double u = px + 0.5, v = py + 0.5;
    if (u < 0.0 || u > width || v < 0.0 || v > height)
      throw DataError("pixel (" + std::to_string(px) + "," + std::to_string(py) +
                      ") outside image " + std::to_string(width) + "x" +
                      std::to_string(height));
    Vec3 dir_cam((u - cx) / fx, (v - cy) / fy, 1.0);
    return Ray{center(), (rotation.transpose() * dir_cam).normalized()};
  }

  Projection project(const Vec3& p) const {
    Vec3 c = world_to_cam(p);
    Projection out;
    out.depth = c.z();
    out.in_front = c.z() > 0.0;
    if (out.in_front) {
      out.u = fx * c.x() / c.z() + cx;
      out.v = fy * c.y() / c.z() + cy;
    }
    return out;
  }

  // Jacobian of (u, v) with respect to the world point (2x3), valid in front
  // of the camera.
  Eigen::Matrix<double, 2, 3> projection_jacobian(const Vec3& p) const {
    Vec3 c = world_to_cam(p);
    Eigen::Matrix<double, 2, 3> duv_dc;
    const double iz = 1.0 / c.z();
    duv_dc << fx * iz, 0.0, -fx * c.x() * iz * iz,
              0.0, fy * iz, -fy * c.y() * iz * iz;
    return duv_dc * rotation;
  }
};

// One JSON document per scene: a list of views, each carrying the row-major
// 3x3 intrinsic matrix, the row-major 4x4 world-to-camera matrix and the
// image size.
inline std::vector<Camera> load_cameras_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  if (!doc.contains("views") || !doc["views"].is_array())
    throw DataError(path + ": missing \"views\" array");
  std::vector<Camera> cams;
  for (std::size_t i = 0; i < doc["views"].size(); ++i) {
    const auto& v = doc["views"][i];
    auto fail = [&](const std::string& msg) {
      throw DataError(path + ": view " + std::to_string(i) + ": " + msg);
    };
    if (!v.contains("intrinsics") || v["intrinsics"].size() != 9)
      fail("intrinsics must be 9 row-major numbers");
    if (!v.contains("world_to_camera") || v["world_to_camera"].size() != 16)
      fail("world_to_camera must be 16 row-major numbers");
    if (!v.contains("width") || !v.contains("height")) fail("missing image size");
    Camera cam;
    const auto& K = v["intrinsics"];
    cam.fx = K[0];
    cam.fy = K[4];
    cam.cx = K[2];
    cam.cy = K[5];
    const auto& M = v["world_to_camera"];
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) cam.rotation(r, c) = M[4 * r + c];
      cam.translation[r] = M[4 * r + 3];
    }
    cam.width = v["width"];
    cam.height = v["height"];
    try {
      cam.validate();
    } catch (const DataError& e) {
      fail(e.what());
    }
    cams.push_back(cam);
  }
  return cams;
}

inline void save_cameras_json(const std::vector<Camera>& cams, const std::string& path) {
  nlohmann::json views = nlohmann::json::array();
  for (const auto& cam : cams) {
    nlohmann::json v;
    v["intrinsics"] = {cam.fx, 0.0, cam.cx, 0.0, cam.fy, cam.cy, 0.0, 0.0, 1.0};
    std::vector<double> M(16, 0.0);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) M[4 * r + c] = cam.rotation(r, c);
      M[4 * r + 3] = cam.translation[r];
    }
    M[15] = 1.0;
    v["world_to_camera"] = M;
    v["width"] = cam.width;
    v["height"] = cam.height;
    views.push_back(v);
  }
  nlohmann::json doc;
  doc["views"] = views;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << doc.dump(1) << "\n";
}

}  // namespace hexrec
