#pragma once

// OBJ and binary little-endian PLY import/export.
//
// OBJ carries positions and faces only. PLY additionally carries per-vertex
// features as float64 properties named f0..f{dim-1}; positions are float64 so
// a PLY round trip is bit exact.

#include "hexrec/mesh.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace hexrec {

inline void save_obj(const HexMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  char buf[128];
  for (const auto& p : mesh.positions) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", p.x(), p.y(), p.z());
    out << buf;
  }
  for (const auto& f : mesh.faces)
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  if (!out) throw DataError("write failed: " + path);
}

inline HexMesh load_obj(const std::string& path, int feat_dim = kDefaultFeatureDim) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  HexMesh mesh;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z))
        throw DataError(path + ":" + std::to_string(lineno) + ": bad vertex line");
      mesh.positions.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::array<int, 3> tri{};
      std::string tok;
      int n = 0;
      while (ss >> tok) {
        if (n >= 3)
          throw DataError(path + ":" + std::to_string(lineno) +
                          ": only triangle faces are supported");
        // Accept "i", "i/..", "i//.." index forms.
        tri[n++] = std::stoi(tok.substr(0, tok.find('/'))) - 1;
      }
      if (n != 3)
        throw DataError(path + ":" + std::to_string(lineno) + ": bad face line");
      mesh.faces.push_back(tri);
    }
  }
  zero_features(mesh, feat_dim);
  check_mesh_basic(mesh);
  return mesh;
}

inline void save_ply(const HexMesh& mesh, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  const int fd = mesh.feature_dim();
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << mesh.vertex_count() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  for (int i = 0; i < fd; ++i) out << "property double f" << i << "\n";
  out << "element face " << mesh.face_count() << "\n";
  out << "property list uchar int vertex_indices\n";
  out << "end_header\n";
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    double row[3];
    row[0] = mesh.positions[v].x();
    row[1] = mesh.positions[v].y();
    row[2] = mesh.positions[v].z();
    out.write(reinterpret_cast<const char*>(row), sizeof row);
    for (int c = 0; c < fd; ++c) {
      double f = mesh.features(v, c);
      out.write(reinterpret_cast<const char*>(&f), sizeof f);
    }
  }
  for (const auto& tri : mesh.faces) {
    std::uint8_t n = 3;
    out.write(reinterpret_cast<const char*>(&n), 1);
    std::int32_t idx[3] = {tri[0], tri[1], tri[2]};
    out.write(reinterpret_cast<const char*>(idx), sizeof idx);
  }
  if (!out) throw DataError("write failed: " + path);
}

inline HexMesh load_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "ply")
    throw DataError(path + ": not a PLY file");
  if (!std::getline(in, line) || line != "format binary_little_endian 1.0")
    throw DataError(path + ": only binary little-endian PLY is supported");

  long nv = -1, nf = -1;
  struct Prop { std::string name; bool is_double; };
  std::vector<Prop> vprops;
  std::string cur_element;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "comment") continue;
    if (tag == "element") {
      std::string name;
      long count;
      ss >> name >> count;
      cur_element = name;
      if (name == "vertex") nv = count;
      else if (name == "face") nf = count;
      else throw DataError(path + ": unsupported element " + name);
    } else if (tag == "property") {
      std::string type, name;
      ss >> type >> name;
      if (cur_element == "vertex") {
        if (type == "list") throw DataError(path + ": list property on vertex");
        if (type != "double" && type != "float" && type != "float64" && type != "float32")
          throw DataError(path + ": unsupported vertex property type " + type);
        vprops.push_back({name, type == "double" || type == "float64"});
      } else if (cur_element == "face") {
        if (type != "list") throw DataError(path + ": expected list property on face");
      }
    } else if (tag == "end_header") {
      break;
    } else {
      throw DataError(path + ": unexpected header line: " + line);
    }
  }
  if (nv < 0 || nf < 0) throw DataError(path + ": missing vertex or face element");

  int ix = -1, iy = -1, iz = -1;
  std::vector<int> feat_idx;
  for (std::size_t i = 0; i < vprops.size(); ++i) {
    const std::string& n = vprops[i].name;
    if (n == "x") ix = static_cast<int>(i);
    else if (n == "y") iy = static_cast<int>(i);
    else if (n == "z") iz = static_cast<int>(i);
    else if (n.size() >= 2 && n[0] == 'f') feat_idx.push_back(static_cast<int>(i));
  }
  if (ix < 0 || iy < 0 || iz < 0) throw DataError(path + ": missing x/y/z properties");

  HexMesh mesh;
  mesh.positions.resize(nv);
  mesh.features.resize(nv, static_cast<int>(feat_idx.size()));
  std::vector<double> row(vprops.size());
  for (long v = 0; v < nv; ++v) {
    for (std::size_t p = 0; p < vprops.size(); ++p) {
      if (vprops[p].is_double) {
        double d;
        in.read(reinterpret_cast<char*>(&d), sizeof d);
        row[p] = d;
      } else {
        float f;
        in.read(reinterpret_cast<char*>(&f), sizeof f);
        row[p] = f;
      }
    }
    if (!in) throw DataError(path + ": truncated vertex data");
    mesh.positions[v] = Vec3(row[ix], row[iy], row[iz]);
    for (std::size_t c = 0; c < feat_idx.size(); ++c)
      mesh.features(v, static_cast<int>(c)) = row[feat_idx[c]];
  }
  mesh.faces.resize(nf);
  for (long f = 0; f < nf; ++f) {
    std::uint8_t n;
    in.read(reinterpret_cast<char*>(&n), 1);
    if (!in || n != 3)
      throw DataError(path + ": face " + std::to_string(f) + " is not a triangle");
    std::int32_t idx[3];
    in.read(reinterpret_cast<char*>(idx), sizeof idx);
    if (!in) throw DataError(path + ": truncated face data");
    mesh.faces[f] = {idx[0], idx[1], idx[2]};
  }
  check_mesh_basic(mesh);
  return mesh;
}

enum class MeshFormat { Obj, Ply };

inline MeshFormat format_from_path(const std::string& path) {
  auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  if (ext == "obj") return MeshFormat::Obj;
  if (ext == "ply") return MeshFormat::Ply;
  throw DataError("cannot infer mesh format from path: " + path);
}

inline void export_mesh(const HexMesh& mesh, const std::string& path) {
  format_from_path(path) == MeshFormat::Obj ? save_obj(mesh, path)
                                            : save_ply(mesh, path);
}

inline HexMesh import_mesh(const std::string& path) {
  return format_from_path(path) == MeshFormat::Obj ? load_obj(path)
                                                   : load_ply(path);
}

}  // namespace hexrec
