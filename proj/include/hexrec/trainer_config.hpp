#pragma once

// Training configuration and its flat key=value file format. Unknown keys
// are rejected; every key is optional and defaults to the values below.

#include "hexrec/core.hpp"
#include "hexrec/mlp.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace hexrec {

struct TrainConfig {
  double lambda1 = 2.0;         // hex weight, coarse stage
  double lambda2 = 50.0;        // mask (+ normal) weight
  double lambda1_prime = 4.0;   // hex weight, fine stage
  double lr = 1e-3;
  double lr_decay_factor = 0.5;
  std::vector<int> decay_iters = {100, 200, 400};
  int coarse_iters = 100;
  std::vector<int> remesh_iters = {100, 200, 400};
  int total_iters = 600;
  int image_res = 0;  // 0 = whatever the scene provides
  std::uint64_t seed = 1;

  // Shader and feature settings.
  int level_x = 3;
  int level_d = 0;
  bool include_raw = true;
  int feat_dim = kDefaultFeatureDim;
  int hidden_width = 128;
  int hidden_layers = 4;

  // Optional machinery.
  int ray_subset = 0;     // rays per iteration; 0 = full frame
  int remesh_passes = 0;  // isotropic passes after each subdivision event

  ShaderConfig shader_config() const {
    ShaderConfig cfg;
    cfg.enc.level_x = level_x;
    cfg.enc.level_d = level_d;
    cfg.enc.include_raw = include_raw;
    cfg.feat_dim = feat_dim;
    cfg.hidden_width = hidden_width;
    cfg.hidden_layers = hidden_layers;
    return cfg;
  }

  void validate() const {
    if (lambda1 < 0 || lambda2 < 0 || lambda1_prime < 0)
      throw DataError("loss weights must be non-negative");
    if (lr <= 0) throw DataError("learning rate must be positive");
    if (coarse_iters > total_iters)
      throw DataError("coarse_iters exceeds total_iters");
    if (!std::is_sorted(remesh_iters.begin(), remesh_iters.end()))
      throw DataError("remesh_iters must be sorted ascending");
    if (level_x < 0 || level_d < 0)
      throw DataError("encoding levels must be non-negative");
    if (feat_dim < 0 || hidden_width < 1 || hidden_layers < 0)
      throw DataError("bad shader dimensions");
  }
};

namespace config_detail {

inline std::vector<int> parse_int_list(const std::string& value,
                                       const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stoi(item));
    } catch (...) {
      throw DataError("config key " + key + ": bad integer '" + item + "'");
    }
  }
  return out;
}

}  // namespace config_detail

inline TrainConfig parse_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path);
  TrainConfig tc;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto bad = [&](const char* what) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + what +
                      " for key " + key);
    };
    try {
      if (key == "lambda1") tc.lambda1 = std::stod(value);
      else if (key == "lambda2") tc.lambda2 = std::stod(value);
      else if (key == "lambda1_prime") tc.lambda1_prime = std::stod(value);
      else if (key == "lr") tc.lr = std::stod(value);
      else if (key == "lr_decay_factor") tc.lr_decay_factor = std::stod(value);
      else if (key == "decay_iters") tc.decay_iters = config_detail::parse_int_list(value, key);
      else if (key == "coarse_iters") tc.coarse_iters = std::stoi(value);
      else if (key == "remesh_iters") tc.remesh_iters = config_detail::parse_int_list(value, key);
      else if (key == "total_iters") tc.total_iters = std::stoi(value);
      else if (key == "image_res") tc.image_res = std::stoi(value);
      else if (key == "seed") tc.seed = std::stoull(value);
      else if (key == "level_x") tc.level_x = std::stoi(value);
      else if (key == "level_d") tc.level_d = std::stoi(value);
      else if (key == "include_raw") tc.include_raw = std::stoi(value) != 0;
      else if (key == "feat_dim") tc.feat_dim = std::stoi(value);
      else if (key == "hidden_width") tc.hidden_width = std::stoi(value);
      else if (key == "hidden_layers") tc.hidden_layers = std::stoi(value);
      else if (key == "ray_subset") tc.ray_subset = std::stoi(value);
      else if (key == "remesh_passes") tc.remesh_passes = std::stoi(value);
      else throw DataError(path + ":" + std::to_string(lineno) + ": unknown key " + key);
    } catch (const DataError&) {
      throw;
    } catch (...) {
      bad("bad value");
    }
  }
  tc.validate();
  return tc;
}

inline void save_train_config(const TrainConfig& tc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  auto list = [](const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
      s += (i ? "," : "") + std::to_string(v[i]);
    return s;
  };
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.17g", tc.lambda1);
  out << "lambda1 = " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", tc.lambda2);
  out << "lambda2 = " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", tc.lambda1_prime);
  out << "lambda1_prime = " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", tc.lr);
  out << "lr = " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", tc.lr_decay_factor);
  out << "lr_decay_factor = " << buf << "\n";
  out << "decay_iters = " << list(tc.decay_iters) << "\n";
  out << "coarse_iters = " << tc.coarse_iters << "\n";
  out << "remesh_iters = " << list(tc.remesh_iters) << "\n";
  out << "total_iters = " << tc.total_iters << "\n";
  out << "image_res = " << tc.image_res << "\n";
  out << "seed = " << tc.seed << "\n";
  out << "level_x = " << tc.level_x << "\n";
  out << "level_d = " << tc.level_d << "\n";
  out << "include_raw = " << (tc.include_raw ? 1 : 0) << "\n";
  out << "feat_dim = " << tc.feat_dim << "\n";
  out << "hidden_width = " << tc.hidden_width << "\n";
  out << "hidden_layers = " << tc.hidden_layers << "\n";
  out << "ray_subset = " << tc.ray_subset << "\n";
  out << "remesh_passes = " << tc.remesh_passes << "\n";
}

}  // namespace hexrec
