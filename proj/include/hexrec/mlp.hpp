#pragma once

// The per-intersection shading network: a small fully connected net mapping
// (x_m, n_m, h_m, d) to RGB. Inputs are concatenated as
// [enc(x) | n | h | enc(d)]; hidden layers use the rectifier, the output
// layer a logistic squashing onto (0,1)^3. Forward and reverse-mode backward
// are written out explicitly; the backward also chains through the
// positional encoding of x_m. The view direction is data, not a variable,
// and receives no gradient.

#include "hexrec/core.hpp"
#include "hexrec/encoding.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <string>
#include <vector>

namespace hexrec {

struct ShaderConfig {
  PosEncConfig enc;
  int feat_dim = kDefaultFeatureDim;
  int hidden_width = 128;
  int hidden_layers = 4;

  int input_dim() const {
    return encoded_dim(enc.level_x, enc.include_raw) + 3 + feat_dim +
           encoded_dim(enc.level_d, enc.include_raw);
  }
  std::vector<int> layer_dims() const {
    std::vector<int> dims;
    dims.push_back(input_dim());
    for (int i = 0; i < hidden_layers; ++i) dims.push_back(hidden_width);
    dims.push_back(3);
    return dims;
  }
};

struct MlpParams {
  std::vector<Eigen::MatrixXd> weights;  // out x in, row major per layer
  std::vector<Eigen::VectorXd> biases;

  int layer_count() const { return static_cast<int>(weights.size()); }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l)
      n += weights[l].size() + biases[l].size();
    return n;
  }

  void check_dims(const ShaderConfig& cfg) const {
    auto dims = cfg.layer_dims();
    if (weights.size() + 1 != dims.size() || biases.size() != weights.size())
      throw DataError("MLP layer count does not match shader config");
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (weights[l].rows() != dims[l + 1] || weights[l].cols() != dims[l] ||
          biases[l].size() != dims[l + 1])
        throw DataError("MLP layer " + std::to_string(l) + " has shape " +
                        std::to_string(weights[l].rows()) + "x" +
                        std::to_string(weights[l].cols()) + ", expected " +
                        std::to_string(dims[l + 1]) + "x" + std::to_string(dims[l]));
    }
  }
};

// Deterministic fan-in-scaled uniform initialization; biases zero.
inline MlpParams init_mlp(std::uint64_t seed, const ShaderConfig& cfg) {
  cfg.enc.validate();
  auto dims = cfg.layer_dims();
  MlpParams params;
  Rng rng(seed ^ 0x5ca1ab1e9e3779b9ULL);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int rows = dims[l + 1], cols = dims[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    Eigen::MatrixXd W(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) W(r, c) = rng.uniform(-bound, bound);
    params.weights.push_back(std::move(W));
    params.biases.push_back(Eigen::VectorXd::Zero(rows));
  }
  return params;
}

namespace mlp_detail {

inline void check_finite(const Vec3& v, const char* name) {
  if (!v.allFinite())
    throw NumericError(std::string("non-finite shader input: ") + name);
}

inline Eigen::VectorXd assemble_input(const ShaderConfig& cfg, const Vec3& x,
                                      const Vec3& n, const Eigen::VectorXd& h,
                                      const Vec3& d) {
  check_finite(x, "x_m");
  check_finite(n, "n_m");
  check_finite(d, "d");
  if (h.size() != cfg.feat_dim)
    throw DataError("feature vector has size " + std::to_string(h.size()) +
                    ", shader expects " + std::to_string(cfg.feat_dim));
  if (!h.allFinite()) throw NumericError("non-finite shader input: h_m");

  Eigen::VectorXd in(cfg.input_dim());
  int off = encoded_dim(cfg.enc.level_x, cfg.enc.include_raw);
  positional_encode(x, cfg.enc.level_x, cfg.enc.include_raw, in.segment(0, off));
  in.segment<3>(off) = n;
  in.segment(off + 3, cfg.feat_dim) = h;
  positional_encode(d, cfg.enc.level_d, cfg.enc.include_raw,
                    in.segment(off + 3 + cfg.feat_dim,
                               encoded_dim(cfg.enc.level_d, cfg.enc.include_raw)));
  return in;
}

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace mlp_detail

// Scratch buffers reused across pixels so per-pixel shading allocates
// nothing after warm-up. Each worker thread owns one.
struct MlpWorkspace {
  std::vector<Eigen::VectorXd> act;    // post-activation per layer (act[0] = input)
  std::vector<Eigen::VectorXd> delta;  // backward scratch
};

inline Vec3 shade(const MlpParams& params, const ShaderConfig& cfg,
                  const Vec3& x, const Vec3& n, const Eigen::VectorXd& h,
                  const Vec3& d, MlpWorkspace& ws) {
  const int L = params.layer_count();
  ws.act.resize(L + 1);
  ws.act[0] = mlp_detail::assemble_input(cfg, x, n, h, d);
  for (int l = 0; l < L; ++l) {
    ws.act[l + 1].noalias() = params.weights[l] * ws.act[l];
    ws.act[l + 1] += params.biases[l];
    if (l + 1 < L)
      ws.act[l + 1] = ws.act[l + 1].cwiseMax(0.0);
    else
      for (int i = 0; i < ws.act[l + 1].size(); ++i)
        ws.act[l + 1][i] = mlp_detail::logistic(ws.act[l + 1][i]);
  }
  return Vec3(ws.act[L][0], ws.act[L][1], ws.act[L][2]);
}

inline Vec3 shade(const MlpParams& params, const ShaderConfig& cfg,
                  const Vec3& x, const Vec3& n, const Eigen::VectorXd& h,
                  const Vec3& d) {
  MlpWorkspace ws;
  return shade(params, cfg, x, n, h, d, ws);
}

struct MlpGrads {
  std::vector<Eigen::MatrixXd> d_weights;
  std::vector<Eigen::VectorXd> d_biases;

  void init_like(const MlpParams& params) {
    d_weights.resize(params.weights.size());
    d_biases.resize(params.biases.size());
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
      d_weights[l] = Eigen::MatrixXd::Zero(params.weights[l].rows(),
                                           params.weights[l].cols());
      d_biases[l] = Eigen::VectorXd::Zero(params.biases[l].size());
    }
  }

  void add(const MlpGrads& other) {
    for (std::size_t l = 0; l < d_weights.size(); ++l) {
      d_weights[l] += other.d_weights[l];
      d_biases[l] += other.d_biases[l];
    }
  }

  void scale(double s) {
    for (std::size_t l = 0; l < d_weights.size(); ++l) {
      d_weights[l] *= s;
      d_biases[l] *= s;
    }
  }
};

struct ShadeInputGrads {
  Vec3 dx = Vec3::Zero();
  Vec3 dn = Vec3::Zero();
  Eigen::VectorXd dh;
};

// Reverse pass for one shaded point. Requires ws to hold the activations of
// the matching forward call. Parameter gradients accumulate into `grads`
// (which must be init_like'd); input gradients accumulate into `in_grads`.
inline void shade_backward(const MlpParams& params, const ShaderConfig& cfg,
                           const Vec3& x, const Vec3& /*n*/,
                           const Eigen::VectorXd& /*h*/, const Vec3& /*d*/,
                           const Vec3& d_rgb, MlpWorkspace& ws, MlpGrads& grads,
                           ShadeInputGrads& in_grads) {
  const int L = params.layer_count();
  ws.delta.resize(L + 1);

  // Output layer: logistic'(z) = y (1 - y).
  ws.delta[L].resize(3);
  for (int i = 0; i < 3; ++i) {
    const double y = ws.act[L][i];
    ws.delta[L][i] = d_rgb[i] * y * (1.0 - y);
  }

  for (int l = L - 1; l >= 0; --l) {
    grads.d_weights[l].noalias() += ws.delta[l + 1] * ws.act[l].transpose();
    grads.d_biases[l] += ws.delta[l + 1];
    if (l == 0) break;
    ws.delta[l].noalias() = params.weights[l].transpose() * ws.delta[l + 1];
    for (int i = 0; i < ws.delta[l].size(); ++i)
      if (ws.act[l][i] <= 0.0) ws.delta[l][i] = 0.0;  // rectifier gate
  }

  Eigen::VectorXd d_input = params.weights[0].transpose() * ws.delta[1];

  const int enc_x = encoded_dim(cfg.enc.level_x, cfg.enc.include_raw);
  positional_encode_backward(x, cfg.enc.level_x, cfg.enc.include_raw,
                             d_input.segment(0, enc_x), in_grads.dx);
  in_grads.dn += d_input.segment<3>(enc_x);
  if (in_grads.dh.size() != cfg.feat_dim)
    in_grads.dh = Eigen::VectorXd::Zero(cfg.feat_dim);
  in_grads.dh += d_input.segment(enc_x + 3, cfg.feat_dim);
  // d is not a variable: no gradient by contract.
}

// Checkpoint: flat little-endian float64 blob (per layer: weights row major,
// then bias) plus a JSON sidecar with the layer dims, encoding config,
// feature dim and seed.
inline void save_checkpoint(const MlpParams& params, const ShaderConfig& cfg,
                            std::uint64_t seed, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    const auto& W = params.weights[l];
    for (int r = 0; r < W.rows(); ++r)
      for (int c = 0; c < W.cols(); ++c) {
        double v = W(r, c);
        out.write(reinterpret_cast<const char*>(&v), sizeof v);
      }
    const auto& b = params.biases[l];
    for (int i = 0; i < b.size(); ++i) {
      double v = b[i];
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  }
  if (!out) throw DataError("write failed: " + path);

  nlohmann::json meta;
  meta["layer_dims"] = cfg.layer_dims();
  meta["level_x"] = cfg.enc.level_x;
  meta["level_d"] = cfg.enc.level_d;
  meta["include_raw"] = cfg.enc.include_raw;
  meta["feat_dim"] = cfg.feat_dim;
  meta["hidden_width"] = cfg.hidden_width;
  meta["hidden_layers"] = cfg.hidden_layers;
  meta["seed"] = seed;
  std::ofstream side(path + ".json");
  if (!side) throw DataError("cannot write " + path + ".json");
  side << meta.dump(1) << "\n";
}

struct Checkpoint {
  MlpParams params;
  ShaderConfig cfg;
  std::uint64_t seed = 0;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream side(path + ".json");
  if (!side) throw DataError("cannot open " + path + ".json");
  nlohmann::json meta;
  try {
    side >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ".json: " + e.what());
  }
  Checkpoint ck;
  ck.cfg.enc.level_x = meta.at("level_x");
  ck.cfg.enc.level_d = meta.at("level_d");
  ck.cfg.enc.include_raw = meta.at("include_raw");
  ck.cfg.feat_dim = meta.at("feat_dim");
  ck.cfg.hidden_width = meta.at("hidden_width");
  ck.cfg.hidden_layers = meta.at("hidden_layers");
  ck.seed = meta.at("seed");

  auto dims = ck.cfg.layer_dims();
  std::vector<int> dims_meta = meta.at("layer_dims");
  if (dims_meta != dims)
    throw DataError(path + ".json: layer_dims inconsistent with config");

  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Eigen::MatrixXd W(dims[l + 1], dims[l]);
    for (int r = 0; r < W.rows(); ++r)
      for (int c = 0; c < W.cols(); ++c)
        in.read(reinterpret_cast<char*>(&W(r, c)), sizeof(double));
    Eigen::VectorXd b(dims[l + 1]);
    for (int i = 0; i < b.size(); ++i)
      in.read(reinterpret_cast<char*>(&b[i]), sizeof(double));
    if (!in) throw DataError(path + ": truncated checkpoint");
    ck.params.weights.push_back(std::move(W));
    ck.params.biases.push_back(std::move(b));
  }
  char extra;
  if (in.read(&extra, 1))
    throw DataError(path + ": checkpoint larger than layer_dims describe");
  return ck;
}

}  // namespace hexrec
