#pragma once

// Sinusoidal positional encoding: p -> [p?, sin(2^k pi p), cos(2^k pi p)]
// for k = 0..level-1, applied per component.

#include "hexrec/core.hpp"

namespace hexrec {

struct PosEncConfig {
  int level_x = 3;          // frequencies on the intersection position
  int level_d = 0;          // frequencies on the view direction
  bool include_raw = true;

  void validate() const {
    if (level_x < 0 || level_d < 0)
      throw DataError("positional encoding levels must be non-negative");
  }
};

inline int encoded_dim(int level, bool include_raw) {
  return 3 * (include_raw ? 1 : 0) + 6 * level;
}

inline void positional_encode(const Vec3& p, int level, bool include_raw,
                              Eigen::Ref<Eigen::VectorXd> out) {
  int k = 0;
  if (include_raw) {
    out.segment<3>(0) = p;
    k = 3;
  }
  double freq = M_PI;
  for (int l = 0; l < level; ++l) {
    for (int c = 0; c < 3; ++c) out[k + c] = std::sin(freq * p[c]);
    for (int c = 0; c < 3; ++c) out[k + 3 + c] = std::cos(freq * p[c]);
    k += 6;
    freq *= 2.0;
  }
}

inline Eigen::VectorXd positional_encode(const Vec3& p, int level,
                                         bool include_raw) {
  Eigen::VectorXd out(encoded_dim(level, include_raw));
  positional_encode(p, level, include_raw, out);
  return out;
}

// Accumulates d(encoding)/dp^T * upstream into dp.
inline void positional_encode_backward(const Vec3& p, int level,
                                       bool include_raw,
                                       const Eigen::Ref<const Eigen::VectorXd>& upstream,
                                       Vec3& dp) {
  int k = 0;
  if (include_raw) {
    dp += upstream.segment<3>(0);
    k = 3;
  }
  double freq = M_PI;
  for (int l = 0; l < level; ++l) {
    for (int c = 0; c < 3; ++c)
      dp[c] += upstream[k + c] * freq * std::cos(freq * p[c]);
    for (int c = 0; c < 3; ++c)
      dp[c] -= upstream[k + 3 + c] * freq * std::sin(freq * p[c]);
    k += 6;
    freq *= 2.0;
  }
}

}  // namespace hexrec
