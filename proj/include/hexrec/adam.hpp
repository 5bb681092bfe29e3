#pragma once

// Adam with bias correction over named tensor slots. All slots share one
// step counter; a slot whose gradient is non-finite skips its update (and
// counts the skip) rather than corrupting the parameters. Moments are reset
// whenever the parameter identity changes (remesh events).

#include "hexrec/core.hpp"

#include <cstdint>
#include <vector>

namespace hexrec {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamSlot {
  Eigen::VectorXd m, v;

  void reset(Eigen::Index n) {
    m = Eigen::VectorXd::Zero(n);
    v = Eigen::VectorXd::Zero(n);
  }
};

struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<AdamSlot> slots;
  std::int64_t skipped_updates = 0;

  AdamSlot& slot(std::size_t i) {
    if (slots.size() <= i) slots.resize(i + 1);
    return slots[i];
  }
};

// One bias-corrected update of a single tensor. Returns false (and leaves
// the parameters untouched) when the gradient is not finite.
//
// The arithmetic runs on owned (hence always identically aligned) buffers:
// caller-supplied maps can land on any address, and SIMD peel boundaries
// that depend on alignment would otherwise make results vary between runs.
// Copies in and out are exact.
inline bool adam_update(AdamState& state, std::size_t slot_idx,
                        Eigen::Ref<Eigen::VectorXd> param,
                        const Eigen::Ref<const Eigen::VectorXd>& grad,
                        double lr) {
  AdamSlot& s = state.slot(slot_idx);
  if (s.m.size() != param.size()) s.reset(param.size());
  if (!grad.allFinite()) {
    ++state.skipped_updates;
    return false;
  }
  const auto& c = state.config;
  const Eigen::VectorXd g = grad;
  Eigen::VectorXd p = param;
  s.m = c.beta1 * s.m + (1.0 - c.beta1) * g;
  s.v = c.beta2 * s.v + (1.0 - c.beta2) * g.cwiseProduct(g);
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  p -= (lr / bc1) * s.m.cwiseQuotient(
                        ((s.v / bc2).cwiseSqrt().array() + c.eps).matrix());
  param = p;
  return true;
}

}  // namespace hexrec
