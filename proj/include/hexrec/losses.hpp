#pragma once

// Image-space losses with explicit gradients: L1 photometric loss over the
// rendered foreground, soft-IoU mask loss, and L1 normal supervision.
// Each loss_*_backward accumulates d(loss)/d(its image argument).

#include "hexrec/core.hpp"
#include "hexrec/image.hpp"

#include <cstdio>

namespace hexrec {

inline void warn(const char* msg) { std::fprintf(stderr, "warning: %s\n", msg); }

// Mean over foreground pixels of the channel-summed L1 color difference.
// `foreground` is the rendered hit set (the summation domain).
inline double loss_rgb(const ImageF& rendered, const ImageF& reference,
                       const ImageU8& foreground) {
  if (!rendered.same_size(reference.width, reference.height) ||
      !rendered.same_size(foreground.width, foreground.height))
    throw DataError("loss_rgb: image dimensions disagree");
  std::size_t count = 0;
  double sum = 0.0;
  for (int y = 0; y < rendered.height; ++y)
    for (int x = 0; x < rendered.width; ++x) {
      if (!foreground.at(x, y)) continue;
      ++count;
      for (int c = 0; c < 3; ++c)
        sum += std::abs(rendered.at(x, y, c) - reference.at(x, y, c));
    }
  if (count == 0) {
    warn("loss_rgb: empty foreground, loss is 0");
    return 0.0;
  }
  return sum / static_cast<double>(count);
}

inline void loss_rgb_backward(const ImageF& rendered, const ImageF& reference,
                              const ImageU8& foreground, double upstream,
                              ImageF& d_rendered) {
  std::size_t count = 0;
  for (int y = 0; y < rendered.height; ++y)
    for (int x = 0; x < rendered.width; ++x)
      if (foreground.at(x, y)) ++count;
  if (count == 0) return;
  const double w = upstream / static_cast<double>(count);
  for (int y = 0; y < rendered.height; ++y)
    for (int x = 0; x < rendered.width; ++x) {
      if (!foreground.at(x, y)) continue;
      for (int c = 0; c < 3; ++c) {
        const double diff = rendered.at(x, y, c) - reference.at(x, y, c);
        d_rendered.at(x, y, c) += diff > 0 ? w : (diff < 0 ? -w : 0.0);
      }
    }
}

// 1 - softIoU: intersection = sum min(c, t), union = sum max(c, t) with the
// binary target in {0,1}. Reduces to 1 - IoU on binary coverage.
inline double loss_mask(const ImageF& coverage, const ImageU8& target) {
  if (!coverage.same_size(target.width, target.height))
    throw DataError("loss_mask: image dimensions disagree");
  double inter = 0.0, uni = 0.0;
  for (int y = 0; y < coverage.height; ++y)
    for (int x = 0; x < coverage.width; ++x) {
      const double c = coverage.at(x, y);
      const double t = mask_foreground(target.at(x, y)) ? 1.0 : 0.0;
      inter += std::min(c, t);
      uni += std::max(c, t);
    }
  if (uni == 0.0) {
    warn("loss_mask: empty union, loss is 0");
    return 0.0;
  }
  return 1.0 - inter / uni;
}

inline void loss_mask_backward(const ImageF& coverage, const ImageU8& target,
                               double upstream, ImageF& d_coverage) {
  double inter = 0.0, uni = 0.0;
  for (int y = 0; y < coverage.height; ++y)
    for (int x = 0; x < coverage.width; ++x) {
      const double c = coverage.at(x, y);
      const double t = mask_foreground(target.at(x, y)) ? 1.0 : 0.0;
      inter += std::min(c, t);
      uni += std::max(c, t);
    }
  if (uni == 0.0) return;
  for (int y = 0; y < coverage.height; ++y)
    for (int x = 0; x < coverage.width; ++x) {
      const double c = coverage.at(x, y);
      const double t = mask_foreground(target.at(x, y)) ? 1.0 : 0.0;
      // d(1 - I/U)/dc = -(dI * U - I * dU) / U^2 with subgradient choice
      // dmin/dc = [c < t], dmax/dc = [c > t].
      const double dI = c < t ? 1.0 : 0.0;
      const double dU = c > t ? 1.0 : 0.0;
      d_coverage.at(x, y) += upstream * (-(dI * uni - inter * dU) / (uni * uni));
    }
}

// Mean over the supervision domain (rendered hit AND target foreground) of
// the channel-summed L1 difference of unit normals, world frame.
inline double loss_normal(const ImageF& rendered_normals, const ImageF& target_normals,
                          const ImageU8& domain) {
  if (!rendered_normals.same_size(target_normals.width, target_normals.height) ||
      !rendered_normals.same_size(domain.width, domain.height))
    throw DataError("loss_normal: image dimensions disagree");
  std::size_t count = 0;
  double sum = 0.0;
  for (int y = 0; y < rendered_normals.height; ++y)
    for (int x = 0; x < rendered_normals.width; ++x) {
      if (!domain.at(x, y)) continue;
      ++count;
      for (int c = 0; c < 3; ++c)
        sum += std::abs(rendered_normals.at(x, y, c) - target_normals.at(x, y, c));
    }
  if (count == 0) return 0.0;
  return sum / static_cast<double>(count);
}

inline void loss_normal_backward(const ImageF& rendered_normals,
                                 const ImageF& target_normals,
                                 const ImageU8& domain, double upstream,
                                 ImageF& d_rendered_normals) {
  std::size_t count = 0;
  for (int y = 0; y < rendered_normals.height; ++y)
    for (int x = 0; x < rendered_normals.width; ++x)
      if (domain.at(x, y)) ++count;
  if (count == 0) return;
  const double w = upstream / static_cast<double>(count);
  for (int y = 0; y < rendered_normals.height; ++y)
    for (int x = 0; x < rendered_normals.width; ++x) {
      if (!domain.at(x, y)) continue;
      for (int c = 0; c < 3; ++c) {
        const double diff =
            rendered_normals.at(x, y, c) - target_normals.at(x, y, c);
        d_rendered_normals.at(x, y, c) += diff > 0 ? w : (diff < 0 ? -w : 0.0);
      }
    }
}

}  // namespace hexrec
