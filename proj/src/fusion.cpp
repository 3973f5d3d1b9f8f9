#include "mlstereo/fusion.hpp"

#include <algorithm>
#include <stdexcept>

#include "mlstereo/parallel.hpp"

namespace mlstereo::fusion {

void validate(const FusionConfig& cfg) {
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) throw std::invalid_argument("fusion: alpha must lie in [0, 1]");
}

WeightPair fusion_weights(double sigma0, double sigma1) noexcept {
  // sigma1^2 / (sigma0^2 + sigma1^2) equals the inverse-variance form and
  // stays finite when one sigma underflows.
  const double v0 = sigma0 * sigma0;
  const double v1 = sigma1 * sigma1;
  const double total = v0 + v1;
  if (!(total > 0.0)) return {0.5, 0.5};
  const double w0 = v1 / total;
  return {w0, 1.0 - w0};
}

Grid<WeightPair> fusion_weights(const solver::MgrField& field) {
  Grid<WeightPair> out(field.rows(), field.cols());
  parallel_rows(field.rows(), [&](int r) {
    for (int c = 0; c < field.cols(); ++c) out(r, c) = fusion_weights(field.sigma0(r, c), field.sigma1(r, c));
  });
  return out;
}

PixelLabels fuse_pixel(const gaussian::MgrParams& p, const FusionConfig& cfg) noexcept {
  PixelLabels out;
  if (p.rho >= cfg.alpha) {
    const auto w = fusion_weights(p.sigma0, p.sigma1);
    double d = w[0] * p.mu0 + w[1] * p.mu1;
    if (p.mu0 == p.mu1) d = p.mu0;
    // Rounding must not leave the segment between the two means.
    d = std::clamp(d, std::min(p.mu0, p.mu1), std::max(p.mu0, p.mu1));
    out.fused = out.foreground = out.background = d;
    return out;
  }
  out.transparent = true;
  out.foreground = std::max(p.mu0, p.mu1);
  out.background = std::min(p.mu0, p.mu1);
  out.fused = out.foreground;
  return out;
}

LabeledDisparity fuse(const solver::MgrField& field, const FusionConfig& cfg) {
  validate(cfg);
  const int rows = field.rows();
  const int cols = field.cols();
  LabeledDisparity out{Plane(rows, cols), Plane(rows, cols), Plane(rows, cols), Mask(rows, cols), Plane(rows, cols)};
  parallel_rows(rows, [&](int r) {
    for (int c = 0; c < cols; ++c) {
      const auto px = fuse_pixel(field.at(r, c), cfg);
      out.fused(r, c) = px.fused;
      out.foreground(r, c) = px.foreground;
      out.background(r, c) = px.background;
      out.transparent_mask(r, c) = px.transparent ? 1 : 0;
      out.rho_map(r, c) = field.rho(r, c);
    }
  });
  return out;
}

}  // namespace mlstereo::fusion
