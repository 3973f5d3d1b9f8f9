#pragma once

#include <array>

#include "mlstereo/grid.hpp"
#include "mlstereo/solver.hpp"

namespace mlstereo::fusion {

struct FusionConfig {
  double alpha = 0.5;  ///< correlation threshold; rho >= alpha fuses
};

/// Throws std::invalid_argument unless 0 <= alpha <= 1.
void validate(const FusionConfig& cfg);

/// Final multi-label output. Where the mask is false all three maps agree;
/// where it is true `fused` repeats the foreground (nearest surface).
struct LabeledDisparity {
  Plane fused;
  Plane foreground;
  Plane background;
  Mask transparent_mask;
  Plane rho_map;

  int rows() const noexcept { return fused.rows(); }
  int cols() const noexcept { return fused.cols(); }
};

using WeightPair = std::array<double, 2>;

/// Inverse-variance weights w_i = sigma_i^-2 / (sigma_0^-2 + sigma_1^-2).
WeightPair fusion_weights(double sigma0, double sigma1) noexcept;
Grid<WeightPair> fusion_weights(const solver::MgrField& field);

/// Single-pixel fusion; returns {fused, foreground, background}.
struct PixelLabels {
  double fused = 0.0;
  double foreground = 0.0;
  double background = 0.0;
  bool transparent = false;
};
PixelLabels fuse_pixel(const gaussian::MgrParams& p, const FusionConfig& cfg) noexcept;

LabeledDisparity fuse(const solver::MgrField& field, const FusionConfig& cfg = {});

}  // namespace mlstereo::fusion
