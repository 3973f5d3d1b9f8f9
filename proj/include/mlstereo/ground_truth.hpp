#pragma once

#include "mlstereo/grid.hpp"

namespace mlstereo {

/// Multi-label disparity ground truth at full resolution.
///
/// `bg_disparity` is defined everywhere: outside the transparent mask it
/// repeats the foreground, so the (fg, bg) pair is the per-pixel label
/// vector used for supervision. `valid` marks pixels visible in both views.
struct GroundTruthBundle {
  Plane fg_disparity;
  Plane bg_disparity;
  Mask transparent_mask;
  Mask valid;

  int rows() const noexcept { return fg_disparity.rows(); }
  int cols() const noexcept { return fg_disparity.cols(); }
};

/// Pinhole stereo rig with focal length in pixels and baseline in metres.
struct CameraRig {
  double focal = 933.34;
  double baseline = 0.1;
  int width = 320;
  int height = 240;

  double fb() const noexcept { return focal * baseline; }

  static CameraRig tabletop(int width = 320, int height = 240) { return {933.34, 0.1, width, height}; }
  static CameraRig room_corner(int width = 320, int height = 240) { return {933.34, 0.2, width, height}; }
};

}  // namespace mlstereo
