#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mlstereo/grid.hpp"

namespace mlstereo::matching {

/// Downsampling factor between the input image and every feature/cost grid.
inline constexpr int kScale = 4;

struct FeatureConfig {
  int census_radius = 3;             ///< 7x7 census window
  double census_threshold = 2e-3;    ///< ternary dead zone, intensity units
  int patch_radius = 12;             ///< intensity patch spans 2*radius pixels around the block centre
  int patch_stride = 2;              ///< sampling step inside the patch
  double census_weight = 1.0;
  double intensity_weight = 1.0;
};

/// Per-pixel feature vectors at 1/4 input resolution, unit L2 norm.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int rows, int cols, int channels);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  int channels() const noexcept { return channels_; }

  std::span<double> at(int r, int c);
  std::span<const double> at(int r, int c) const;

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Matching scores over (row, col, disparity); fixed after construction.
class CostVolume {
 public:
  static constexpr double kSentinel = -1.0;

  CostVolume() = default;
  CostVolume(int rows, int cols, int dmax, std::vector<double> costs);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  int dmax() const noexcept { return dmax_; }

  double at(int r, int c, int d) const noexcept {
    return data_[(static_cast<std::size_t>(r) * cols_ + c) * dmax_ + d];
  }
  std::span<const double> profile(int r, int c) const noexcept {
    return {data_.data() + (static_cast<std::size_t>(r) * cols_ + c) * dmax_,
            static_cast<std::size_t>(dmax_)};
  }

  /// Linear interpolation at fractional disparity, clamped to [0, dmax-1].
  double sample(int r, int c, double d) const noexcept;

  friend bool operator==(const CostVolume&, const CostVolume&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  int dmax_ = 0;
  std::vector<double> data_;
};

/// Ternary census features (pooled over each 4x4 block) plus a
/// window-normalised intensity patch per colour plane, at 1/4 resolution.
/// Throws ShapeError when a dimension is not divisible by 4.
FeatureMap extract_features(const Plane& gray, const FeatureConfig& cfg = {});
FeatureMap extract_features(const Raster& image, const FeatureConfig& cfg = {});

/// Number of census and intensity channels; features store census first.
int census_channels(const FeatureConfig& cfg);
int intensity_channels(const FeatureConfig& cfg, int colour_planes);

/// Full-resolution ternary census vectors before pooling.
struct RawFeatureChannels {
  Grid<std::vector<float>> census;  ///< full resolution, one entry per window offset
};
RawFeatureChannels raw_feature_channels(const Plane& gray, const FeatureConfig& cfg = {});

/// Context cues from the left image at 1/4 resolution. Channel 0 is local
/// contrast (standard deviation of intensity over an 8x8 neighbourhood),
/// channel 1 the local mean.
FeatureMap extract_context(const Plane& gray);

/// cost(r, c, d) = <left(r, c), right(r, c - d)>, sentinel -1 when c - d < 0.
CostVolume build_cost_volume(const FeatureMap& left, const FeatureMap& right, int dmax);

/// Box-filters every disparity plane over a (2 radius + 1)^2 window, averaging
/// only in-image matches; entries with c - d < 0 keep the sentinel.
CostVolume aggregate_costs(const CostVolume& cv, int radius);

/// Channel k of pixel (r, c) holds cv.sample(r, c, disparity(r, c) + k - radius).
class CostSlab {
 public:
  CostSlab(int rows, int cols, int radius);
  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  int radius() const noexcept { return radius_; }
  int channels() const noexcept { return 2 * radius_ + 1; }
  std::span<double> at(int r, int c);
  std::span<const double> at(int r, int c) const;

 private:
  int rows_;
  int cols_;
  int radius_;
  std::vector<double> data_;
};

CostSlab lookup(const CostVolume& cv, const Plane& disparity, int radius);

struct Candidate {
  int disparity = 0;
  double score = CostVolume::kSentinel;
};

struct PixelCandidates {
  Candidate first;   ///< global maximum
  Candidate second;  ///< best separated local maximum, or a copy of first
  bool duplicated = true;
  friend bool operator==(const PixelCandidates& a, const PixelCandidates& b) {
    return a.first.disparity == b.first.disparity && a.first.score == b.first.score &&
           a.second.disparity == b.second.disparity && a.second.score == b.second.score &&
           a.duplicated == b.duplicated;
  }
};

using CandidateSet = Grid<PixelCandidates>;

struct CandidateConfig {
  int nms_radius = 4;
  /// Second candidates must score above this.
  double score_floor = 0.0;
  /// ...and reach this fraction of the first candidate's score.
  double min_ratio = 0.0;
};

/// Top-2 separated candidates per pixel. Ties resolve to the lower disparity.
PixelCandidates pixel_candidates(std::span<const double> profile, const CandidateConfig& cfg);
CandidateSet extract_candidates(const CostVolume& cv, const CandidateConfig& cfg);
CandidateSet extract_candidates(const CostVolume& cv, int nms_radius);

/// True when profile[d] is at least as large as both neighbours (missing
/// neighbours at the ends count as -infinity).
bool is_local_max(std::span<const double> profile, int d) noexcept;

}  // namespace mlstereo::matching
