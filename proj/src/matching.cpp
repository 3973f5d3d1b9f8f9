#include "mlstereo/matching.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "mlstereo/parallel.hpp"

namespace mlstereo::matching {

namespace {

constexpr double kNormEpsilon = 1e-9;

void require_divisible(int rows, int cols) {
  if (rows <= 0 || cols <= 0 || rows % kScale != 0 || cols % kScale != 0) {
    throw ShapeError("image dimensions " + std::to_string(rows) + "x" + std::to_string(cols) +
                     " must be positive multiples of " + std::to_string(kScale));
  }
}

// Summed-area table over a replicate-padded image, for window means.
class BoxSums {
 public:
  BoxSums(const Plane& img, int pad) : pad_(pad), rows_(img.rows() + 2 * pad), cols_(img.cols() + 2 * pad) {
    sum_.assign(static_cast<std::size_t>(rows_ + 1) * (cols_ + 1), 0.0);
    sq_.assign(sum_.size(), 0.0);
    for (int r = 0; r < rows_; ++r) {
      double run = 0.0;
      double run_sq = 0.0;
      for (int c = 0; c < cols_; ++c) {
        const double v = img.clamped(r - pad_, c - pad_);
        run += v;
        run_sq += v * v;
        idx(sum_, r + 1, c + 1) = idx(sum_, r, c + 1) + run;
        idx(sq_, r + 1, c + 1) = idx(sq_, r, c + 1) + run_sq;
      }
    }
  }

  // Mean and variance over the square window of the given radius centred at
  // image pixel (r, c).
  std::pair<double, double> moments(int r, int c, int radius) const {
    const int r0 = r + pad_ - radius;
    const int c0 = c + pad_ - radius;
    const int r1 = r + pad_ + radius + 1;
    const int c1 = c + pad_ + radius + 1;
    const double n = static_cast<double>((r1 - r0) * (c1 - c0));
    const double s = rect(sum_, r0, c0, r1, c1);
    const double s2 = rect(sq_, r0, c0, r1, c1);
    const double mean = s / n;
    return {mean, std::max(0.0, s2 / n - mean * mean)};
  }

 private:
  double& idx(std::vector<double>& v, int r, int c) { return v[static_cast<std::size_t>(r) * (cols_ + 1) + c]; }
  double at(const std::vector<double>& v, int r, int c) const {
    return v[static_cast<std::size_t>(r) * (cols_ + 1) + c];
  }
  double rect(const std::vector<double>& v, int r0, int c0, int r1, int c1) const {
    return at(v, r1, c1) - at(v, r0, c1) - at(v, r1, c0) + at(v, r0, c0);
  }

  int pad_;
  int rows_;
  int cols_;
  std::vector<double> sum_;
  std::vector<double> sq_;
};

int kernel_size(const FeatureConfig& cfg) {
  const int w = 2 * cfg.census_radius + 1;
  return w * w - 1;
}

// Adds the ternary census vector of pixel (r, c) into out.
template <class Out>
void accumulate_census(const Plane& gray, int r, int c, const FeatureConfig& cfg, Out&& out) {
  const double centre = gray(r, c);
  int k = 0;
  for (int dr = -cfg.census_radius; dr <= cfg.census_radius; ++dr) {
    for (int dc = -cfg.census_radius; dc <= cfg.census_radius; ++dc) {
      if (dr == 0 && dc == 0) continue;
      const int rr = r + dr;
      const int cc = c + dc;
      if (rr < 0 || rr >= gray.rows() || cc < 0 || cc >= gray.cols()) {
        ++k;
        continue;
      }
      const double v = gray(rr, cc);
      if (v > centre + cfg.census_threshold) {
        out[k] += 1.0;
      } else if (v < centre - cfg.census_threshold) {
        out[k] -= 1.0;
      }
      ++k;
    }
  }
}

void normalize_block(std::span<double> v, double weight) {
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  if (n2 < kNormEpsilon * kNormEpsilon) {
    std::fill(v.begin(), v.end(), 0.0);
    return;
  }
  const double s = weight / std::sqrt(n2);
  for (double& x : v) x *= s;
}

}  // namespace

int census_channels(const FeatureConfig& cfg) { return kernel_size(cfg); }

FeatureMap::FeatureMap(int rows, int cols, int channels)
    : rows_(rows), cols_(cols), channels_(channels),
      data_(static_cast<std::size_t>(rows) * cols * channels, 0.0) {}

std::span<double> FeatureMap::at(int r, int c) {
  return {data_.data() + (static_cast<std::size_t>(r) * cols_ + c) * channels_,
          static_cast<std::size_t>(channels_)};
}

std::span<const double> FeatureMap::at(int r, int c) const {
  return {data_.data() + (static_cast<std::size_t>(r) * cols_ + c) * channels_,
          static_cast<std::size_t>(channels_)};
}

CostVolume::CostVolume(int rows, int cols, int dmax, std::vector<double> costs)
    : rows_(rows), cols_(cols), dmax_(dmax), data_(std::move(costs)) {
  if (rows < 0 || cols < 0 || dmax < 1) throw ShapeError("cost volume: invalid dimensions");
  if (data_.size() != static_cast<std::size_t>(rows) * cols * dmax) {
    throw ShapeError("cost volume: data size does not match dimensions");
  }
}

double CostVolume::sample(int r, int c, double d) const noexcept {
  const double hi = static_cast<double>(dmax_ - 1);
  d = std::clamp(d, 0.0, hi);
  const auto p = profile(r, c);
  const int i0 = static_cast<int>(std::floor(d));
  if (i0 >= dmax_ - 1) return p[dmax_ - 1];
  const double f = d - i0;
  return (1.0 - f) * p[i0] + f * p[i0 + 1];
}

RawFeatureChannels raw_feature_channels(const Plane& gray, const FeatureConfig& cfg) {
  RawFeatureChannels raw;
  const int kc = census_channels(cfg);
  raw.census = Grid<std::vector<float>>(gray.rows(), gray.cols());
  for (int r = 0; r < gray.rows(); ++r) {
    for (int c = 0; c < gray.cols(); ++c) {
      std::vector<double> bits(static_cast<std::size_t>(kc), 0.0);
      accumulate_census(gray, r, c, cfg, bits);
      raw.census(r, c).assign(bits.begin(), bits.end());
    }
  }
  return raw;
}

int intensity_channels(const FeatureConfig& cfg, int colour_planes) {
  const int n = (2 * cfg.patch_radius + cfg.patch_stride - 1) / cfg.patch_stride;
  return n * n * colour_planes;
}

namespace {

FeatureMap features_from(const Plane& gray, std::span<const Plane> planes, const FeatureConfig& cfg) {
  require_divisible(gray.rows(), gray.cols());
  if (cfg.patch_radius < 1 || cfg.patch_stride < 1 || cfg.census_radius < 1) {
    throw std::invalid_argument("extract_features: window sizes must be positive");
  }
  const int kc = census_channels(cfg);
  const int ki = intensity_channels(cfg, static_cast<int>(planes.size()));
  const int rows = gray.rows() / kScale;
  const int cols = gray.cols() / kScale;
  FeatureMap out(rows, cols, kc + ki);
  const double inv_block = 1.0 / (kScale * kScale);

  parallel_rows(rows, [&](int R) {
    std::vector<char> inside_flag(static_cast<std::size_t>(ki));
    for (int C = 0; C < cols; ++C) {
      auto v = out.at(R, C);
      auto census = v.subspan(0, static_cast<std::size_t>(kc));
      auto intensity = v.subspan(static_cast<std::size_t>(kc));
      for (int i = 0; i < kScale; ++i) {
        for (int j = 0; j < kScale; ++j) {
          accumulate_census(gray, R * kScale + i, C * kScale + j, cfg, census);
        }
      }
      for (double& x : census) x *= inv_block;

      // Window-normalised intensity patch centred on the block, one
      // zero-mean block per colour plane. Samples outside the image stay 0 so
      // border patches still peak at the right disparity.
      const int r0 = R * kScale + kScale / 2 - cfg.patch_radius;
      const int c0 = C * kScale + kScale / 2 - cfg.patch_radius;
      std::size_t k = 0;
      for (const Plane& plane : planes) {
        const std::size_t begin = k;
        double mean = 0.0;
        int inside = 0;
        for (int i = 0; i < 2 * cfg.patch_radius; i += cfg.patch_stride) {
          for (int j = 0; j < 2 * cfg.patch_radius; j += cfg.patch_stride) {
            const int rr = r0 + i;
            const int cc = c0 + j;
            inside_flag[k] = rr >= 0 && rr < plane.rows() && cc >= 0 && cc < plane.cols();
            intensity[k] = inside_flag[k] ? plane(rr, cc) : 0.0;
            if (inside_flag[k]) {
              mean += intensity[k];
              ++inside;
            }
            ++k;
          }
        }
        mean /= std::max(inside, 1);
        for (std::size_t q = begin; q < k; ++q) {
          if (inside_flag[q]) intensity[q] -= mean;
        }
      }

      normalize_block(census, cfg.census_weight);
      normalize_block(intensity, cfg.intensity_weight);
      double n2 = 0.0;
      for (double x : v) n2 += x * x;
      if (n2 < kNormEpsilon * kNormEpsilon) {
        // Flat region: canonical unit vector.
        std::fill(v.begin(), v.end(), 0.0);
        v[0] = 1.0;
      } else {
        const double s = 1.0 / std::sqrt(n2);
        for (double& x : v) x *= s;
      }
    }
  });
  return out;
}

}  // namespace

FeatureMap extract_features(const Plane& gray, const FeatureConfig& cfg) {
  return features_from(gray, std::span<const Plane>(&gray, 1), cfg);
}

FeatureMap extract_features(const Raster& image, const FeatureConfig& cfg) {
  std::array<Plane, 3> planes;
  for (std::size_t ch = 0; ch < 3; ++ch) {
    planes[ch] = Plane(image.rows(), image.cols());
    auto src = image.values();
    auto dst = planes[ch].values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i][ch];
  }
  return features_from(to_gray(image), planes, cfg);
}

FeatureMap extract_context(const Plane& gray) {
  require_divisible(gray.rows(), gray.cols());
  const int rows = gray.rows() / kScale;
  const int cols = gray.cols() / kScale;
  FeatureMap out(rows, cols, 2);
  const BoxSums sums(gray, kScale);
  parallel_rows(rows, [&](int R) {
    for (int C = 0; C < cols; ++C) {
      // 8x8 window centred on the block: radius 4 around the block's centre pixel.
      const auto [mean, var] = sums.moments(R * kScale + kScale / 2, C * kScale + kScale / 2, kScale);
      auto v = out.at(R, C);
      v[0] = std::sqrt(var);
      v[1] = mean;
    }
  });
  return out;
}

CostVolume build_cost_volume(const FeatureMap& left, const FeatureMap& right, int dmax) {
  if (left.rows() != right.rows() || left.cols() != right.cols() || left.channels() != right.channels()) {
    throw ShapeError("build_cost_volume: feature maps differ in shape");
  }
  if (dmax < 1) throw ShapeError("build_cost_volume: dmax must be >= 1");
  const int rows = left.rows();
  const int cols = left.cols();
  std::vector<double> costs(static_cast<std::size_t>(rows) * cols * dmax, CostVolume::kSentinel);
  parallel_rows(rows, [&](int r) {
    for (int c = 0; c < cols; ++c) {
      const auto lf = left.at(r, c);
      double* out = costs.data() + (static_cast<std::size_t>(r) * cols + c) * dmax;
      for (int d = 0; d < dmax && c - d >= 0; ++d) {
        const auto rf = right.at(r, c - d);
        double dot = 0.0;
        for (std::size_t k = 0; k < lf.size(); ++k) dot += lf[k] * rf[k];
        out[d] = std::clamp(dot, -1.0, 1.0);
      }
    }
  });
  return CostVolume(rows, cols, dmax, std::move(costs));
}

CostVolume aggregate_costs(const CostVolume& cv, int radius) {
  if (radius <= 0) return cv;
  const int rows = cv.rows();
  const int cols = cv.cols();
  const int dmax = cv.dmax();
  std::vector<double> out(static_cast<std::size_t>(rows) * cols * dmax, 0.0);
  parallel_rows(rows, [&](int r) {
    const int r0 = std::max(0, r - radius);
    const int r1 = std::min(rows - 1, r + radius);
    for (int c = 0; c < cols; ++c) {
      const int c0 = std::max(0, c - radius);
      const int c1 = std::min(cols - 1, c + radius);
      double* dst = out.data() + (static_cast<std::size_t>(r) * cols + c) * dmax;
      // Sentinel entries (cc - d < 0) are left out of the mean.
      for (int rr = r0; rr <= r1; ++rr) {
        for (int cc = c0; cc <= c1; ++cc) {
          const auto p = cv.profile(rr, cc);
          const int valid = std::min(dmax, cc + 1);
          for (int d = 0; d < valid; ++d) dst[d] += p[d];
        }
      }
      const int height = r1 - r0 + 1;
      for (int d = 0; d < dmax; ++d) {
        const int width = c1 - std::max(c0, d) + 1;
        dst[d] = width > 0 && d <= c ? dst[d] / static_cast<double>(height * width) : CostVolume::kSentinel;
      }
    }
  });
  return CostVolume(rows, cols, dmax, std::move(out));
}

CostSlab::CostSlab(int rows, int cols, int radius)
    : rows_(rows), cols_(cols), radius_(radius),
      data_(static_cast<std::size_t>(rows) * cols * (2 * radius + 1), 0.0) {
  if (radius < 0) throw ShapeError("lookup radius must be >= 0");
}

std::span<double> CostSlab::at(int r, int c) {
  const auto n = static_cast<std::size_t>(channels());
  return {data_.data() + (static_cast<std::size_t>(r) * cols_ + c) * n, n};
}

std::span<const double> CostSlab::at(int r, int c) const {
  const auto n = static_cast<std::size_t>(channels());
  return {data_.data() + (static_cast<std::size_t>(r) * cols_ + c) * n, n};
}

CostSlab lookup(const CostVolume& cv, const Plane& disparity, int radius) {
  if (disparity.rows() != cv.rows() || disparity.cols() != cv.cols()) {
    throw ShapeError("lookup: disparity field does not match cost volume");
  }
  CostSlab slab(cv.rows(), cv.cols(), radius);
  parallel_rows(cv.rows(), [&](int r) {
    for (int c = 0; c < cv.cols(); ++c) {
      auto out = slab.at(r, c);
      const double d = disparity(r, c);
      for (int k = -radius; k <= radius; ++k) {
        out[static_cast<std::size_t>(k + radius)] = cv.sample(r, c, d + k);
      }
    }
  });
  return slab;
}

bool is_local_max(std::span<const double> profile, int d) noexcept {
  const int n = static_cast<int>(profile.size());
  if (d < 0 || d >= n) return false;
  const double v = profile[static_cast<std::size_t>(d)];
  if (d > 0 && profile[static_cast<std::size_t>(d - 1)] > v) return false;
  if (d + 1 < n && profile[static_cast<std::size_t>(d + 1)] > v) return false;
  return true;
}

PixelCandidates pixel_candidates(std::span<const double> profile, const CandidateConfig& cfg) {
  PixelCandidates out;
  const int n = static_cast<int>(profile.size());
  int best = 0;
  for (int d = 1; d < n; ++d) {
    if (profile[static_cast<std::size_t>(d)] > profile[static_cast<std::size_t>(best)]) best = d;
  }
  out.first = {best, profile[static_cast<std::size_t>(best)]};
  out.second = out.first;
  const double floor = std::max(cfg.score_floor, cfg.min_ratio * out.first.score);
  int second = -1;
  for (int d = 0; d < n; ++d) {
    if (std::abs(d - best) < cfg.nms_radius) continue;
    const double v = profile[static_cast<std::size_t>(d)];
    if (!(v > floor) || !is_local_max(profile, d)) continue;
    if (second < 0 || v > profile[static_cast<std::size_t>(second)]) second = d;
  }
  if (second >= 0) {
    out.second = {second, profile[static_cast<std::size_t>(second)]};
    out.duplicated = false;
  }
  return out;
}

CandidateSet extract_candidates(const CostVolume& cv, const CandidateConfig& cfg) {
  if (cfg.nms_radius < 1) throw std::invalid_argument("extract_candidates: nms_radius must be >= 1");
  CandidateSet out(cv.rows(), cv.cols());
  parallel_rows(cv.rows(), [&](int r) {
    for (int c = 0; c < cv.cols(); ++c) out(r, c) = pixel_candidates(cv.profile(r, c), cfg);
  });
  return out;
}

CandidateSet extract_candidates(const CostVolume& cv, int nms_radius) {
  CandidateConfig cfg;
  cfg.nms_radius = nms_radius;
  return extract_candidates(cv, cfg);
}

}  // namespace mlstereo::matching
