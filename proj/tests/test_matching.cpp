#include <doctest.h>

#include <cmath>
#include <random>

#include "mlstereo/errors.hpp"
#include "mlstereo/matching.hpp"
#include "mlstereo/parallel.hpp"
#include "mlstereo/scenegen.hpp"

using namespace mlstereo;
using namespace mlstereo::matching;

namespace {

scenegen::TextureSpec noise_texture(std::uint64_t seed) {
  scenegen::TextureSpec t;
  t.kind = scenegen::TextureKind::ValueNoise;
  t.seed = seed;
  t.cell = 5.0;
  t.contrast = 0.5;
  return t;
}

// right(x) = left(x + shift), so the true disparity is `shift` everywhere.
std::pair<Raster, Raster> shifted_pair(int rows, int cols, double shift, std::uint64_t seed) {
  const auto tex = noise_texture(seed);
  Raster left(rows, cols);
  Raster right(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      left(r, c) = scenegen::sample_texture(tex, c, r);
      right(r, c) = scenegen::sample_texture(tex, c + shift, r);
    }
  }
  return {left, right};
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Exhaustive scan: the first candidate is the lowest-index global maximum;
// every (first, d) pair with |first - d| >= nms and d an admissible local
// maximum is visited and the best-scoring d wins, lowest index on ties.
PixelCandidates scan_oracle(std::span<const double> p, int nms) {
  const int n = static_cast<int>(p.size());
  int d0 = 0;
  for (int d = 0; d < n; ++d) {
    if (p[d] > p[d0]) d0 = d;
  }
  PixelCandidates out;
  out.first = {d0, p[d0]};
  out.second = out.first;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a != d0) continue;
      if (std::abs(a - b) < nms) continue;
      const bool peak = (b == 0 || p[b - 1] <= p[b]) && (b == n - 1 || p[b + 1] <= p[b]);
      if (!peak || !(p[b] > 0.0)) continue;
      if (out.duplicated || p[b] > out.second.score) {
        out.second = {b, p[b]};
        out.duplicated = false;
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("features are unit norm and deterministic") {
  const auto [left, right] = shifted_pair(64, 96, 0.0, 3);
  const auto a = extract_features(left);
  const auto b = extract_features(left);
  CHECK(a == b);
  CHECK(a.rows() == 16);
  CHECK(a.cols() == 24);
  for (int r = 0; r < a.rows(); ++r) {
    for (int c = 0; c < a.cols(); ++c) CHECK(norm(a.at(r, c)) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("constant image gives the canonical unit vector") {
  const Plane flat(32, 32, 0.4);
  const auto f = extract_features(flat);
  for (int r = 0; r < f.rows(); ++r) {
    for (int c = 0; c < f.cols(); ++c) {
      const auto v = f.at(r, c);
      CHECK(v[0] == 1.0);
      for (std::size_t k = 1; k < v.size(); ++k) CHECK(v[k] == 0.0);
    }
  }
  const auto raw = raw_feature_channels(flat);
  for (const auto& bits : raw.census.values()) {
    for (float b : bits) CHECK(b == 0.0F);
  }
}

TEST_CASE("vertical stripes give row-independent features away from the border") {
  Plane stripes(96, 64);
  for (int r = 0; r < 96; ++r) {
    for (int c = 0; c < 64; ++c) stripes(r, c) = (c / 3) % 2 == 0 ? 0.2 : 0.7;
  }
  const FeatureConfig cfg;
  const auto f = extract_features(stripes, cfg);
  const int margin = (cfg.patch_radius + kScale - 1) / kScale + 1;
  for (int r = margin + 1; r < f.rows() - margin; ++r) {
    for (int c = 0; c < f.cols(); ++c) {
      const auto a = f.at(margin, c);
      const auto b = f.at(r, c);
      for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("non-divisible input is rejected") {
  CHECK_THROWS_AS(extract_features(Plane(30, 32)), ShapeError);
  CHECK_THROWS_AS(extract_context(Plane(32, 31)), ShapeError);
}

TEST_CASE("cost volume basics") {
  const auto [left, right] = shifted_pair(64, 96, 0.0, 5);
  const auto f = extract_features(left);
  const auto cv = build_cost_volume(f, f, 8);
  for (int r = 0; r < cv.rows(); ++r) {
    for (int c = 0; c < cv.cols(); ++c) {
      CHECK(cv.at(r, c, 0) == doctest::Approx(1.0).epsilon(1e-12));
      for (int d = 0; d < cv.dmax(); ++d) {
        if (c - d < 0) {
          CHECK(cv.at(r, c, d) == CostVolume::kSentinel);
        } else {
          CHECK(cv.at(r, c, d) >= -1.0);
          CHECK(cv.at(r, c, d) <= 1.0);
        }
      }
    }
  }
  CHECK_THROWS_AS(build_cost_volume(f, FeatureMap(3, 3, f.channels()), 8), ShapeError);
}

TEST_CASE("shifted copy: argmax equals the shift in the interior") {
  for (int s : {3, 6}) {
    const auto [left, right] = shifted_pair(96, 160, 4.0 * s, 11 + s);
    const auto cv = build_cost_volume(extract_features(left), extract_features(right), 16);
    const int margin = 4;
    for (int r = margin; r < cv.rows() - margin; ++r) {
      for (int c = s + margin; c < cv.cols() - margin; ++c) {
        const auto p = cv.profile(r, c);
        int best = 0;
        for (int d = 1; d < cv.dmax(); ++d) {
          if (p[d] > p[best]) best = d;
        }
        CHECK(best == s);
      }
    }
  }
}

TEST_CASE("aggregation keeps sentinels and averages in-image matches") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> data(6 * 7 * 5);
  for (auto& x : data) x = u(rng);
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 7; ++c) {
      for (int d = c + 1; d < 5; ++d) data[(r * 7 + c) * 5 + d] = CostVolume::kSentinel;
    }
  }
  const CostVolume cv(6, 7, 5, data);
  const auto agg = aggregate_costs(cv, 1);
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 7; ++c) {
      for (int d = 0; d < 5; ++d) {
        if (c - d < 0) {
          CHECK(agg.at(r, c, d) == CostVolume::kSentinel);
          continue;
        }
        double sum = 0.0;
        int n = 0;
        for (int rr = std::max(0, r - 1); rr <= std::min(5, r + 1); ++rr) {
          for (int cc = std::max(0, c - 1); cc <= std::min(6, c + 1); ++cc) {
            if (cc - d < 0) continue;
            sum += cv.at(rr, cc, d);
            ++n;
          }
        }
        CHECK(agg.at(r, c, d) == doctest::Approx(sum / n).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("lookup") {
  std::vector<double> data{0.1, 0.5, -0.2, 0.9};
  const CostVolume cv(1, 1, 4, data);
  Plane d(1, 1, 2.0);
  CHECK(lookup(cv, d, 0).at(0, 0)[0] == -0.2);
  d(0, 0) = 1.5;
  CHECK(lookup(cv, d, 0).at(0, 0)[0] == doctest::Approx(0.15).epsilon(1e-15));
  d(0, 0) = -3.0;
  const double at_neg = lookup(cv, d, 0).at(0, 0)[0];
  d(0, 0) = 0.0;
  CHECK(at_neg == lookup(cv, d, 0).at(0, 0)[0]);
  d(0, 0) = 1.25;
  const auto slab = lookup(cv, d, 1);
  CHECK(slab.channels() == 3);
  CHECK(slab.at(0, 0)[0] == doctest::Approx(0.1 + 0.25 * 0.4).epsilon(1e-14));
  CHECK(slab.at(0, 0)[1] == doctest::Approx(0.5 + 0.25 * -0.7).epsilon(1e-14));
  CHECK(slab.at(0, 0)[2] == doctest::Approx(-0.2 + 0.25 * 1.1).epsilon(1e-14));

  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> pos(0.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    const double x = pos(rng);
    const int k = static_cast<int>(std::floor(x));
    const double t = x - k;
    const double expected = k + 1 < 4 ? (1 - t) * data[k] + t * data[k + 1] : data[k];
    CHECK(cv.sample(0, 0, x) == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("candidates") {
  std::vector<double> unimodal(32);
  for (int d = 0; d < 32; ++d) unimodal[d] = 0.9 - 0.05 * std::abs(d - 10);
  const auto u = pixel_candidates(unimodal, {});
  CHECK(u.first.disparity == 10);
  CHECK(u.second.disparity == 10);
  CHECK(u.duplicated);

  std::vector<double> two(32);
  for (int d = 0; d < 32; ++d) two[d] = std::max(0.8 - 0.1 * std::abs(d - 20), 0.6 - 0.1 * std::abs(d - 5));
  const auto t = pixel_candidates(two, {});
  CHECK(t.first.disparity == 20);
  CHECK(t.second.disparity == 5);
  CHECK_FALSE(t.duplicated);
  CHECK(t == scan_oracle(two, 4));

  CandidateConfig strict;
  strict.min_ratio = 0.8;
  CHECK(pixel_candidates(two, strict).duplicated);
  CHECK_THROWS_AS(extract_candidates(CostVolume(1, 1, 4, {0, 0, 0, 0}), 0), std::invalid_argument);
}

TEST_CASE("candidates match the exhaustive oracle on random volumes") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int v = 0; v < 20; ++v) {
    std::vector<double> data(16 * 16 * 32);
    for (auto& x : data) x = u(rng);
    const CostVolume cv(16, 16, 32, data);
    const auto got = extract_candidates(cv, 4);
    for (int r = 0; r < 16; ++r) {
      for (int c = 0; c < 16; ++c) {
        const auto& pc = got(r, c);
        CHECK(pc == scan_oracle(cv.profile(r, c), 4));
        if (!pc.duplicated) {
          CHECK(std::abs(pc.first.disparity - pc.second.disparity) >= 4);
          CHECK(pc.first.score >= pc.second.score);
        }
      }
    }
  }
}

TEST_CASE("cost volume is identical across worker counts") {
  const auto [left, right] = shifted_pair(64, 128, 12.0, 21);
  set_worker_count(1);
  const auto a = aggregate_costs(build_cost_volume(extract_features(left), extract_features(right), 24), 3);
  set_worker_count(5);
  const auto b = aggregate_costs(build_cost_volume(extract_features(left), extract_features(right), 24), 3);
  set_worker_count(0);
  CHECK(a == b);
}
