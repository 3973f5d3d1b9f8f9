#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mlstereo/fusion.hpp"
#include "mlstereo/scenegen.hpp"

using namespace mlstereo;
using namespace mlstereo::fusion;

TEST_CASE("fusion weights") {
  auto w = fusion_weights(1.7, 1.7);
  CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(w[1] == doctest::Approx(0.5).epsilon(1e-15));
  w = fusion_weights(1.0, 2.0);
  CHECK(w[0] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(w[1] == doctest::Approx(0.2).epsilon(1e-15));
  w = fusion_weights(1e-200, 1.0);
  CHECK(w[0] == 1.0);
  CHECK(w[1] == 0.0);
  w = fusion_weights(1e-3, 1.0);
  CHECK(w[0] > 0.999999);
}

TEST_CASE("fuse_pixel branches") {
  const FusionConfig cfg;
  auto px = fuse_pixel({10.0, 10.0, 0.3, 4.0, 0.95}, cfg);
  CHECK(px.fused == 10.0);
  CHECK_FALSE(px.transparent);

  px = fuse_pixel({30.0, 12.0, 1.0, 1.0, 0.0}, cfg);
  CHECK(px.transparent);
  CHECK(px.foreground == 30.0);
  CHECK(px.background == 12.0);
  CHECK(px.fused == 30.0);

  px = fuse_pixel({10.0, 12.0, 1.0, 2.0, 0.5}, cfg);
  CHECK_FALSE(px.transparent);
  CHECK(px.fused == doctest::Approx(10.4).epsilon(1e-14));
  CHECK(px.foreground == px.fused);
  CHECK(px.background == px.fused);

  px = fuse_pixel({10.0, 12.0, 1.0, 2.0, std::nextafter(0.5, 0.0)}, cfg);
  CHECK(px.transparent);
}

TEST_CASE("fusion validation") {
  FusionConfig cfg;
  cfg.alpha = 1.0;
  CHECK_NOTHROW(validate(cfg));
  cfg.alpha = -0.1;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg.alpha = 1.5;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
}

TEST_CASE("fused output is convex and consistent on random fields") {
  scenegen::Rng rng(42);
  solver::MgrField field(200, 500);
  for (int r = 0; r < field.rows(); ++r) {
    for (int c = 0; c < field.cols(); ++c) {
      const double a = rng.uniform(0.0, 48.0);
      const double b = rng.uniform(0.0, 48.0);
      field.set(r, c, {std::max(a, b), std::min(a, b), rng.uniform(0.01, 8.0), rng.uniform(0.01, 8.0), rng.uniform()});
    }
  }
  const auto out = fuse(field);
  for (int r = 0; r < field.rows(); ++r) {
    for (int c = 0; c < field.cols(); ++c) {
      const auto p = field.at(r, c);
      const bool transparent = out.transparent_mask(r, c) != 0;
      REQUIRE(transparent == (p.rho < 0.5));
      if (!transparent) {
        REQUIRE(out.fused(r, c) >= p.mu1);
        REQUIRE(out.fused(r, c) <= p.mu0);
        REQUIRE(out.foreground(r, c) == out.fused(r, c));
        REQUIRE(out.background(r, c) == out.fused(r, c));
      } else {
        REQUIRE(out.foreground(r, c) >= out.background(r, c));
        REQUIRE(out.fused(r, c) == out.foreground(r, c));
      }
      REQUIRE(out.rho_map(r, c) == p.rho);
    }
  }
}

TEST_CASE("transparent area shrinks as alpha decreases") {
  scenegen::Rng rng(5);
  solver::MgrField field(20, 30);
  for (int r = 0; r < 20; ++r) {
    for (int c = 0; c < 30; ++c) field.set(r, c, {20.0, 5.0, 1.0, 1.0, rng.uniform()});
  }
  long prev = -1;
  for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    FusionConfig cfg;
    cfg.alpha = alpha;
    long n = 0;
    const auto out = fuse(field, cfg);
    for (auto v : out.transparent_mask.values()) n += v;
    CHECK(n >= prev);
    prev = n;
  }
  CHECK(prev == 600);
}
