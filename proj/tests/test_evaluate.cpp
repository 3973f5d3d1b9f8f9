#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mlstereo/evaluate.hpp"
#include "mlstereo/fusion.hpp"
#include "mlstereo/parallel.hpp"
#include "mlstereo/scenegen.hpp"

using namespace mlstereo;
using namespace mlstereo::evaluate;

namespace {

fusion::LabeledDisparity exact_prediction(const GroundTruthBundle& gt) {
  return {gt.fg_disparity, gt.fg_disparity, gt.bg_disparity, gt.transparent_mask, Plane(gt.rows(), gt.cols(), 0.0)};
}

struct RandomMaps {
  Plane pred;
  Plane gt;
  Mask mask;
};

RandomMaps random_maps(std::uint64_t seed) {
  scenegen::Rng rng(seed);
  const int rows = rng.uniform_int(5, 30);
  const int cols = rng.uniform_int(5, 30);
  RandomMaps m{Plane(rows, cols), Plane(rows, cols), Mask(rows, cols)};
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      m.gt(r, c) = rng.uniform(5.0, 90.0);
      m.pred(r, c) = m.gt(r, c) + rng.uniform(-8.0, 8.0);
      m.mask(r, c) = rng.uniform() < 0.7 ? 1 : 0;
    }
  }
  m.mask(0, 0) = 1;
  return m;
}

}  // namespace

TEST_CASE("epe and bad-tau examples") {
  const Plane gt(6, 8, 20.0);
  const Mask all(6, 8, 1);
  CHECK(epe(gt, gt, all) == 0.0);
  CHECK(epe(Plane(6, 8, 21.0), gt, all) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(bad_tau(Plane(6, 8, 21.0), gt, all, 3.0) == 0.0);
  CHECK(bad_tau(Plane(6, 8, 24.0), gt, all, 3.0) == 100.0);
  CHECK(bad_tau(Plane(6, 8, 24.0), gt, all, 5.0) == 0.0);
  // Strict inequality at the threshold.
  CHECK(bad_tau(Plane(6, 8, 23.0), gt, all, 3.0) == 0.0);

  Plane half = gt;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 8; ++c) half(r, c) = 24.0;
  }
  CHECK(bad_tau(half, gt, all, 3.0) == doctest::Approx(50.0).epsilon(1e-15));

  CHECK_THROWS_AS(epe(gt, gt, Mask(6, 8, 0)), EmptyMaskError);
  CHECK_THROWS_AS(bad_tau(gt, gt, Mask(6, 8, 0), 3.0), EmptyMaskError);
  CHECK_THROWS_AS(epe(gt, Plane(6, 7), all), ShapeError);
}

TEST_CASE("epe and bad-tau match double-loop references") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto m = random_maps(500 + seed);
    double sum = 0.0;
    long n = 0;
    long bad = 0;
    for (int r = 0; r < m.gt.rows(); ++r) {
      for (int c = 0; c < m.gt.cols(); ++c) {
        if (!m.mask(r, c)) continue;
        const double e = std::abs(m.pred(r, c) - m.gt(r, c));
        sum += e;
        bad += e > 3.0;
        ++n;
      }
    }
    CHECK(epe(m.pred, m.gt, m.mask) == doctest::Approx(sum / n).epsilon(1e-9));
    CHECK(bad_tau(m.pred, m.gt, m.mask, 3.0) == doctest::Approx(100.0 * bad / n).epsilon(1e-9));

    // Pixel order does not matter: reverse both maps.
    RandomMaps rev{Plane(m.gt.rows(), m.gt.cols()), Plane(m.gt.rows(), m.gt.cols()), Mask(m.gt.rows(), m.gt.cols())};
    std::reverse_copy(m.pred.values().begin(), m.pred.values().end(), rev.pred.values().begin());
    std::reverse_copy(m.gt.values().begin(), m.gt.values().end(), rev.gt.values().begin());
    std::reverse_copy(m.mask.values().begin(), m.mask.values().end(), rev.mask.values().begin());
    CHECK(epe(rev.pred, rev.gt, rev.mask) == doctest::Approx(epe(m.pred, m.gt, m.mask)).epsilon(1e-12));

    double prev = 100.0;
    for (double tau : {0.5, 1.0, 2.0, 3.0, 5.0, 8.0}) {
      const double b = bad_tau(m.pred, m.gt, m.mask, tau);
      CHECK(b <= prev);
      CHECK(b >= 0.0);
      prev = b;
    }
  }
}

TEST_CASE("disparity to depth") {
  const CameraRig rig = CameraRig::tabletop();
  Plane d(1, 4);
  d(0, 0) = 93.334;
  d(0, 1) = 46.667;
  d(0, 2) = 0.0;
  d(0, 3) = -2.0;
  const auto z = disparity_to_depth(d, rig);
  CHECK(z(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(z(0, 1) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(z(0, 2) == 0.0);
  CHECK(z(0, 3) == 0.0);

  scenegen::Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.uniform(0.5, 192.0);
    Plane one(1, 1, v);
    const double back = rig.fb() / disparity_to_depth(one, rig)(0, 0);
    CHECK(std::abs(back - v) <= 1e-9);
  }
}

TEST_CASE("threshold validation") {
  MetricThresholds t;
  CHECK_NOTHROW(validate(t));
  t.taus = {3.0, 2.0};
  CHECK_THROWS_AS(validate(t), std::invalid_argument);
  t = {};
  t.phis = {0.0, 5.0};
  CHECK_THROWS_AS(validate(t), std::invalid_argument);
}

TEST_CASE("perfect prediction scores zero") {
  const auto preset = scenegen::tabletop_preset();
  const auto s = scenegen::render(scenegen::random_scene(preset, scenegen::SceneKind::Transparent, 3), preset.rig);
  const auto rep = evaluate_sample(exact_prediction(s.gt), s.gt, s.rig);
  for (const auto& row : rep.rows) {
    CHECK(row.value == 0.0);
    CHECK(row.count > 0);
  }
  long valid = 0, behind = 0;
  for (int r = 0; r < s.gt.rows(); ++r) {
    for (int c = 0; c < s.gt.cols(); ++c) {
      valid += s.gt.valid(r, c);
      behind += s.gt.valid(r, c) && s.gt.transparent_mask(r, c);
    }
  }
  CHECK(rep.find(Region::Foreground, Metric::Epe).count == valid);
  CHECK(rep.find(Region::Background, Metric::Epe).count == behind);
  CHECK(rep.find(Region::All, Metric::Mae).count == valid + behind);
  CHECK_THROWS_AS(rep.find(Region::All, Metric::BadTau, 4.0), std::out_of_range);
}

TEST_CASE("missing background is scored against the plane separation") {
  const auto rig = CameraRig::tabletop();
  scenegen::SceneSpec spec;
  spec.background.depth = 2.0;
  scenegen::LayerSpec layer;
  layer.depth = 1.0;
  layer.transmittance = 0.6;
  spec.layer = layer;
  spec.layer_extent = {120, 40, 300, 200};
  const auto s = scenegen::render(spec, rig);
  auto pred = exact_prediction(s.gt);
  pred.background = pred.foreground;
  const auto rep = evaluate_sample(pred, s.gt, rig);
  const double gap = rig.fb() / 1.0 - rig.fb() / 2.0;
  CHECK(rep.value(Region::Background, Metric::Epe) == doctest::Approx(gap).epsilon(1e-12));
  CHECK(rep.value(Region::Background, Metric::BadTau, 3.0) == 100.0);
  CHECK(rep.value(Region::Background, Metric::Mae) == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(rep.value(Region::Foreground, Metric::Epe) == 0.0);
  const double fg_n = static_cast<double>(rep.find(Region::Foreground, Metric::Epe).count);
  const double bg_n = static_cast<double>(rep.find(Region::Background, Metric::Epe).count);
  CHECK(rep.value(Region::All, Metric::Epe) == doctest::Approx(gap * bg_n / (fg_n + bg_n)).epsilon(1e-12));
}

TEST_CASE("region rows equal independent single-region calls") {
  const auto preset = scenegen::tabletop_preset();
  const auto s = scenegen::render(scenegen::random_scene(preset, scenegen::SceneKind::Transparent, 9), preset.rig);
  auto pred = exact_prediction(s.gt);
  scenegen::Rng rng(1);
  for (auto& v : pred.foreground.values()) v += rng.uniform(-4.0, 4.0);
  for (auto& v : pred.background.values()) v += rng.uniform(-4.0, 4.0);
  const MetricThresholds t;
  const auto rep = evaluate_sample(pred, s.gt, s.rig, t);

  Mask fg_mask = s.gt.valid;
  Mask bg_mask = s.gt.valid;
  for (std::size_t i = 0; i < bg_mask.size(); ++i) bg_mask.values()[i] &= s.gt.transparent_mask.values()[i];
  CHECK(rep.value(Region::Foreground, Metric::Epe) ==
        doctest::Approx(epe(pred.foreground, s.gt.fg_disparity, fg_mask)).epsilon(1e-12));
  CHECK(rep.value(Region::Background, Metric::Epe) ==
        doctest::Approx(epe(pred.background, s.gt.bg_disparity, bg_mask)).epsilon(1e-12));
  for (double tau : t.taus) {
    CHECK(rep.value(Region::Foreground, Metric::BadTau, tau) ==
          doctest::Approx(bad_tau(pred.foreground, s.gt.fg_disparity, fg_mask, tau)).epsilon(1e-12));
  }

  // Depth rows by direct evaluation over both surfaces.
  double mae = 0.0;
  long n = 0, bad5 = 0;
  auto add = [&](double p, double g) {
    const double e = 100.0 * std::abs(s.rig.fb() / std::max(p, 0.5) - s.rig.fb() / g);
    mae += e;
    bad5 += e > 5.0;
    ++n;
  };
  for (int r = 0; r < s.gt.rows(); ++r) {
    for (int c = 0; c < s.gt.cols(); ++c) {
      if (!s.gt.valid(r, c)) continue;
      add(pred.foreground(r, c), s.gt.fg_disparity(r, c));
      if (s.gt.transparent_mask(r, c)) add(pred.background(r, c), s.gt.bg_disparity(r, c));
    }
  }
  CHECK(rep.value(Region::All, Metric::Mae) == doctest::Approx(mae / n).epsilon(1e-9));
  CHECK(rep.value(Region::All, Metric::BadPhi, 5.0) == doctest::Approx(100.0 * bad5 / n).epsilon(1e-9));

  set_worker_count(1);
  const auto a = evaluate_sample(pred, s.gt, s.rig, t);
  set_worker_count(6);
  const auto b = evaluate_sample(pred, s.gt, s.rig, t);
  set_worker_count(0);
  CHECK(to_csv(a) == to_csv(b));
}

TEST_CASE("aggregation is pixel weighted") {
  const auto preset = scenegen::tabletop_preset();
  std::vector<EvaluationReport> reports;
  std::vector<double> errors;
  for (std::uint64_t seed : {2, 5}) {
    const auto s = scenegen::render(scenegen::random_scene(preset, scenegen::SceneKind::Transparent, seed), preset.rig);
    auto pred = exact_prediction(s.gt);
    scenegen::Rng rng(seed);
    for (auto& v : pred.foreground.values()) v += rng.uniform(-3.0, 3.0);
    for (int r = 0; r < s.gt.rows(); ++r) {
      for (int c = 0; c < s.gt.cols(); ++c) {
        if (s.gt.valid(r, c)) errors.push_back(std::abs(pred.foreground(r, c) - s.gt.fg_disparity(r, c)));
      }
    }
    reports.push_back(evaluate_sample(pred, s.gt, s.rig));
  }
  double sum = 0.0;
  long bad = 0;
  for (double e : errors) {
    sum += e;
    bad += e > 2.0;
  }
  const auto agg = aggregate(reports);
  CHECK(agg.find(Region::Foreground, Metric::Epe).count == static_cast<long>(errors.size()));
  CHECK(agg.value(Region::Foreground, Metric::Epe) == doctest::Approx(sum / errors.size()).epsilon(1e-9));
  CHECK(agg.value(Region::Foreground, Metric::BadTau, 2.0) ==
        doctest::Approx(100.0 * bad / errors.size()).epsilon(1e-9));
  CHECK_THROWS_AS(aggregate({}), std::invalid_argument);
  auto other = reports[1];
  other.rows.pop_back();
  CHECK_THROWS_AS(aggregate({reports[0], other}), std::invalid_argument);
}

TEST_CASE("report serialisation") {
  const auto preset = scenegen::tabletop_preset();
  const auto s = scenegen::render(scenegen::random_scene(preset, scenegen::SceneKind::Plain, 1), preset.rig);
  const auto rep = evaluate_sample(exact_prediction(s.gt), s.gt, s.rig);
  const auto csv = to_csv(rep);
  CHECK(csv.rfind("region,metric,threshold,value,count\n", 0) == 0);
  CHECK(csv.find("Foreground,EPE,,0,") != std::string::npos);
  CHECK(csv.find("Background,EPE,,nan,0") != std::string::npos);
  CHECK(csv.find("Foreground,bad-tau,3,0,") != std::string::npos);
  const auto text = to_text(rep);
  CHECK(text.find("[Foreground] count=") != std::string::npos);
  CHECK(text.find("twice") != std::string::npos);
}
