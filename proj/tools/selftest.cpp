#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "commands.hpp"
#include "mlstereo/evaluate.hpp"
#include "mlstereo/gaussian.hpp"
#include "mlstereo/io.hpp"
#include "mlstereo/matching.hpp"

namespace mlstereo::cli {

namespace {

struct CheckResult {
  bool ok = true;
  std::string detail;
};

CheckResult check_gradient(bool inject_fault) {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> mu(0.0, 48.0);
  std::uniform_real_distribution<double> sigma(0.5, 5.0);
  std::uniform_real_distribution<double> rho(0.05, 0.95);
  std::uniform_real_distribution<double> offset(-3.0, 3.0);
  constexpr double h = 1e-5;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    gaussian::MgrParams p{mu(rng), mu(rng), sigma(rng), sigma(rng), rho(rng)};
    const gaussian::Pair x{p.mu0 + offset(rng) * p.sigma0, p.mu1 + offset(rng) * p.sigma1};
    auto g = gaussian::nll_grad(p, x);
    if (inject_fault) g.d_mu0 += 1e-3;
    const double analytic[5] = {g.d_mu0, g.d_mu1, g.d_sigma0, g.d_sigma1, g.d_rho};
    double* fields[5] = {&p.mu0, &p.mu1, &p.sigma0, &p.sigma1, &p.rho};
    for (int k = 0; k < 5; ++k) {
      const double saved = *fields[k];
      *fields[k] = saved + h;
      const double up = gaussian::nll(p, x);
      *fields[k] = saved - h;
      const double down = gaussian::nll(p, x);
      *fields[k] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double rel = std::abs(analytic[k] - numeric) / std::max({1.0, std::abs(analytic[k]), std::abs(numeric)});
      worst = std::max(worst, rel);
    }
  }
  return {worst < 1e-5, "max relative error " + io::format_real(worst)};
}

matching::PixelCandidates exhaustive_candidates(const std::vector<double>& profile, int nms) {
  const int n = static_cast<int>(profile.size());
  auto local_max = [&](int d) {
    return (d == 0 || profile[d - 1] <= profile[d]) && (d == n - 1 || profile[d + 1] <= profile[d]);
  };
  int d0 = 0;
  for (int d = 0; d < n; ++d) {
    if (profile[d] > profile[d0]) d0 = d;
  }
  matching::PixelCandidates out;
  out.first = {d0, profile[d0]};
  out.second = out.first;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a != d0 || std::abs(a - b) < nms || !(profile[b] > 0.0) || !local_max(b)) continue;
      if (out.duplicated || profile[b] > out.second.score) {
        out.second = {b, profile[b]};
        out.duplicated = false;
      }
    }
  }
  return out;
}

CheckResult check_candidates() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> cost(-1.0, 1.0);
  for (int v = 0; v < 100; ++v) {
    std::vector<double> data(16 * 16 * 32);
    for (auto& x : data) x = cost(rng);
    const matching::CostVolume cv(16, 16, 32, data);
    const auto got = matching::extract_candidates(cv, 4);
    for (int r = 0; r < 16; ++r) {
      for (int c = 0; c < 16; ++c) {
        const auto p = cv.profile(r, c);
        if (!(got(r, c) == exhaustive_candidates({p.begin(), p.end()}, 4))) {
          return {false, "volume " + std::to_string(v) + " pixel (" + std::to_string(r) + ", " + std::to_string(c) + ")"};
        }
      }
    }
  }
  return {true, "100 volumes"};
}

CheckResult check_pfm() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> value(-1e3F, 1e3F);
  for (double scale : {-1.0, 1.0}) {
    io::PfmImage img;
    img.width = 17;
    img.height = 9;
    img.scale = scale;
    for (int i = 0; i < 17 * 9; ++i) img.samples.push_back(value(rng));
    const auto back = io::parse_pfm(io::serialize_pfm(img));
    if (!(back == img)) return {false, "scale " + io::format_real(scale)};
  }
  return {true, "17x9, both byte orders"};
}

CheckResult check_metrics() {
  const CameraRig rig{933.34, 0.1, 8, 6};
  fusion::LabeledDisparity pred;
  GroundTruthBundle gt;
  gt.fg_disparity = Plane(6, 8, 40.0);
  gt.bg_disparity = Plane(6, 8, 20.0);
  gt.transparent_mask = Mask(6, 8, 0);
  for (int c = 2; c < 6; ++c) gt.transparent_mask(2, c) = 1;
  gt.valid = Mask(6, 8, 1);
  pred.foreground = gt.fg_disparity;
  pred.background = gt.bg_disparity;
  pred.fused = pred.foreground;
  pred.transparent_mask = gt.transparent_mask;
  pred.rho_map = Plane(6, 8, 1.0);
  const auto exact = evaluate::evaluate_sample(pred, gt, rig, {});
  for (const auto& row : exact.rows) {
    if (row.value != 0.0) return {false, "pred = gt gives a non-zero row"};
  }
  for (auto& v : pred.foreground.values()) v += 4.0;
  for (auto& v : pred.background.values()) v += 4.0;
  const auto shifted = evaluate::evaluate_sample(pred, gt, rig, {});
  if (shifted.value(evaluate::Region::All, evaluate::Metric::BadTau, 3.0) != 100.0 ||
      shifted.value(evaluate::Region::All, evaluate::Metric::BadTau, 5.0) != 0.0 ||
      shifted.value(evaluate::Region::All, evaluate::Metric::Epe) != 4.0) {
    return {false, "uniform 4 px error"};
  }
  const Plane d(1, 3, 46.667);
  const Plane back = evaluate::disparity_to_depth(evaluate::disparity_to_depth(d, rig), rig);
  if (std::abs(back(0, 1) - 46.667) > 1e-9) return {false, "depth round trip"};
  return {true, "zero report, bad-3/bad-5 identity, depth round trip"};
}

}  // namespace

int cmd_selftest(const SelftestOptions& opts) {
  struct Check {
    const char* name;
    std::function<CheckResult()> run;
  };
  const std::vector<Check> checks{
      {"nll_gradient", [&] { return check_gradient(opts.inject_gradient_fault); }},
      {"candidate_oracle", check_candidates},
      {"pfm_round_trip", check_pfm},
      {"metric_identities", check_metrics},
  };
  int failed = 0;
  for (const auto& check : checks) {
    const auto t0 = std::chrono::steady_clock::now();
    const CheckResult r = check.run();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (r.ok ? "PASS " : "FAIL ") << check.name << " (" << r.detail << ", " << io::format_real(secs)
              << " s)\n";
    failed += r.ok ? 0 : 1;
  }
  std::cout << (failed == 0 ? "selftest: all checks passed\n" : "selftest: " + std::to_string(failed) + " failed\n");
  return failed == 0 ? kOk : kValidation;
}

}  // namespace mlstereo::cli
