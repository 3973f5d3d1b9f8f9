#include "mlstereo/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mlstereo/parallel.hpp"

namespace mlstereo::solver {

using matching::CostVolume;
using matching::FeatureMap;

MgrField::MgrField(int rows, int cols)
    : mu0(rows, cols), mu1(rows, cols), sigma0(rows, cols, 2.0), sigma1(rows, cols, 2.0), rho(rows, cols, 0.5) {}

gaussian::MgrParams MgrField::at(int r, int c) const {
  return {mu0(r, c), mu1(r, c), sigma0(r, c), sigma1(r, c), rho(r, c)};
}

void MgrField::set(int r, int c, const gaussian::MgrParams& p) {
  mu0(r, c) = p.mu0;
  mu1(r, c) = p.mu1;
  sigma0(r, c) = p.sigma0;
  sigma1(r, c) = p.sigma1;
  rho(r, c) = p.rho;
}

void validate(const SolverConfig& cfg) {
  if (cfg.iterations < 1) throw std::invalid_argument("solver: iterations must be >= 1");
  if (cfg.lookup_radius < 1 || cfg.initial_lookup_radius < 1) {
    throw std::invalid_argument("solver: lookup radii must be >= 1");
  }
  if (cfg.nms_radius < 1) throw std::invalid_argument("solver: nms_radius must be >= 1");
  if (cfg.candidate_min_ratio < 0.0 || cfg.candidate_min_ratio > 1.0) {
    throw std::invalid_argument("solver: candidate_min_ratio must lie in [0, 1]");
  }
  if (!(cfg.damping > 0.0)) throw std::invalid_argument("solver: damping must be > 0");
  if (!(cfg.step_clamp > 0.0)) throw std::invalid_argument("solver: step_clamp must be > 0");
  if (cfg.dmax < 1) throw std::invalid_argument("solver: dmax must be >= 1");
  if (cfg.aggregation_radius < 0) throw std::invalid_argument("solver: aggregation_radius must be >= 0");
}

int lookup_radius_at(const SolverConfig& cfg, int iteration) noexcept {
  return iteration < cfg.iterations / 4 ? cfg.initial_lookup_radius : cfg.lookup_radius;
}

ProfileFit fit_profile(std::span<const double> samples, double width) {
  const int n = static_cast<int>(samples.size());
  const int radius = n / 2;
  ProfileFit fit;
  if (n == 0) return fit;
  fit.value = samples[static_cast<std::size_t>(radius)];
  if (radius == 0) return fit;

  const double inv2w2 = 1.0 / (2.0 * width * width);
  double w0 = 1.0;  // sum of w
  double w2 = 0.0;  // sum of w k^2
  double w4 = 0.0;  // sum of w k^4
  double s0 = fit.value;
  double s2 = 0.0;
  double odd = 0.0;
  for (int k = 1; k <= radius; ++k) {
    const double w = std::exp(-k * k * inv2w2);
    const double kk = static_cast<double>(k) * k;
    const double plus = samples[static_cast<std::size_t>(radius + k)];
    const double minus = samples[static_cast<std::size_t>(radius - k)];
    w0 += 2.0 * w;
    w2 += 2.0 * w * kk;
    w4 += 2.0 * w * kk * kk;
    s0 += w * (plus + minus);
    s2 += w * kk * (plus + minus);
    odd += w * k * (plus - minus);
  }
  fit.gradient = odd / w2;
  // Even part: [w0, w2/2; w2/2, w4/4] [a; h] = [s0; s2/2].
  const double det = 0.25 * (w0 * w4 - w2 * w2);
  if (std::abs(det) > 1e-300) {
    fit.value = (s0 * 0.25 * w4 - 0.5 * w2 * 0.5 * s2) / det;
    fit.curvature = (w0 * 0.5 * s2 - 0.5 * w2 * s0) / det;
  }
  return fit;
}

double newton_step(const ProfileFit& fit, const SolverConfig& cfg) noexcept {
  constexpr double kConcave = 1e-9;
  double step = 0.0;
  if (fit.curvature < -kConcave) {
    step = fit.gradient / ((1.0 + cfg.damping) * -fit.curvature + 1e-12);
  } else if (fit.gradient > 0.0) {
    step = cfg.fallback_step;
  } else if (fit.gradient < 0.0) {
    step = -cfg.fallback_step;
  }
  return std::clamp(step, -cfg.step_clamp, cfg.step_clamp);
}

MgrField init_state(const matching::CandidateSet& cands) {
  MgrField state(cands.rows(), cands.cols());
  parallel_rows(cands.rows(), [&](int r) {
    for (int c = 0; c < cands.cols(); ++c) {
      const auto& pc = cands(r, c);
      const double a = pc.first.disparity;
      const double b = pc.second.disparity;
      state.mu0(r, c) = std::max(a, b);
      state.mu1(r, c) = std::min(a, b);
    }
  });
  return state;
}

namespace {

// The fit narrows together with the lookup radius.
double fit_width(int radius) { return 0.125 * radius; }

}  // namespace

namespace {

// Lookup around mu with out-of-image bins (d > c) replaced by the last
// in-image value, so the fit never sees the sentinel cliff.
void in_image_profile(const CostVolume& cv, int r, int c, double mu, int radius, std::vector<double>& out) {
  out.resize(static_cast<std::size_t>(2 * radius + 1));
  const double edge = std::min(static_cast<double>(c), cv.dmax() - 1.0);
  for (int k = -radius; k <= radius; ++k) {
    out[static_cast<std::size_t>(k + radius)] = cv.sample(r, c, std::min(mu + k, edge));
  }
}

// Largest in-image label at column c.
double in_image_limit(const CostVolume& cv, int c) { return std::min(cv.dmax() - 1.0, static_cast<double>(c)); }

// Shrinks a step until the smoothed cost does not drop; zero if it always does.
double accepted_step(const CostVolume& cv, int r, int c, double mu, double step) {
  const double base = smooth_cost(cv, r, c, mu);
  for (int k = 0; k < 3 && step != 0.0; ++k, step *= 0.5) {
    if (smooth_cost(cv, r, c, mu + step) >= base) return step;
  }
  return 0.0;
}

}  // namespace

double smooth_cost(const CostVolume& cv, int r, int c, double d) noexcept {
  const double hi = in_image_limit(cv, c);
  d = std::clamp(d, 0.0, hi);
  if (hi < 2.0) return cv.sample(r, c, d);
  const int k = std::clamp(static_cast<int>(std::lround(d)), 1, static_cast<int>(hi) - 1);
  const double t = d - k;
  const double a = cv.at(r, c, k - 1);
  const double b = cv.at(r, c, k);
  const double e = cv.at(r, c, k + 1);
  return b + 0.5 * t * (e - a) + 0.5 * t * t * (a - 2.0 * b + e);
}

UpdateStep update_mean(const MgrField& state, const CostVolume& cv, const SolverConfig& cfg, int radius) {
  require_same_shape(state.mu0, cv, "update_mean");
  const double width = fit_width(radius);
  UpdateStep step{Plane(state.rows(), state.cols()), Plane(state.rows(), state.cols())};
  parallel_rows(state.rows(), [&](int r) {
    std::vector<double> profile;
    for (int c = 0; c < state.cols(); ++c) {
      // Steps stay on in-image matches (d <= c) inside the sampled range.
      const double hi = in_image_limit(cv, c);
      const auto label_step = [&](double m) {
        in_image_profile(cv, r, c, m, radius, profile);
        const double s = newton_step(fit_profile(profile, width), cfg);
        return accepted_step(cv, r, c, m, std::clamp(s, std::min(0.0, -m), std::max(0.0, hi - m)));
      };
      step.d0(r, c) = label_step(state.mu0(r, c));
      step.d1(r, c) = label_step(state.mu1(r, c));
    }
  });
  return step;
}

UpdateStep update_mean(const MgrField& state, const CostVolume& cv, const SolverConfig& cfg) {
  return update_mean(state, cv, cfg, cfg.lookup_radius);
}

void apply_step(MgrField& state, const UpdateStep& step) {
  require_same_shape(state.mu0, step.d0, "apply_step");
  require_same_shape(state.mu0, step.d1, "apply_step");
  parallel_rows(state.rows(), [&](int r) {
    for (int c = 0; c < state.cols(); ++c) {
      auto p = state.at(r, c);
      p.mu0 += step.d0(r, c);
      p.mu1 += step.d1(r, c);
      gaussian::canonicalize(p);
      state.set(r, c, p);
    }
  });
}

Plane transparency_evidence(const MgrField& state, const CostVolume& cv, const FeatureMap& context,
                            const SolverConfig& cfg) {
  require_same_shape(state.mu0, cv, "transparency_evidence");
  require_same_shape(state.mu0, context, "transparency_evidence");
  const auto& k = cfg.coefficients;
  Plane evidence(state.rows(), state.cols());
  parallel_rows(state.rows(), [&](int r) {
    for (int c = 0; c < state.cols(); ++c) {
      const double separation = std::abs(state.mu0(r, c) - state.mu1(r, c)) / cv.dmax();
      const double gate = std::min(1.0, separation / (static_cast<double>(cfg.nms_radius) / cv.dmax()));
      const double p0 = cv.sample(r, c, state.mu0(r, c));
      const double p1 = cv.sample(r, c, state.mu1(r, c));
      const double top = std::max(p0, p1);
      const double prominence = top > 1e-9 ? std::max(0.0, std::min(p0, p1)) / top : 0.0;
      const double contrast = context.at(r, c)[0];
      const double confidence = contrast / (contrast + k.contrast_ref);
      evidence(r, c) = gate * prominence * confidence;
    }
  });
  return evidence;
}

CovarianceFields estimate_covariance(const MgrField& state, const UpdateStep& delta, const CostVolume& cv,
                                     const FeatureMap& context, const SolverConfig& cfg) {
  require_same_shape(state.mu0, delta.d0, "estimate_covariance");
  require_same_shape(state.mu0, delta.d1, "estimate_covariance");
  const auto& k = cfg.coefficients;
  const int rows = state.rows();
  const int cols = state.cols();
  const int radius = cfg.lookup_radius;
  const double width = fit_width(radius);
  const auto slab0 = matching::lookup(cv, state.mu0, radius);
  const auto slab1 = matching::lookup(cv, state.mu1, radius);
  const Plane evidence = transparency_evidence(state, cv, context, cfg);

  CovarianceFields out{Plane(rows, cols), Plane(rows, cols), Plane(rows, cols)};
  parallel_rows(rows, [&](int r) {
    for (int c = 0; c < cols; ++c) {
      const auto f0 = fit_profile(slab0.at(r, c), width);
      const auto f1 = fit_profile(slab1.at(r, c), width);
      const double p0 = slab0.at(r, c)[static_cast<std::size_t>(radius)];
      const double p1 = slab1.at(r, c)[static_cast<std::size_t>(radius)];
      const double top = std::max({p0, p1, 1e-9});
      auto raw_sigma = [&](const ProfileFit& f, double p, double step) {
        return k.sigma_bias - k.sigma_sharpness * std::log(std::max(-f.curvature, k.sharpness_floor)) +
               k.sigma_step * std::abs(step) + k.sigma_peak * (1.0 - std::max(p, 0.0) / top);
      };
      out.sigma0(r, c) = gaussian::softplus(raw_sigma(f0, p0, delta.d0(r, c)));
      out.sigma1(r, c) = gaussian::softplus(raw_sigma(f1, p1, delta.d1(r, c)));

      double sum = 0.0;
      int n = 0;
      for (int i = std::max(0, r - k.evidence_radius); i <= std::min(rows - 1, r + k.evidence_radius); ++i) {
        for (int j = std::max(0, c - k.evidence_radius); j <= std::min(cols - 1, c + k.evidence_radius); ++j) {
          sum += evidence(i, j);
          ++n;
        }
      }
      const double e = sum / n;
      out.rho(r, c) = gaussian::sigmoid(k.rho_bias - k.rho_gain * e);
    }
  });
  return out;
}

void apply_covariance(MgrField& state, const CovarianceFields& cov) {
  require_same_shape(state.mu0, cov.rho, "apply_covariance");
  state.sigma0 = cov.sigma0;
  state.sigma1 = cov.sigma1;
  state.rho = cov.rho;
}

Plane convex_upsample(const Plane& coarse, const UpsampleWeights& weights) {
  if (weights.rows() != coarse.rows() * matching::kScale || weights.cols() != coarse.cols() * matching::kScale) {
    throw ShapeError("convex_upsample: weights must be 4x the coarse shape");
  }
  Plane out(weights.rows(), weights.cols());
  parallel_rows(out.rows(), [&](int r) {
    const int pr = r / matching::kScale;
    for (int c = 0; c < out.cols(); ++c) {
      const int pc = c / matching::kScale;
      const auto& w = weights(r, c);
      double acc = 0.0;
      double total = 0.0;
      for (int i = -1; i <= 1; ++i) {
        for (int j = -1; j <= 1; ++j) {
          const int qr = pr + i;
          const int qc = pc + j;
          if (qr < 0 || qr >= coarse.rows() || qc < 0 || qc >= coarse.cols()) continue;
          const double wk = std::max(0.0, w[static_cast<std::size_t>((i + 1) * 3 + (j + 1))]);
          acc += wk * coarse(qr, qc);
          total += wk;
        }
      }
      out(r, c) = total > 0.0 ? acc / total : coarse(pr, pc);
    }
  });
  return out;
}

UpsampleWeights upsample_weights(const CostVolume& cv, const MgrField& coarse, double sharpness) {
  require_same_shape(coarse.mu0, cv, "upsample_weights");
  const int rows = coarse.rows();
  const int cols = coarse.cols();
  UpsampleWeights out(rows * matching::kScale, cols * matching::kScale);
  parallel_rows(out.rows(), [&](int r) {
    const int pr = r / matching::kScale;
    const double y = (r + 0.5) / matching::kScale - 0.5;
    for (int c = 0; c < out.cols(); ++c) {
      const int pc = c / matching::kScale;
      const double x = (c + 0.5) / matching::kScale - 0.5;
      Weights9 score{};
      Weights9 tent{};
      double best = -1e300;
      for (int i = -1; i <= 1; ++i) {
        for (int j = -1; j <= 1; ++j) {
          const auto k = static_cast<std::size_t>((i + 1) * 3 + (j + 1));
          const int qr = pr + i;
          const int qc = pc + j;
          if (qr < 0 || qr >= rows || qc < 0 || qc >= cols) continue;
          tent[k] = std::max(0.0, 1.0 - std::abs(y - qr)) * std::max(0.0, 1.0 - std::abs(x - qc));
          if (tent[k] <= 0.0) continue;
          score[k] = std::max(cv.sample(pr, pc, coarse.mu0(qr, qc)), cv.sample(pr, pc, coarse.mu1(qr, qc)));
          best = std::max(best, score[k]);
        }
      }
      Weights9 w{};
      double total = 0.0;
      for (std::size_t k = 0; k < 9; ++k) {
        if (tent[k] <= 0.0) continue;
        w[k] = tent[k] * std::exp(sharpness * (score[k] - best));
        total += w[k];
      }
      for (double& v : w) v /= total;
      out(r, c) = w;
    }
  });
  return out;
}

MgrField upsample_field(const MgrField& coarse, const UpsampleWeights& weights) {
  const double s = matching::kScale;
  auto scaled = [&](const Plane& p) {
    Plane up = convex_upsample(p, weights);
    for (double& v : up.values()) v *= s;
    return up;
  };
  MgrField out;
  out.mu0 = scaled(coarse.mu0);
  out.mu1 = scaled(coarse.mu1);
  out.sigma0 = scaled(coarse.sigma0);
  out.sigma1 = scaled(coarse.sigma1);
  out.rho = convex_upsample(coarse.rho, weights);
  return out;
}

double objective(const MgrField& state, const CostVolume& cv) {
  require_same_shape(state.mu0, cv, "objective");
  const double total = ordered_row_sum(state.rows(), [&](int r) {
    double s = 0.0;
    for (int c = 0; c < state.cols(); ++c) {
      s += 0.5 * (smooth_cost(cv, r, c, state.mu0(r, c)) + smooth_cost(cv, r, c, state.mu1(r, c)));
    }
    return s;
  });
  return total / static_cast<double>(state.mu0.size());
}

namespace {

double mean_abs_step(const UpdateStep& step) {
  const double total = ordered_row_sum(step.d0.rows(), [&](int r) {
    double s = 0.0;
    for (int c = 0; c < step.d0.cols(); ++c) s += 0.5 * (std::abs(step.d0(r, c)) + std::abs(step.d1(r, c)));
    return s;
  });
  return total / static_cast<double>(step.d0.size());
}

}  // namespace

SolverResult solve(const CostVolume& cv, const FeatureMap& context, const SolverConfig& cfg) {
  validate(cfg);
  require_same_shape(cv, context, "solve");
  matching::CandidateConfig cc;
  cc.nms_radius = cfg.nms_radius;
  cc.min_ratio = cfg.candidate_min_ratio;
  MgrField state = init_state(matching::extract_candidates(cv, cc));

  SolverResult result;
  result.trace.reserve(static_cast<std::size_t>(cfg.iterations));
  for (int it = 0; it < cfg.iterations; ++it) {
    const UpdateStep step = update_mean(state, cv, cfg, lookup_radius_at(cfg, it));
    apply_step(state, step);
    if (cfg.covariance_every_iteration || it == cfg.iterations - 1) {
      apply_covariance(state, estimate_covariance(state, step, cv, context, cfg));
    }
    result.trace.push_back({state.mu0, state.mu1, mean_abs_step(step), objective(state, cv)});
  }
  result.field = upsample_field(state, upsample_weights(cv, state, cfg.upsample_sharpness));
  result.coarse = std::move(state);
  return result;
}

SolverResult run(const Raster& left, const Raster& right, const SolverConfig& cfg) {
  validate(cfg);
  require_same_shape(left, right, "run");
  const auto fl = matching::extract_features(left, cfg.features);
  const auto fr = matching::extract_features(right, cfg.features);
  const auto cv = matching::aggregate_costs(matching::build_cost_volume(fl, fr, cfg.dmax), cfg.aggregation_radius);
  const auto context = matching::extract_context(to_gray(left));
  return solve(cv, context, cfg);
}

}  // namespace mlstereo::solver
