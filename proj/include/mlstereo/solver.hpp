#pragma once

#include <array>
#include <span>
#include <vector>

#include "mlstereo/gaussian.hpp"
#include "mlstereo/grid.hpp"
#include "mlstereo/matching.hpp"

namespace mlstereo::solver {

/// Per-pixel MGR parameters as five dense planes.
struct MgrField {
  Plane mu0;
  Plane mu1;
  Plane sigma0;
  Plane sigma1;
  Plane rho;

  MgrField() = default;
  MgrField(int rows, int cols);

  int rows() const noexcept { return mu0.rows(); }
  int cols() const noexcept { return mu0.cols(); }

  gaussian::MgrParams at(int r, int c) const;
  void set(int r, int c, const gaussian::MgrParams& p);

  friend bool operator==(const MgrField&, const MgrField&) = default;
};

/// Affine coefficients of the covariance stage.
///
///   raw_sigma_i = sigma_bias - sigma_sharpness * ln(max(-h_i, sharpness_floor))
///               + sigma_step * |delta_i| + sigma_peak * (1 - p_i / max(p_0, p_1))
///   sigma_i     = softplus(raw_sigma_i)
///
///   E     = gate(separation) * prominence * contrast / (contrast + contrast_ref)
///   raw_rho = rho_bias - rho_gain * box_mean(E, evidence_radius)
///   rho   = sigmoid(raw_rho)
///
/// h_i is the fitted curvature of the cost profile at mu_i, p_i the cost at
/// mu_i, prominence = max(0, min(p)) / max(p), gate ramps linearly from 0 at
/// equal means to 1 at a separation of nms_radius bins (|mu0 - mu1| / dmax
/// measured against nms_radius / dmax), and contrast is the local standard
/// deviation context channel.
struct CovarianceCoefficients {
  double sigma_bias = -0.5;
  double sigma_sharpness = 0.5;
  double sigma_step = 2.0;
  double sigma_peak = 12.0;
  double sharpness_floor = 1e-3;
  double rho_bias = 3.96;  ///< rho = 0.5 at E = 0.33
  double rho_gain = 12.0;
  double contrast_ref = 0.001;
  int evidence_radius = 2;
};

struct SolverConfig {
  int iterations = 32;
  int lookup_radius = 4;
  int initial_lookup_radius = 8;  ///< used for the first quarter of the iterations
  double step_clamp = 1.0;        ///< per label per iteration, 1/4-resolution pixels
  int nms_radius = 4;
  /// Second candidates scoring below this fraction of the first are dropped,
  /// so single-surface pixels start with both labels on the same peak.
  double candidate_min_ratio = 0.3;
  double damping = 0.1;
  double fallback_step = 0.5;  ///< step length when the fitted profile is not concave
  bool covariance_every_iteration = false;
  int dmax = 48;
  int aggregation_radius = 6;
  double upsample_sharpness = 10.0;
  matching::FeatureConfig features;
  CovarianceCoefficients coefficients;
};

/// Throws std::invalid_argument when cfg violates its invariants.
void validate(const SolverConfig& cfg);

/// Lookup radius in effect at 0-based iteration `iteration`.
int lookup_radius_at(const SolverConfig& cfg, int iteration) noexcept;

struct IterationRecord {
  Plane mu0;
  Plane mu1;
  double mean_abs_step = 0.0;  ///< mean over pixels and both labels
  double objective = 0.0;      ///< objective() at the updated means
};
using IterationTrace = std::vector<IterationRecord>;

/// Weighted quadratic fit s(k) ~ value + gradient k + curvature k^2 / 2 of
/// samples at offsets k = -R..R, with Gaussian weights of the given width.
/// The solver uses width R / 8.
struct ProfileFit {
  double value = 0.0;
  double gradient = 0.0;
  double curvature = 0.0;
};
ProfileFit fit_profile(std::span<const double> samples, double width);

/// Damped Newton ascent step on a fitted profile, clamped to cfg.step_clamp.
double newton_step(const ProfileFit& fit, const SolverConfig& cfg) noexcept;

struct UpdateStep {
  Plane d0;
  Plane d1;
};

/// mu from the two candidates (canonical order), sigma = 2, rho = 0.5.
MgrField init_state(const matching::CandidateSet& cands);

/// Independent per-label steps from the cost profile sampled around each mean.
/// A step is halved up to twice, then dropped, if it would lower smooth_cost.
UpdateStep update_mean(const MgrField& state, const matching::CostVolume& cv, const SolverConfig& cfg,
                       int radius);
UpdateStep update_mean(const MgrField& state, const matching::CostVolume& cv, const SolverConfig& cfg);

/// state.mu += step, then canonicalisation (mu0 >= mu1, sigmas follow).
void apply_step(MgrField& state, const UpdateStep& step);

struct CovarianceFields {
  Plane sigma0;
  Plane sigma1;
  Plane rho;
};

/// Raw per-pixel transparency evidence before smoothing.
Plane transparency_evidence(const MgrField& state, const matching::CostVolume& cv,
                            const matching::FeatureMap& context, const SolverConfig& cfg);

CovarianceFields estimate_covariance(const MgrField& state, const UpdateStep& delta,
                                     const matching::CostVolume& cv, const matching::FeatureMap& context,
                                     const SolverConfig& cfg);

/// Writes the covariance fields into state.
void apply_covariance(MgrField& state, const CovarianceFields& cov);

/// Per full-resolution pixel, convex weights over the 3x3 coarse neighbourhood
/// of its parent, row-major from (-1, -1) to (+1, +1).
using Weights9 = std::array<double, 9>;
using UpsampleWeights = Grid<Weights9>;

/// Plane at 1/4 resolution to full resolution. Weights are renormalised;
/// neighbours outside the coarse grid are skipped.
Plane convex_upsample(const Plane& coarse, const UpsampleWeights& weights);

/// Bilinear tent prior times a softmax of the parent's cost sampled at each
/// neighbour's better-supported mean.
UpsampleWeights upsample_weights(const matching::CostVolume& cv, const MgrField& coarse, double sharpness);

/// All five planes; disparities and standard deviations scaled by 4.
MgrField upsample_field(const MgrField& coarse, const UpsampleWeights& weights);

/// Cost at real label d through the parabola of the three nearest bins, with
/// d clamped to the in-image range [0, min(c, dmax - 1)].
double smooth_cost(const matching::CostVolume& cv, int r, int c, double d) noexcept;

/// Mean over pixels of smooth_cost at both means. update_mean never lowers a
/// pixel's term, so the objective is non-decreasing across iterations.
double objective(const MgrField& state, const matching::CostVolume& cv);

struct SolverResult {
  MgrField field;   ///< full resolution
  MgrField coarse;  ///< 1/4 resolution, after the last iteration
  IterationTrace trace;
};

/// Iterations and upsampling on a prepared cost volume.
SolverResult solve(const matching::CostVolume& cv, const matching::FeatureMap& context, const SolverConfig& cfg);

/// Features, cost volume, candidates, iterations, upsampling. Throws
/// ShapeError for mismatched or non-divisible inputs.
SolverResult run(const Raster& left, const Raster& right, const SolverConfig& cfg = {});

}  // namespace mlstereo::solver
