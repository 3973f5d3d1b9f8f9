#pragma once

#include <vector>

#include "mlstereo/grid.hpp"
#include "mlstereo/ground_truth.hpp"
#include "mlstereo/solver.hpp"

namespace mlstereo::losses {

struct LossConfig {
  double beta0 = 1e-5;  ///< likelihood weight
  double beta1 = 1.0;   ///< correlation weight
  double gamma = 0.9;   ///< iteration decay
  double rho_gt_normal = 0.95;
  double rho_gt_transparent = 0.0;
};

/// Throws std::invalid_argument unless 0 < gamma <= 1 and weights >= 0.
void validate(const LossConfig& cfg);

struct LossReport {
  double l_mu = 0.0;
  double l_d = 0.0;
  double l_lh = 0.0;
  double l_rho = 0.0;
  double total = 0.0;  ///< l_mu + l_d + beta0 l_lh + beta1 l_rho
  bool empty_normal_area = false;
};

/// Pixels that enter every per-pixel mean: gt.valid when present, else all.
Mask evaluation_mask(const GroundTruthBundle& gt);

/// Valid pixels outside the transparent mask.
Mask normal_area_mask(const GroundTruthBundle& gt);

/// Ground-truth label pair at a pixel: (fg, bg) inside the mask, (fg, fg) outside.
gaussian::Pair gt_labels(const GroundTruthBundle& gt, int r, int c);

/// Mean of |mu0 - gt0| + |mu1 - gt1|.
double loss_mu(const solver::MgrField& field, const GroundTruthBundle& gt);

struct MaskedMean {
  double value = 0.0;
  bool empty_mask = false;  ///< value is 0 by definition when set
};

/// Mean |fused - fg| over normal_mask.
MaskedMean loss_d(const Plane& fused, const GroundTruthBundle& gt, const Mask& normal_mask);

/// Mean bivariate NLL at the ground-truth label pair.
double loss_lh(const solver::MgrField& field, const GroundTruthBundle& gt, bool clamp = true);

/// Mean |rho - rho_gt| over all pixels, or over `valid` when given.
double loss_rho(const Plane& rho_map, const Mask& transparent_mask, const LossConfig& cfg);
double loss_rho(const Plane& rho_map, const Mask& transparent_mask, const Mask& valid, const LossConfig& cfg);

/// All four terms for one iteration's field and fused map.
LossReport evaluate(const solver::MgrField& field, const Plane& fused, const GroundTruthBundle& gt,
                    const LossConfig& cfg = {});

/// gamma^(M - i) for i = 1..M.
std::vector<double> iteration_weights(int iterations, double gamma);

/// Sum over iterations of gamma^(M - i) (l_mu + l_d + beta0 l_lh + beta1 l_rho).
/// Throws std::invalid_argument for an empty list.
double total_loss(const std::vector<LossReport>& per_iteration, const LossConfig& cfg = {});

}  // namespace mlstereo::losses
