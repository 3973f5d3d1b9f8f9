#include "mlstereo/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "mlstereo/parallel.hpp"

namespace mlstereo::losses {

namespace {

struct Accumulator {
  double sum = 0.0;
  long count = 0;
};

// Row-ordered masked mean of f(r, c).
template <class F>
Accumulator masked_sum(const Mask& mask, F&& f) {
  std::vector<long> counts(static_cast<std::size_t>(mask.rows()), 0);
  const double sum = ordered_row_sum(mask.rows(), [&](int r) {
    double s = 0.0;
    long n = 0;
    for (int c = 0; c < mask.cols(); ++c) {
      if (!mask(r, c)) continue;
      s += f(r, c);
      ++n;
    }
    counts[static_cast<std::size_t>(r)] = n;
    return s;
  });
  long n = 0;
  for (long k : counts) n += k;
  return {sum, n};
}

double mean_or_zero(const Accumulator& a) { return a.count > 0 ? a.sum / static_cast<double>(a.count) : 0.0; }

}  // namespace

void validate(const LossConfig& cfg) {
  if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0)) throw std::invalid_argument("losses: gamma must lie in (0, 1]");
  if (cfg.beta0 < 0.0 || cfg.beta1 < 0.0) throw std::invalid_argument("losses: weights must be non-negative");
}

Mask evaluation_mask(const GroundTruthBundle& gt) {
  if (gt.valid.same_shape(gt.fg_disparity)) return gt.valid;
  return Mask(gt.rows(), gt.cols(), 1);
}

Mask normal_area_mask(const GroundTruthBundle& gt) {
  Mask m = evaluation_mask(gt);
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      if (gt.transparent_mask(r, c)) m(r, c) = 0;
    }
  }
  return m;
}

gaussian::Pair gt_labels(const GroundTruthBundle& gt, int r, int c) {
  const double fg = gt.fg_disparity(r, c);
  return {fg, gt.transparent_mask(r, c) ? gt.bg_disparity(r, c) : fg};
}

double loss_mu(const solver::MgrField& field, const GroundTruthBundle& gt) {
  require_same_shape(field.mu0, gt.fg_disparity, "loss_mu");
  const Mask mask = evaluation_mask(gt);
  return mean_or_zero(masked_sum(mask, [&](int r, int c) {
    const auto x = gt_labels(gt, r, c);
    return std::abs(field.mu0(r, c) - x[0]) + std::abs(field.mu1(r, c) - x[1]);
  }));
}

MaskedMean loss_d(const Plane& fused, const GroundTruthBundle& gt, const Mask& normal_mask) {
  require_same_shape(fused, gt.fg_disparity, "loss_d");
  require_same_shape(fused, normal_mask, "loss_d");
  const auto acc = masked_sum(normal_mask, [&](int r, int c) { return std::abs(fused(r, c) - gt.fg_disparity(r, c)); });
  return {mean_or_zero(acc), acc.count == 0};
}

double loss_lh(const solver::MgrField& field, const GroundTruthBundle& gt, bool clamp) {
  require_same_shape(field.mu0, gt.fg_disparity, "loss_lh");
  const Mask mask = evaluation_mask(gt);
  return mean_or_zero(
      masked_sum(mask, [&](int r, int c) { return gaussian::nll(field.at(r, c), gt_labels(gt, r, c), clamp); }));
}

double loss_rho(const Plane& rho_map, const Mask& transparent_mask, const Mask& valid, const LossConfig& cfg) {
  require_same_shape(rho_map, transparent_mask, "loss_rho");
  require_same_shape(rho_map, valid, "loss_rho");
  return mean_or_zero(masked_sum(valid, [&](int r, int c) {
    const double target = transparent_mask(r, c) ? cfg.rho_gt_transparent : cfg.rho_gt_normal;
    return std::abs(rho_map(r, c) - target);
  }));
}

double loss_rho(const Plane& rho_map, const Mask& transparent_mask, const LossConfig& cfg) {
  return loss_rho(rho_map, transparent_mask, Mask(rho_map.rows(), rho_map.cols(), 1), cfg);
}

LossReport evaluate(const solver::MgrField& field, const Plane& fused, const GroundTruthBundle& gt,
                    const LossConfig& cfg) {
  validate(cfg);
  LossReport rep;
  rep.l_mu = loss_mu(field, gt);
  const auto d = loss_d(fused, gt, normal_area_mask(gt));
  rep.l_d = d.value;
  rep.empty_normal_area = d.empty_mask;
  rep.l_lh = loss_lh(field, gt);
  rep.l_rho = loss_rho(field.rho, gt.transparent_mask, evaluation_mask(gt), cfg);
  rep.total = rep.l_mu + rep.l_d + cfg.beta0 * rep.l_lh + cfg.beta1 * rep.l_rho;
  return rep;
}

std::vector<double> iteration_weights(int iterations, double gamma) {
  if (iterations < 1) throw std::invalid_argument("iteration_weights: need at least one iteration");
  std::vector<double> w(static_cast<std::size_t>(iterations));
  double v = 1.0;
  for (int i = iterations - 1; i >= 0; --i) {
    w[static_cast<std::size_t>(i)] = v;
    v *= gamma;
  }
  return w;
}

double total_loss(const std::vector<LossReport>& per_iteration, const LossConfig& cfg) {
  validate(cfg);
  if (per_iteration.empty()) throw std::invalid_argument("total_loss: empty iteration list");
  const auto w = iteration_weights(static_cast<int>(per_iteration.size()), cfg.gamma);
  double total = 0.0;
  for (std::size_t i = 0; i < per_iteration.size(); ++i) {
    const auto& p = per_iteration[i];
    total += w[i] * (p.l_mu + p.l_d + cfg.beta0 * p.l_lh + cfg.beta1 * p.l_rho);
  }
  return total;
}

}  // namespace mlstereo::losses
