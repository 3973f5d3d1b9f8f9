#include "mlstereo/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include "mlstereo/errors.hpp"

namespace mlstereo::gaussian {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;  // ln(2*pi)
constexpr double kRhoMargin = 1e-12;

// 1 - rho^2, factored to avoid cancellation near |rho| = 1.
double one_minus_rho_sq(double rho, bool clamp) {
  double d = (1.0 - rho) * (1.0 + rho);
  if (clamp) return std::max(d, kDetFloor);
  if (!(d > 0.0)) {
    throw DegenerateCovarianceError("degenerate covariance: 1 - rho^2 = " + std::to_string(d));
  }
  return d;
}

struct Standardized {
  double z0;
  double z1;
  double det;  // 1 - rho^2
};

Standardized standardize(const Pair& x, const MgrParams& p, bool clamp) {
  return {(x[0] - p.mu0) / p.sigma0, (x[1] - p.mu1) / p.sigma1, one_minus_rho_sq(p.rho, clamp)};
}

}  // namespace

std::array<double, 2> CovarianceMatrix::eigenvalues() const noexcept {
  const double half_trace = 0.5 * (s00 + s11);
  const double half_diff = 0.5 * (s00 - s11);
  const double radius = std::hypot(half_diff, s01);
  return {half_trace - radius, half_trace + radius};
}

double Univariate::log_pdf(double x) const noexcept { return log_pdf_1d(x, mean, stddev); }

double Univariate::pdf(double x) const noexcept { return std::exp(log_pdf(x)); }

double softplus(double x) noexcept {
  // log(1 + e^x) without overflow for large |x|.
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

MgrParams activate(const RawMgrParams& raw) noexcept {
  constexpr double tiny = std::numeric_limits<double>::min();
  MgrParams p;
  p.mu0 = raw.mu0;
  p.mu1 = raw.mu1;
  p.sigma0 = std::max(softplus(raw.s0_raw), tiny);
  p.sigma1 = std::max(softplus(raw.s1_raw), tiny);
  p.rho = std::clamp(sigmoid(raw.rho_raw), tiny, 1.0 - kRhoMargin);
  return p;
}

void validate(const MgrParams& p) {
  if (!(p.sigma0 > 0.0) || !(p.sigma1 > 0.0)) {
    throw std::invalid_argument("MgrParams: standard deviations must be positive");
  }
  if (!(p.rho >= 0.0 && p.rho <= 1.0)) {
    throw std::invalid_argument("MgrParams: rho must lie in [0, 1], got " + std::to_string(p.rho));
  }
}

double log_pdf_1d(double x, double mean, double stddev) noexcept {
  const double z = (x - mean) / stddev;
  return -0.5 * kLogTwoPi - std::log(stddev) - 0.5 * z * z;
}

double log_pdf(const Pair& x, const MgrParams& p, bool clamp) {
  const auto [z0, z1, det] = standardize(x, p, clamp);
  const double quad = (z0 * z0 - 2.0 * p.rho * z0 * z1 + z1 * z1) / det;
  return -kLogTwoPi - std::log(p.sigma0) - std::log(p.sigma1) - 0.5 * std::log(det) - 0.5 * quad;
}

double nll(const MgrParams& p, const Pair& x_gt, bool clamp) { return -log_pdf(x_gt, p, clamp); }

// With z_i = (x_i - mu_i) / sigma_i, D = 1 - rho^2 and N = z0^2 - 2 rho z0 z1 + z1^2:
//   nll        = ln 2pi + ln s0 + ln s1 + ln(D)/2 + N / (2D)
//   d/d mu0    = -(z0 - rho z1) / (D s0)
//   d/d sigma0 = 1/s0 - z0 (z0 - rho z1) / (D s0)
//   d/d rho    = -rho/D - z0 z1 / D + rho N / D^2
// and symmetrically for label 1.
NllGradient nll_grad(const MgrParams& p, const Pair& x_gt, bool clamp) {
  const auto [z0, z1, det] = standardize(x_gt, p, clamp);
  const double r0 = (z0 - p.rho * z1) / det;
  const double r1 = (z1 - p.rho * z0) / det;
  const double quad_num = z0 * z0 - 2.0 * p.rho * z0 * z1 + z1 * z1;
  NllGradient g;
  g.d_mu0 = -r0 / p.sigma0;
  g.d_mu1 = -r1 / p.sigma1;
  g.d_sigma0 = (1.0 - z0 * r0) / p.sigma0;
  g.d_sigma1 = (1.0 - z1 * r1) / p.sigma1;
  g.d_rho = -p.rho / det - z0 * z1 / det + p.rho * quad_num / (det * det);
  return g;
}

Univariate marginal(const MgrParams& p, int label) {
  switch (label) {
    case 0:
      return {p.mu0, p.sigma0};
    case 1:
      return {p.mu1, p.sigma1};
    default:
      throw std::out_of_range("marginal: label index must be 0 or 1, got " + std::to_string(label));
  }
}

CovarianceMatrix covariance(const MgrParams& p) noexcept {
  return {p.sigma0 * p.sigma0, p.rho * p.sigma0 * p.sigma1, p.sigma1 * p.sigma1};
}

void canonicalize(MgrParams& p) noexcept {
  if (p.mu0 < p.mu1) {
    std::swap(p.mu0, p.mu1);
    std::swap(p.sigma0, p.sigma1);
  }
}

}  // namespace mlstereo::gaussian
