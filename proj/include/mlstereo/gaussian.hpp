#pragma once

#include <array>

namespace mlstereo::gaussian {

/// Per-pixel bivariate Gaussian over the two disparity labels. Label 0 is the
/// nearer (foreground) surface, label 1 the surface seen through it.
struct MgrParams {
  double mu0 = 0.0;
  double mu1 = 0.0;
  double sigma0 = 1.0;
  double sigma1 = 1.0;
  double rho = 0.0;

  friend bool operator==(const MgrParams&, const MgrParams&) = default;
};

/// Network-style unconstrained outputs before activation.
struct RawMgrParams {
  double mu0 = 0.0;
  double mu1 = 0.0;
  double s0_raw = 0.0;
  double s1_raw = 0.0;
  double rho_raw = 0.0;
};

/// Symmetric 2x2 covariance [[s00, s01], [s01, s11]] in pixels^2.
struct CovarianceMatrix {
  double s00 = 1.0;
  double s01 = 0.0;
  double s11 = 1.0;

  double determinant() const noexcept { return s00 * s11 - s01 * s01; }
  /// Ascending eigenvalues.
  std::array<double, 2> eigenvalues() const noexcept;
};

struct Univariate {
  double mean = 0.0;
  double stddev = 1.0;

  double log_pdf(double x) const noexcept;
  double pdf(double x) const noexcept;
};

/// Partial derivatives of the negative log-likelihood.
struct NllGradient {
  double d_mu0 = 0.0;
  double d_mu1 = 0.0;
  double d_sigma0 = 0.0;
  double d_sigma1 = 0.0;
  double d_rho = 0.0;
};

using Pair = std::array<double, 2>;

/// Lower bound applied to 1 - rho^2 when clamping is enabled.
inline constexpr double kDetFloor = 1e-12;

double softplus(double x) noexcept;
double sigmoid(double x) noexcept;

/// sigma = softplus(raw), rho = sigmoid(raw); rho is kept strictly inside (0, 1).
MgrParams activate(const RawMgrParams& raw) noexcept;

/// Throws std::invalid_argument unless sigma > 0 and 0 <= rho <= 1.
void validate(const MgrParams& p);

double log_pdf(const Pair& x, const MgrParams& p, bool clamp = true);
double nll(const MgrParams& p, const Pair& x_gt, bool clamp = true);
NllGradient nll_grad(const MgrParams& p, const Pair& x_gt, bool clamp = true);

/// Univariate marginal of one label (0 or 1).
Univariate marginal(const MgrParams& p, int label);

CovarianceMatrix covariance(const MgrParams& p) noexcept;

/// Orders labels so mu0 >= mu1, carrying sigma along; ties keep the current order.
void canonicalize(MgrParams& p) noexcept;

/// Log-density of N(mean, stddev^2).
double log_pdf_1d(double x, double mean, double stddev) noexcept;

}  // namespace mlstereo::gaussian
