#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mlstereo/fusion.hpp"
#include "mlstereo/grid.hpp"
#include "mlstereo/ground_truth.hpp"

namespace mlstereo::evaluate {

struct MetricThresholds {
  std::vector<double> taus{2.0, 3.0, 5.0};          ///< pixels
  std::vector<double> phis{3.0, 5.0, 7.0, 10.0};    ///< centimetres
  double min_disparity = 0.5;  ///< predicted disparities are floored here before depth conversion
};

/// Throws std::invalid_argument unless thresholds are positive and sorted.
void validate(const MetricThresholds& t);

enum class Region { Foreground, Background, All };
const char* region_name(Region r) noexcept;

enum class Metric { Epe, BadTau, Mae, BadPhi };
const char* metric_name(Metric m) noexcept;

struct MetricRow {
  Region region = Region::Foreground;
  Metric metric = Metric::Epe;
  std::optional<double> threshold;
  double value = 0.0;  ///< NaN when count is 0
  long count = 0;      ///< pixels (surface samples for All)
};

struct EvaluationReport {
  std::vector<MetricRow> rows;
  MetricThresholds thresholds;
  CameraRig rig;

  /// Row lookup; throws std::out_of_range when absent.
  const MetricRow& find(Region region, Metric metric, std::optional<double> threshold = std::nullopt) const;
  double value(Region region, Metric metric, std::optional<double> threshold = std::nullopt) const {
    return find(region, metric, threshold).value;
  }
};

/// Mean |pred - gt| over mask. Throws EmptyMaskError for an empty mask.
double epe(const Plane& pred, const Plane& gt, const Mask& mask);

/// 100 * fraction of mask pixels with |pred - gt| > tau (strict).
double bad_tau(const Plane& pred, const Plane& gt, const Mask& mask, double tau);

/// f B / d per pixel; non-positive disparities map to 0.
Plane disparity_to_depth(const Plane& d, const CameraRig& rig);

/// Paired samples of one region: predicted and true disparity.
struct Samples {
  std::vector<double> pred;
  std::vector<double> gt;
  void add(const Plane& p, const Plane& g, const Mask& mask);
};

/// All metric rows of one region.
std::vector<MetricRow> region_metrics(Region region, const Samples& s, const CameraRig& rig,
                                      const MetricThresholds& t);

/// Foreground: pred.foreground vs gt.fg over valid pixels. Background:
/// pred.background vs gt.bg over valid transparent pixels. All: the union of
/// both, so transparent pixels count once per surface.
EvaluationReport evaluate_sample(const fusion::LabeledDisparity& pred, const GroundTruthBundle& gt,
                                 const CameraRig& rig, const MetricThresholds& t = {});

/// Pixel-weighted mean of matching rows.
EvaluationReport aggregate(const std::vector<EvaluationReport>& reports);

/// Human-readable table with a protocol header.
std::string to_text(const EvaluationReport& rep);

/// region,metric,threshold,value,count
std::string to_csv(const EvaluationReport& rep);

}  // namespace mlstereo::evaluate
