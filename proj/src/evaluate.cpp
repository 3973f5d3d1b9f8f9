#include "mlstereo/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mlstereo::evaluate {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

bool same_threshold(const std::optional<double>& a, const std::optional<double>& b) {
  return a.has_value() == b.has_value() && (!a || *a == *b);
}

}  // namespace

void validate(const MetricThresholds& t) {
  auto check = [](const std::vector<double>& v, const char* what) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!(v[i] > 0.0) || (i > 0 && !(v[i] > v[i - 1]))) {
        throw std::invalid_argument(std::string("thresholds: ") + what + " must be positive and increasing");
      }
    }
  };
  check(t.taus, "taus");
  check(t.phis, "phis");
  if (!(t.min_disparity > 0.0)) throw std::invalid_argument("thresholds: min_disparity must be positive");
}

const char* region_name(Region r) noexcept {
  switch (r) {
    case Region::Foreground: return "Foreground";
    case Region::Background: return "Background";
    case Region::All: return "All";
  }
  return "?";
}

const char* metric_name(Metric m) noexcept {
  switch (m) {
    case Metric::Epe: return "EPE";
    case Metric::BadTau: return "bad-tau";
    case Metric::Mae: return "MAE";
    case Metric::BadPhi: return "bad-phi";
  }
  return "?";
}

const MetricRow& EvaluationReport::find(Region region, Metric metric, std::optional<double> threshold) const {
  for (const auto& row : rows) {
    if (row.region == region && row.metric == metric && same_threshold(row.threshold, threshold)) return row;
  }
  throw std::out_of_range(std::string("report has no row ") + region_name(region) + "/" + metric_name(metric));
}

double epe(const Plane& pred, const Plane& gt, const Mask& mask) {
  require_same_shape(pred, gt, "epe");
  require_same_shape(pred, mask, "epe");
  double sum = 0.0;
  long n = 0;
  for (int r = 0; r < pred.rows(); ++r) {
    for (int c = 0; c < pred.cols(); ++c) {
      if (!mask(r, c)) continue;
      sum += std::abs(pred(r, c) - gt(r, c));
      ++n;
    }
  }
  if (n == 0) throw EmptyMaskError("epe: empty mask");
  return sum / static_cast<double>(n);
}

double bad_tau(const Plane& pred, const Plane& gt, const Mask& mask, double tau) {
  require_same_shape(pred, gt, "bad_tau");
  require_same_shape(pred, mask, "bad_tau");
  long bad = 0;
  long n = 0;
  for (int r = 0; r < pred.rows(); ++r) {
    for (int c = 0; c < pred.cols(); ++c) {
      if (!mask(r, c)) continue;
      bad += std::abs(pred(r, c) - gt(r, c)) > tau ? 1 : 0;
      ++n;
    }
  }
  if (n == 0) throw EmptyMaskError("bad_tau: empty mask");
  return 100.0 * static_cast<double>(bad) / static_cast<double>(n);
}

Plane disparity_to_depth(const Plane& d, const CameraRig& rig) {
  Plane out(d.rows(), d.cols());
  auto src = d.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > 0.0 ? rig.fb() / src[i] : 0.0;
  return out;
}

void Samples::add(const Plane& p, const Plane& g, const Mask& mask) {
  require_same_shape(p, g, "Samples::add");
  require_same_shape(p, mask, "Samples::add");
  for (int r = 0; r < p.rows(); ++r) {
    for (int c = 0; c < p.cols(); ++c) {
      if (!mask(r, c)) continue;
      pred.push_back(p(r, c));
      gt.push_back(g(r, c));
    }
  }
}

std::vector<MetricRow> region_metrics(Region region, const Samples& s, const CameraRig& rig,
                                      const MetricThresholds& t) {
  const std::size_t n = s.pred.size();
  const long count = static_cast<long>(n);
  std::vector<double> disp_err(n);
  std::vector<double> depth_err_cm(n);
  for (std::size_t i = 0; i < n; ++i) {
    disp_err[i] = std::abs(s.pred[i] - s.gt[i]);
    const double zp = rig.fb() / std::max(s.pred[i], t.min_disparity);
    const double zg = rig.fb() / s.gt[i];
    depth_err_cm[i] = 100.0 * std::abs(zp - zg);
  }
  auto mean = [&](const std::vector<double>& e) {
    if (n == 0) return kNaN;
    double sum = 0.0;
    for (double v : e) sum += v;
    return sum / static_cast<double>(n);
  };
  auto percent_above = [&](const std::vector<double>& e, double thr) {
    if (n == 0) return kNaN;
    long bad = 0;
    for (double v : e) bad += v > thr ? 1 : 0;
    return 100.0 * static_cast<double>(bad) / static_cast<double>(n);
  };

  std::vector<MetricRow> rows;
  rows.push_back({region, Metric::Epe, std::nullopt, mean(disp_err), count});
  for (double tau : t.taus) rows.push_back({region, Metric::BadTau, tau, percent_above(disp_err, tau), count});
  rows.push_back({region, Metric::Mae, std::nullopt, mean(depth_err_cm), count});
  for (double phi : t.phis) rows.push_back({region, Metric::BadPhi, phi, percent_above(depth_err_cm, phi), count});
  return rows;
}

EvaluationReport evaluate_sample(const fusion::LabeledDisparity& pred, const GroundTruthBundle& gt,
                                 const CameraRig& rig, const MetricThresholds& t) {
  validate(t);
  require_same_shape(pred.foreground, gt.fg_disparity, "evaluate_sample");
  require_same_shape(pred.background, gt.bg_disparity, "evaluate_sample");
  require_same_shape(gt.transparent_mask, gt.fg_disparity, "evaluate_sample");

  Mask valid = gt.valid.same_shape(gt.fg_disparity) ? gt.valid : Mask(gt.rows(), gt.cols(), 1);
  for (int r = 0; r < valid.rows(); ++r) {
    for (int c = 0; c < valid.cols(); ++c) {
      if (!(gt.fg_disparity(r, c) > 0.0)) valid(r, c) = 0;
    }
  }
  Mask behind(valid.rows(), valid.cols());
  for (int r = 0; r < valid.rows(); ++r) {
    for (int c = 0; c < valid.cols(); ++c) {
      behind(r, c) = valid(r, c) && gt.transparent_mask(r, c) && gt.bg_disparity(r, c) > 0.0 ? 1 : 0;
    }
  }

  Samples fg;
  fg.add(pred.foreground, gt.fg_disparity, valid);
  Samples bg;
  bg.add(pred.background, gt.bg_disparity, behind);
  Samples all = fg;
  all.pred.insert(all.pred.end(), bg.pred.begin(), bg.pred.end());
  all.gt.insert(all.gt.end(), bg.gt.begin(), bg.gt.end());

  EvaluationReport rep;
  rep.thresholds = t;
  rep.rig = rig;
  for (const auto& [region, samples] : {std::pair{Region::Foreground, &fg}, std::pair{Region::Background, &bg},
                                        std::pair{Region::All, &all}}) {
    auto rows = region_metrics(region, *samples, rig, t);
    rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
  }
  return rep;
}

EvaluationReport aggregate(const std::vector<EvaluationReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("aggregate: no reports");
  EvaluationReport out = reports.front();
  for (std::size_t k = 0; k < out.rows.size(); ++k) {
    double weighted = 0.0;
    long count = 0;
    for (const auto& rep : reports) {
      if (rep.rows.size() != out.rows.size()) throw std::invalid_argument("aggregate: reports differ in layout");
      const auto& row = rep.rows[k];
      if (row.region != out.rows[k].region || row.metric != out.rows[k].metric ||
          !same_threshold(row.threshold, out.rows[k].threshold)) {
        throw std::invalid_argument("aggregate: reports differ in layout");
      }
      if (row.count == 0) continue;
      weighted += row.value * static_cast<double>(row.count);
      count += row.count;
    }
    out.rows[k].count = count;
    out.rows[k].value = count > 0 ? weighted / static_cast<double>(count) : kNaN;
  }
  return out;
}

std::string to_text(const EvaluationReport& rep) {
  std::ostringstream os;
  os << "# Region-wise disparity and depth metrics\n"
     << "# Foreground: nearest surface at every valid pixel.\n"
     << "# Background: surface behind the transparent layer, transparent pixels only.\n"
     << "# All: union of both surfaces; every transparent pixel contributes twice.\n"
     << "# bad-tau / bad-phi count errors strictly above the threshold (px / cm).\n"
     << "# Depth uses f*B/d with predicted disparity floored at " << fmt(rep.thresholds.min_disparity)
     << " px; f = " << fmt(rep.rig.focal) << " px, B = " << fmt(rep.rig.baseline) << " m.\n";
  Region current = Region::All;
  bool first = true;
  for (const auto& row : rep.rows) {
    if (first || row.region != current) {
      os << "\n[" << region_name(row.region) << "] count=" << row.count << "\n";
      current = row.region;
      first = false;
    }
    std::string label = metric_name(row.metric);
    if (row.threshold) label += "@" + fmt(*row.threshold);
    os << "  " << label;
    for (std::size_t pad = label.size(); pad < 14; ++pad) os << ' ';
    os << fmt(row.value) << "\n";
  }
  return os.str();
}

std::string to_csv(const EvaluationReport& rep) {
  std::ostringstream os;
  os << "region,metric,threshold,value,count\n";
  for (const auto& row : rep.rows) {
    os << region_name(row.region) << ',' << metric_name(row.metric) << ','
       << (row.threshold ? fmt(*row.threshold) : std::string()) << ',' << fmt(row.value) << ',' << row.count
       << "\n";
  }
  return os.str();
}

}  // namespace mlstereo::evaluate
