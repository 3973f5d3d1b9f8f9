#include "mlstereo/config.hpp"

#include <functional>
#include <sstream>

#include "mlstereo/errors.hpp"

namespace mlstereo::config {

namespace {

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <class Member>
Field real_field(std::string key, Member member) {
  return {std::move(key), [member](const RunConfig& c) { return io::format_real(member(c)); },
          [member](RunConfig& c, const std::string& v) { member(c) = io::parse_real(v); }};
}

template <class Member>
Field int_field(std::string key, Member member) {
  return {std::move(key), [member](const RunConfig& c) { return std::to_string(member(c)); },
          [member](RunConfig& c, const std::string& v) {
            using T = std::remove_reference_t<decltype(member(c))>;
            member(c) = static_cast<T>(io::parse_int(v));
          }};
}

template <class Member>
Field bool_field(std::string key, Member member) {
  return {std::move(key),
          [member](const RunConfig& c) { return std::string(member(c) ? "true" : "false"); },
          [member](RunConfig& c, const std::string& v) {
            if (v == "true" || v == "1") {
              member(c) = true;
            } else if (v == "false" || v == "0") {
              member(c) = false;
            } else {
              throw FormatError("expected true or false, got '" + v + "'");
            }
          }};
}

template <class Member>
Field list_field(std::string key, Member member) {
  return {std::move(key),
          [member](const RunConfig& c) {
            std::string out;
            for (double v : member(c)) out += (out.empty() ? "" : " ") + io::format_real(v);
            return out;
          },
          [member](RunConfig& c, const std::string& v) {
            std::istringstream in(v);
            std::vector<double> values;
            std::string tok;
            while (in >> tok) values.push_back(io::parse_real(tok));
            member(c) = std::move(values);
          }};
}

#define REF(expr) [](auto& c) -> auto& { return c.expr; }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(int_field("solver.iterations", REF(solver.iterations)));
    f.push_back(int_field("solver.lookup_radius", REF(solver.lookup_radius)));
    f.push_back(int_field("solver.initial_lookup_radius", REF(solver.initial_lookup_radius)));
    f.push_back(real_field("solver.step_clamp", REF(solver.step_clamp)));
    f.push_back(int_field("solver.nms_radius", REF(solver.nms_radius)));
    f.push_back(real_field("solver.candidate_min_ratio", REF(solver.candidate_min_ratio)));
    f.push_back(real_field("solver.damping", REF(solver.damping)));
    f.push_back(real_field("solver.fallback_step", REF(solver.fallback_step)));
    f.push_back(bool_field("solver.covariance_every_iteration", REF(solver.covariance_every_iteration)));
    f.push_back(int_field("solver.dmax", REF(solver.dmax)));
    f.push_back(int_field("solver.aggregation_radius", REF(solver.aggregation_radius)));
    f.push_back(real_field("solver.upsample_sharpness", REF(solver.upsample_sharpness)));
    f.push_back(int_field("solver.features.census_radius", REF(solver.features.census_radius)));
    f.push_back(real_field("solver.features.census_threshold", REF(solver.features.census_threshold)));
    f.push_back(int_field("solver.features.patch_radius", REF(solver.features.patch_radius)));
    f.push_back(int_field("solver.features.patch_stride", REF(solver.features.patch_stride)));
    f.push_back(real_field("solver.features.census_weight", REF(solver.features.census_weight)));
    f.push_back(real_field("solver.features.intensity_weight", REF(solver.features.intensity_weight)));
    f.push_back(real_field("solver.covariance.sigma_bias", REF(solver.coefficients.sigma_bias)));
    f.push_back(real_field("solver.covariance.sigma_sharpness", REF(solver.coefficients.sigma_sharpness)));
    f.push_back(real_field("solver.covariance.sigma_step", REF(solver.coefficients.sigma_step)));
    f.push_back(real_field("solver.covariance.sigma_peak", REF(solver.coefficients.sigma_peak)));
    f.push_back(real_field("solver.covariance.sharpness_floor", REF(solver.coefficients.sharpness_floor)));
    f.push_back(real_field("solver.covariance.rho_bias", REF(solver.coefficients.rho_bias)));
    f.push_back(real_field("solver.covariance.rho_gain", REF(solver.coefficients.rho_gain)));
    f.push_back(real_field("solver.covariance.contrast_ref", REF(solver.coefficients.contrast_ref)));
    f.push_back(int_field("solver.covariance.evidence_radius", REF(solver.coefficients.evidence_radius)));
    f.push_back(real_field("fusion.alpha", REF(fusion.alpha)));
    f.push_back(real_field("loss.beta0", REF(loss.beta0)));
    f.push_back(real_field("loss.beta1", REF(loss.beta1)));
    f.push_back(real_field("loss.gamma", REF(loss.gamma)));
    f.push_back(real_field("loss.rho_gt_normal", REF(loss.rho_gt_normal)));
    f.push_back(real_field("loss.rho_gt_transparent", REF(loss.rho_gt_transparent)));
    f.push_back(list_field("metrics.taus", REF(metrics.taus)));
    f.push_back(list_field("metrics.phis", REF(metrics.phis)));
    f.push_back(real_field("metrics.min_disparity", REF(metrics.min_disparity)));
    f.push_back(real_field("rig.focal", REF(rig.focal)));
    f.push_back(real_field("rig.baseline", REF(rig.baseline)));
    f.push_back({"generator.preset", [](const RunConfig& c) { return c.generator.preset; },
                 [](RunConfig& c, const std::string& v) {
                   scenegen::preset_by_name(v);
                   c.generator.preset = v;
                 }});
    f.push_back({"generator.kind", [](const RunConfig& c) { return std::string(kind_name(c.generator.kind)); },
                 [](RunConfig& c, const std::string& v) { c.generator.kind = parse_kind(v); }});
    f.push_back(int_field("generator.width", REF(generator.width)));
    f.push_back(int_field("generator.height", REF(generator.height)));
    return f;
  }();
  return table;
}

#undef REF

}  // namespace

void validate(const RunConfig& cfg) {
  solver::validate(cfg.solver);
  fusion::validate(cfg.fusion);
  losses::validate(cfg.loss);
  evaluate::validate(cfg.metrics);
  if (!(cfg.rig.focal > 0.0) || !(cfg.rig.baseline > 0.0)) {
    throw std::invalid_argument("rig: focal and baseline must be positive");
  }
  if (cfg.generator.width <= 0 || cfg.generator.height <= 0 || cfg.generator.width % matching::kScale != 0 ||
      cfg.generator.height % matching::kScale != 0) {
    throw std::invalid_argument("generator: width and height must be positive multiples of 4");
  }
}

std::vector<std::string> keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.push_back(f.key);
  return out;
}

io::KvDocument to_kv(const RunConfig& cfg) {
  io::KvDocument doc;
  for (const auto& f : fields()) doc.set(f.key, f.get(cfg));
  return doc;
}

std::string to_text(const RunConfig& cfg) { return "# mlstereo run configuration\n" + to_kv(cfg).to_text(); }

void apply(RunConfig& cfg, const io::KvDocument& doc) {
  for (const auto& [key, value] : doc.entries()) {
    const Field* field = nullptr;
    for (const auto& f : fields()) {
      if (f.key == key) field = &f;
    }
    if (field == nullptr) throw FormatError("unknown config key '" + key + "'");
    try {
      field->set(cfg, value);
    } catch (const FormatError& e) {
      throw FormatError(key + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw FormatError(key + ": " + e.what());
    }
  }
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  apply(cfg, io::KvDocument::parse(assignment));
}

RunConfig load(const std::filesystem::path& path) {
  RunConfig cfg;
  apply(cfg, io::read_kv(path));
  return cfg;
}

const char* kind_name(scenegen::SceneKind kind) noexcept {
  switch (kind) {
    case scenegen::SceneKind::Plain: return "plain";
    case scenegen::SceneKind::OpaquePanel: return "opaque_panel";
    case scenegen::SceneKind::Transparent: return "transparent";
  }
  return "?";
}

scenegen::SceneKind parse_kind(const std::string& name) {
  for (auto k : {scenegen::SceneKind::Plain, scenegen::SceneKind::OpaquePanel, scenegen::SceneKind::Transparent}) {
    if (name == kind_name(k)) return k;
  }
  throw FormatError("unknown scene kind '" + name + "'");
}

}  // namespace mlstereo::config
