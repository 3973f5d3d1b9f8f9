#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mlstereo/evaluate.hpp"
#include "mlstereo/fusion.hpp"
#include "mlstereo/io.hpp"
#include "mlstereo/losses.hpp"
#include "mlstereo/scenegen.hpp"
#include "mlstereo/solver.hpp"

namespace mlstereo::config {

struct GeneratorConfig {
  std::string preset = "tabletop";
  scenegen::SceneKind kind = scenegen::SceneKind::Transparent;
  int width = 320;
  int height = 240;
};

/// Every tunable of a run. Defaults are the module defaults.
struct RunConfig {
  solver::SolverConfig solver;
  fusion::FusionConfig fusion;
  losses::LossConfig loss;
  evaluate::MetricThresholds metrics;
  CameraRig rig;
  GeneratorConfig generator;
};

/// Throws std::invalid_argument when any section is invalid.
void validate(const RunConfig& cfg);

/// All keys in serialisation order.
std::vector<std::string> keys();

/// Fully resolved config as key-value text.
io::KvDocument to_kv(const RunConfig& cfg);
std::string to_text(const RunConfig& cfg);

/// Applies every entry of doc. Throws FormatError on unknown keys or values
/// that do not parse.
void apply(RunConfig& cfg, const io::KvDocument& doc);
/// "key=value"
void apply_override(RunConfig& cfg, const std::string& assignment);

RunConfig load(const std::filesystem::path& path);

const char* kind_name(scenegen::SceneKind kind) noexcept;
scenegen::SceneKind parse_kind(const std::string& name);

}  // namespace mlstereo::config
