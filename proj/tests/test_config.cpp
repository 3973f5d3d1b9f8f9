#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "mlstereo/config.hpp"

using namespace mlstereo;
using namespace mlstereo::config;

TEST_CASE("defaults match module defaults") {
  const RunConfig cfg;
  CHECK(cfg.fusion.alpha == 0.5);
  CHECK(cfg.loss.gamma == 0.9);
  CHECK(cfg.loss.beta0 == 1e-5);
  CHECK(cfg.loss.beta1 == 1.0);
  CHECK(cfg.solver.iterations == 32);
  CHECK(cfg.rig.focal == 933.34);
  CHECK(cfg.rig.baseline == 0.1);
  CHECK_NOTHROW(validate(cfg));
}

TEST_CASE("echo round trip") {
  RunConfig cfg;
  apply_override(cfg, "fusion.alpha=0.3");
  apply_override(cfg, "solver.iterations = 12");
  apply_override(cfg, "metrics.taus=1 4 6");
  apply_override(cfg, "generator.kind=opaque_panel");
  apply_override(cfg, "rig.baseline=0.2");
  const auto text = to_text(cfg);
  CHECK(text.rfind("# mlstereo run configuration\n", 0) == 0);

  RunConfig back;
  apply(back, io::KvDocument::parse(text));
  CHECK(back.fusion.alpha == 0.3);
  CHECK(back.solver.iterations == 12);
  CHECK(back.metrics.taus == std::vector<double>{1.0, 4.0, 6.0});
  CHECK(back.generator.kind == scenegen::SceneKind::OpaquePanel);
  CHECK(back.rig.baseline == 0.2);
  CHECK(to_text(back) == text);

  const auto k = keys();
  CHECK(k.size() == to_kv(cfg).entries().size());
  CHECK(std::find(k.begin(), k.end(), "loss.gamma") != k.end());
}

TEST_CASE("unknown keys and bad values are rejected") {
  RunConfig cfg;
  CHECK_THROWS_AS(apply_override(cfg, "fusion.beta=0.3"), FormatError);
  CHECK_THROWS_AS(apply_override(cfg, "fusion.alpha=high"), FormatError);
  CHECK_THROWS_AS(apply_override(cfg, "fusion.alpha"), FormatError);
  CHECK_THROWS_AS(apply_override(cfg, "generator.kind=glass"), FormatError);
  apply_override(cfg, "fusion.alpha=2");
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
}

TEST_CASE("config files") {
  const auto dir = std::filesystem::temp_directory_path() / "mlstereo_config_test";
  std::filesystem::create_directories(dir);
  io::write_text("# partial\nloss.gamma = 0.8\n", dir / "run.txt");
  const auto cfg = load(dir / "run.txt");
  CHECK(cfg.loss.gamma == 0.8);
  CHECK(cfg.fusion.alpha == 0.5);
  io::write_text("loss.gama = 0.8\n", dir / "typo.txt");
  CHECK_THROWS_AS(load(dir / "typo.txt"), FormatError);
  CHECK_THROWS_AS(load(dir / "absent.txt"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("scene kind names") {
  for (auto kind : {scenegen::SceneKind::Plain, scenegen::SceneKind::OpaquePanel, scenegen::SceneKind::Transparent}) {
    CHECK(parse_kind(kind_name(kind)) == kind);
  }
}
