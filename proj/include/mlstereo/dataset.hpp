#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "mlstereo/io.hpp"
#include "mlstereo/scenegen.hpp"

namespace mlstereo::scenegen {

struct DatasetOptions {
  int count = 10;
  std::uint64_t seed = 0;
  std::string preset = "tabletop";
  SceneKind kind = SceneKind::Transparent;
  int width = 320;
  int height = 240;
};

/// Seed of sample i: a splitmix64 draw keyed by (seed, i).
std::uint64_t sample_seed(std::uint64_t seed, int index) noexcept;

/// Sample ids are zero-padded indices ("0000", "0001", ...).
std::string sample_id(int index);

/// Writes <root>/<id>/{left.png,right.png,disp_fg.pfm,disp_bg.pfm,mask.png,meta}
/// for every sample plus <root>/manifest.txt, and returns the manifest.
/// Output bytes depend only on the options. Throws IoError when root cannot
/// be written.
io::DatasetManifest make_dataset(const DatasetOptions& opts, const std::filesystem::path& root);

/// Path of the manifest inside a dataset root.
std::filesystem::path manifest_path(const std::filesystem::path& root);

}  // namespace mlstereo::scenegen
