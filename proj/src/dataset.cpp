#include "mlstereo/dataset.hpp"

#include <cstdio>
#include <system_error>

#include "mlstereo/errors.hpp"
#include "mlstereo/parallel.hpp"

namespace mlstereo::scenegen {

namespace fs = std::filesystem;

namespace {

void make_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create '" + p.string() + "': " + ec.message());
}

io::ManifestRecord write_sample(const RenderedSample& s, const std::string& id, const fs::path& root) {
  const fs::path dir = root / id;
  make_dir(dir);
  io::ManifestRecord rec;
  rec.id = id;
  rec.left = id + "/left.png";
  rec.right = id + "/right.png";
  rec.disp_fg = id + "/disp_fg.pfm";
  rec.disp_bg = id + "/disp_bg.pfm";
  rec.mask = id + "/mask.png";
  rec.seed = s.spec.seed;
  rec.wall_depth = s.spec.background.depth;
  rec.layer_depth = s.spec.layer ? s.spec.layer->depth : s.spec.background.depth;
  rec.transmittance = s.spec.layer ? s.spec.layer->transmittance : 0.0;

  io::write_raster(s.left, root / rec.left);
  io::write_raster(s.right, root / rec.right);
  io::write_pfm_plane(s.gt.fg_disparity, root / rec.disp_fg);
  io::write_pfm_plane(s.gt.bg_disparity, root / rec.disp_bg);
  io::write_png_gray(io::encode_mask(s.gt.transparent_mask, s.gt.valid), root / rec.mask);

  io::KvDocument meta;
  meta.set("id", id);
  meta.set("seed", std::to_string(rec.seed));
  meta.set("rig.focal", s.rig.focal);
  meta.set("rig.baseline", s.rig.baseline);
  meta.set("wall.depth", rec.wall_depth);
  meta.set("wall.disparity", plane_disparity(s.rig, rec.wall_depth));
  meta.set("layer.present", static_cast<long long>(s.spec.layer ? 1 : 0));
  if (s.spec.layer) {
    meta.set("layer.depth", s.spec.layer->depth);
    meta.set("layer.disparity", plane_disparity(s.rig, s.spec.layer->depth));
    meta.set("layer.transmittance", s.spec.layer->transmittance);
    meta.set("layer.stain_density", s.spec.layer->stain_density);
    meta.set("layer.specular_strength", s.spec.layer->specular_strength);
    meta.set("layer.extent", std::to_string(s.spec.layer_extent.x0) + " " + std::to_string(s.spec.layer_extent.y0) +
                                 " " + std::to_string(s.spec.layer_extent.x1) + " " +
                                 std::to_string(s.spec.layer_extent.y1));
  }
  io::write_text(meta.to_text(), dir / "meta");
  return rec;
}

}  // namespace

std::uint64_t sample_seed(std::uint64_t seed, int index) noexcept {
  Rng rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(index));
  return rng.next();
}

std::string sample_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", index);
  return buf;
}

fs::path manifest_path(const fs::path& root) { return root / "manifest.txt"; }

io::DatasetManifest make_dataset(const DatasetOptions& opts, const fs::path& root) {
  if (opts.count < 0) throw std::invalid_argument("make_dataset: negative count");
  const Preset preset = preset_by_name(opts.preset, opts.width, opts.height);

  make_dir(root);
  io::DatasetManifest manifest;
  manifest.rig = preset.rig;
  manifest.records.resize(static_cast<std::size_t>(opts.count));
  parallel_rows(opts.count, [&](int i) {
    const SceneSpec spec = random_scene(preset, opts.kind, sample_seed(opts.seed, i));
    manifest.records[static_cast<std::size_t>(i)] = write_sample(render(spec, preset.rig), sample_id(i), root);
  });
  io::write_manifest(manifest, manifest_path(root));
  return manifest;
}

}  // namespace mlstereo::scenegen
