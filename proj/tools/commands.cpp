#include "commands.hpp"

#include <cstdio>
#include <iostream>
#include <sstream>
#include <vector>

#include "mlstereo/dataset.hpp"
#include "mlstereo/errors.hpp"
#include "mlstereo/evaluate.hpp"
#include "mlstereo/fusion.hpp"
#include "mlstereo/io.hpp"
#include "mlstereo/solver.hpp"

namespace mlstereo::cli {

namespace {

void make_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create '" + p.string() + "': " + ec.message());
}

void echo_config(const config::RunConfig& cfg, const fs::path& dir) {
  io::write_text(config::to_text(cfg), dir / "config.txt");
}

std::string trace_text(const solver::IterationTrace& trace) {
  std::string out = "# iteration mean_abs_step objective\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out += std::to_string(i) + " " + io::format_real(trace[i].mean_abs_step) + " " +
           io::format_real(trace[i].objective) + "\n";
  }
  return out;
}

void write_prediction(const config::RunConfig& cfg, const Raster& left, const Raster& right, const fs::path& dir) {
  const auto result = solver::run(left, right, cfg.solver);
  const auto labeled = fusion::fuse(result.field, cfg.fusion);
  make_dir(dir);
  io::write_pfm_plane(labeled.foreground, dir / "disp_fg.pfm");
  io::write_pfm_plane(labeled.background, dir / "disp_bg.pfm");
  io::write_pfm_plane(labeled.fused, dir / "fused.pfm");
  io::write_pfm_plane(labeled.rho_map, dir / "rho.pfm");
  io::write_png_gray(io::encode_mask(labeled.transparent_mask, Mask(left.rows(), left.cols(), 1)),
                     dir / "mask.png");
  io::write_text(trace_text(result.trace), dir / "trace.txt");
  echo_config(cfg, dir);
}

fusion::LabeledDisparity read_prediction(const fs::path& dir) {
  fusion::LabeledDisparity p;
  p.foreground = io::read_pfm_plane(dir / "disp_fg.pfm");
  p.background = io::read_pfm_plane(dir / "disp_bg.pfm");
  require_same_shape(p.foreground, p.background, "prediction");
  const fs::path fused = dir / "fused.pfm";
  p.fused = fs::exists(fused) ? io::read_pfm_plane(fused) : p.foreground;
  const fs::path mask = dir / "mask.png";
  if (fs::exists(mask)) {
    p.transparent_mask = io::decode_mask(io::read_png_gray(mask)).first;
  } else {
    p.transparent_mask = Mask(p.foreground.rows(), p.foreground.cols(), 0);
    for (int r = 0; r < p.foreground.rows(); ++r) {
      for (int c = 0; c < p.foreground.cols(); ++c) {
        p.transparent_mask(r, c) = p.foreground(r, c) != p.background(r, c) ? 1 : 0;
      }
    }
  }
  require_same_shape(p.foreground, p.transparent_mask, "prediction");
  return p;
}

}  // namespace

int cmd_gen(const config::RunConfig& cfg, const fs::path& out_dir, int count, std::uint64_t seed) {
  scenegen::DatasetOptions opts;
  opts.count = count;
  opts.seed = seed;
  opts.preset = cfg.generator.preset;
  opts.kind = cfg.generator.kind;
  opts.width = cfg.generator.width;
  opts.height = cfg.generator.height;
  scenegen::make_dataset(opts, out_dir);
  echo_config(cfg, out_dir);
  std::cout << scenegen::manifest_path(out_dir).string() << "\n";
  return kOk;
}

int cmd_match(const config::RunConfig& cfg, const fs::path& left, const fs::path& right, const fs::path& out_dir) {
  const Raster l = io::read_raster(left);
  const Raster r = io::read_raster(right);
  write_prediction(cfg, l, r, out_dir);
  return kOk;
}

int cmd_match_dataset(const config::RunConfig& cfg, const fs::path& dataset_dir, const fs::path& out_dir) {
  const auto manifest = io::read_manifest(scenegen::manifest_path(dataset_dir));
  make_dir(out_dir);
  for (const auto& rec : manifest.records) {
    write_prediction(cfg, io::read_raster(dataset_dir / rec.left), io::read_raster(dataset_dir / rec.right),
                     out_dir / rec.id);
    std::cout << rec.id << "\n";
  }
  echo_config(cfg, out_dir);
  return kOk;
}

int cmd_eval(const config::RunConfig& cfg, const fs::path& pred_dir, const fs::path& dataset_dir,
             const fs::path& out_dir) {
  const auto manifest = io::read_manifest(scenegen::manifest_path(dataset_dir));
  std::vector<std::string> missing;
  for (const auto& rec : manifest.records) {
    if (!fs::exists(pred_dir / rec.id / "disp_fg.pfm") || !fs::exists(pred_dir / rec.id / "disp_bg.pfm")) {
      missing.push_back(rec.id);
    }
  }
  if (!missing.empty()) {
    std::cerr << "error: predictions missing for sample(s):";
    for (const auto& id : missing) std::cerr << " " << id;
    std::cerr << "\n";
    return kValidation;
  }
  make_dir(out_dir);
  std::vector<evaluate::EvaluationReport> reports;
  for (const auto& rec : manifest.records) {
    const auto gt = io::load_ground_truth(rec, dataset_dir);
    const auto pred = read_prediction(pred_dir / rec.id);
    auto rep = evaluate::evaluate_sample(pred, gt, manifest.rig, cfg.metrics);
    make_dir(out_dir / rec.id);
    io::write_text(evaluate::to_text(rep), out_dir / rec.id / "report.txt");
    io::write_text(evaluate::to_csv(rep), out_dir / rec.id / "report.csv");
    reports.push_back(std::move(rep));
  }
  if (reports.empty()) {
    std::cerr << "error: dataset has no samples\n";
    return kValidation;
  }
  const auto agg = evaluate::aggregate(reports);
  io::write_text(evaluate::to_text(agg), out_dir / "aggregate.txt");
  io::write_text(evaluate::to_csv(agg), out_dir / "aggregate.csv");
  echo_config(cfg, out_dir);
  std::cout << evaluate::to_text(agg);
  return kOk;
}

int cmd_export(const config::RunConfig& cfg, const fs::path& pred_dir, const fs::path& left, const fs::path& out_ply) {
  const auto pred = read_prediction(pred_dir);
  const Raster image = io::read_raster(left);
  const std::size_t n = io::export_point_cloud(pred, image, cfg.rig, out_ply, cfg.metrics.min_disparity);
  std::cout << out_ply.string() << ": " << n << " points\n";
  return kOk;
}

}  // namespace mlstereo::cli
