#include "mlstereo/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mlstereo::scenegen {

namespace {

std::uint64_t mix(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Lattice value in [-1, 1].
double lattice(std::uint64_t seed, long ix, long iy) noexcept {
  const std::uint64_t h = mix(seed ^ mix(static_cast<std::uint64_t>(ix) * 0x632BE59BD9B4E019ULL ^
                                          mix(static_cast<std::uint64_t>(iy) + 0x1234567ULL)));
  return static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
}

// Catmull-Rom weights for fractional offset t in [0, 1).
std::array<double, 4> catmull_rom(double t) noexcept {
  const double t2 = t * t;
  const double t3 = t2 * t;
  return {0.5 * (-t3 + 2.0 * t2 - t), 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0), 0.5 * (-3.0 * t3 + 4.0 * t2 + t),
          0.5 * (t3 - t2)};
}

// Bicubic-interpolated value noise with lattice spacing `cell`.
double value_noise(std::uint64_t seed, double u, double v, double cell) noexcept {
  const double x = u / cell;
  const double y = v / cell;
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const auto wx = catmull_rom(x - fx);
  const auto wy = catmull_rom(y - fy);
  const long ix = static_cast<long>(fx);
  const long iy = static_cast<long>(fy);
  double acc = 0.0;
  for (int j = 0; j < 4; ++j) {
    double row = 0.0;
    for (int i = 0; i < 4; ++i) row += wx[static_cast<std::size_t>(i)] * lattice(seed, ix + i - 1, iy + j - 1);
    acc += wy[static_cast<std::size_t>(j)] * row;
  }
  return acc;
}

// Two octaves, roughly in [-1, 1].
double fractal_noise(std::uint64_t seed, double u, double v, double cell) noexcept {
  return (value_noise(seed, u, v, cell) + 0.5 * value_noise(mix(seed + 1), u, v, 0.5 * cell)) / 1.5;
}

double clamp01(double x) noexcept { return std::clamp(x, 0.0, 1.0); }

double smoothstep(double e0, double e1, double x) noexcept {
  const double t = clamp01((x - e0) / (e1 - e0));
  return t * t * (3.0 - 2.0 * t);
}

double specular_at(const LayerSpec& layer, double u, double v) noexcept {
  if (layer.specular_strength <= 0.0) return 0.0;
  // One soft diagonal streak, fixed to the layer.
  const double angle = 0.6 + 0.4 * lattice(layer.texture.seed ^ 0x5bd1e995ULL, 0, 0);
  const double offset = 60.0 * lattice(layer.texture.seed ^ 0x5bd1e995ULL, 1, 0);
  const double s = (u * std::cos(angle) + v * std::sin(angle) - offset) / 10.0;
  return layer.specular_strength * std::exp(-s * s);
}

void require_layer_valid(const SceneSpec& spec, const CameraRig& rig) {
  if (!(spec.background.depth > 0.0)) throw std::invalid_argument("render: background depth must be positive");
  if (!spec.layer) return;
  const LayerSpec& layer = *spec.layer;
  if (!(layer.depth > 0.0)) throw std::invalid_argument("render: layer depth must be positive");
  if (!(layer.depth < spec.background.depth)) {
    throw std::invalid_argument("render: layer must be nearer than the background");
  }
  if (layer.transmittance < 0.0 || layer.transmittance > 1.0) {
    throw std::invalid_argument("render: transmittance must lie in [0, 1]");
  }
  const Rect& e = spec.layer_extent;
  if (e.x0 < 0 || e.y0 < 0 || e.x1 > rig.width || e.y1 > rig.height || e.x0 >= e.x1 || e.y0 >= e.y1) {
    throw std::invalid_argument("render: layer extent lies outside the image");
  }
}

Rgb to_rgb(double r, double g, double b) {
  return {static_cast<float>(clamp01(r)), static_cast<float>(clamp01(g)), static_cast<float>(clamp01(b))};
}

}  // namespace

std::uint64_t Rng::next() noexcept {
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

int Rng::uniform_int(int lo, int hi) noexcept {
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<int>(next() % span);
}

double plane_disparity(const CameraRig& rig, double depth) {
  if (!(depth > 0.0)) throw std::invalid_argument("plane_disparity: depth must be positive");
  return rig.focal * rig.baseline / depth;
}

Rgb sample_texture(const TextureSpec& tex, double u, double v) {
  // Each channel mixes a shared pattern with its own noise, so colour carries
  // matching information beyond luminance.
  double shared = 0.0;
  switch (tex.kind) {
    case TextureKind::ValueNoise:
      shared = fractal_noise(tex.seed, u, v, tex.cell);
      break;
    case TextureKind::Stripes: {
      // Oblique stripes with a noise-warped phase: locally striped, never periodic.
      const double angle = 0.35 + 0.3 * lattice(tex.seed, 7, 7);
      const double along = u * std::cos(angle) + v * std::sin(angle);
      const double warp = 2.0 * tex.cell * value_noise(mix(tex.seed + 5), u, v, 4.0 * tex.cell);
      shared = 0.5 * std::sin((along + warp) * std::numbers::pi / tex.cell) +
               0.6 * fractal_noise(tex.seed, u, v, tex.cell);
      break;
    }
    case TextureKind::Checker: {
      const double w = std::numbers::pi / (1.25 * tex.cell);
      const double wu = u + 2.0 * tex.cell * value_noise(mix(tex.seed + 6), u, v, 4.0 * tex.cell);
      const double wv = v + 2.0 * tex.cell * value_noise(mix(tex.seed + 7), u, v, 4.0 * tex.cell);
      shared = 0.5 * std::tanh(2.0 * std::sin(wu * w) * std::sin(wv * w)) +
               0.6 * fractal_noise(tex.seed, u, v, tex.cell);
      break;
    }
  }
  std::array<double, 3> out{};
  for (std::size_t ch = 0; ch < 3; ++ch) {
    const double own = fractal_noise(mix(tex.seed + 101 + ch), u, v, tex.cell);
    out[ch] = tex.tint[ch] + 0.5 * tex.contrast * (0.6 * shared + 0.8 * own);
  }
  return to_rgb(out[0], out[1], out[2]);
}

double stain_at(const TextureSpec& tex, double u, double v) {
  const double n = value_noise(mix(tex.seed + 0x57A1), u, v, 3.0 * tex.cell);
  return smoothstep(0.1, 0.45, n);
}

Rgb radiance(const SceneSpec& spec, const CameraRig& rig, int view, double x, double y) {
  // A plane at disparity d seen at right-view column x shows the point whose
  // left-view column is x + d.
  const double db = plane_disparity(rig, spec.background.depth);
  const double ub = view == 0 ? x : x + db;
  const Rgb bg = sample_texture(spec.background.texture, ub, y);
  if (!spec.layer) return bg;
  const LayerSpec& layer = *spec.layer;
  const double df = plane_disparity(rig, layer.depth);
  const double uf = view == 0 ? x : x + df;
  const Rect& e = spec.layer_extent;
  if (!(uf >= e.x0 && uf < e.x1 && y >= e.y0 && y < e.y1)) return bg;
  const Rgb fg = sample_texture(layer.texture, uf, y);
  const double t = layer.transmittance * (1.0 - stain_at(layer.texture, uf, y) * layer.stain_density);
  const double spec_term = specular_at(layer, uf, y);
  return to_rgb((1.0 - t) * fg[0] + t * bg[0] + spec_term, (1.0 - t) * fg[1] + t * bg[1] + spec_term,
                (1.0 - t) * fg[2] + t * bg[2] + spec_term);
}

RenderedSample render(const SceneSpec& spec, const CameraRig& rig) {
  require_layer_valid(spec, rig);
  RenderedSample out;
  out.rig = rig;
  out.spec = spec;
  const int h = rig.height;
  const int w = rig.width;
  out.left = Raster(h, w);
  out.right = Raster(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.left(y, x) = radiance(spec, rig, 0, x, y);
      out.right(y, x) = radiance(spec, rig, 1, x, y);
    }
  }

  // Ground truth straight from plane geometry.
  const double db = plane_disparity(rig, spec.background.depth);
  const double df = spec.layer ? plane_disparity(rig, spec.layer->depth) : db;
  const bool transparent = spec.layer && spec.layer->transmittance > 0.0;
  const Rect e = spec.layer ? spec.layer_extent : Rect{};
  GroundTruthBundle& gt = out.gt;
  gt.fg_disparity = Plane(h, w, db);
  gt.bg_disparity = Plane(h, w, db);
  gt.transparent_mask = Mask(h, w, 0);
  gt.valid = Mask(h, w, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool in_layer = spec.layer && e.contains(x, y);
      if (in_layer) {
        gt.fg_disparity(y, x) = df;
        gt.bg_disparity(y, x) = transparent ? db : df;
        gt.transparent_mask(y, x) = transparent ? 1 : 0;
      }
      const double d = in_layer ? df : db;
      bool visible = x - d >= 0.0;
      if (!in_layer && spec.layer && !transparent) {
        // Background hidden behind the opaque panel in the right view.
        const double u = x - db + df;
        if (u >= e.x0 && u < e.x1 && y >= e.y0 && y < e.y1) visible = false;
      }
      gt.valid(y, x) = visible ? 1 : 0;
    }
  }
  return out;
}

Preset tabletop_preset(int width, int height) {
  Preset p;
  p.name = "tabletop";
  p.rig = CameraRig::tabletop(width, height);
  return p;
}

Preset room_corner_preset(int width, int height) {
  Preset p;
  p.name = "room_corner";
  p.rig = CameraRig::room_corner(width, height);
  return p;
}

Preset preset_by_name(const std::string& name, int width, int height) {
  if (name == "tabletop") return tabletop_preset(width, height);
  if (name == "room_corner") return room_corner_preset(width, height);
  throw std::invalid_argument("unknown preset '" + name + "'");
}

namespace {

TextureSpec random_texture(Rng& rng, double contrast_lo, double contrast_hi) {
  TextureSpec t;
  t.kind = static_cast<TextureKind>(rng.uniform_int(0, 2));
  t.seed = rng.next();
  t.cell = rng.uniform(4.0, 6.0);
  t.contrast = rng.uniform(contrast_lo, contrast_hi);
  for (auto& ch : t.tint) ch = static_cast<float>(rng.uniform(0.4, 0.6));
  return t;
}

}  // namespace

SceneSpec random_scene(const Preset& preset, SceneKind kind, std::uint64_t seed) {
  Rng rng(seed);
  const CameraRig& rig = preset.rig;
  SceneSpec s;
  s.seed = seed;
  const double db = rng.uniform(preset.min_background_disparity, preset.max_background_disparity);
  s.background.depth = rig.fb() / db;
  s.background.texture = random_texture(rng, 0.2, 0.3);
  if (kind == SceneKind::Plain) return s;

  LayerSpec layer;
  const double df = db + rng.uniform(preset.min_separation, preset.max_separation);
  layer.depth = rig.fb() / df;
  layer.texture = random_texture(rng, 0.4, 0.6);
  if (kind == SceneKind::Transparent) {
    const double t = rng.uniform(preset.min_transmittance, preset.max_transmittance);
    layer.transmittance = t;
    layer.stain_density = rng.uniform(0.1, 0.3);
    layer.specular_strength = rng.uniform(0.0, 0.08);
    // Exposure balance: the wall's pattern is scaled so that neither surface's
    // contribution to the composite dwarfs the other.
    const double balance = rng.uniform(0.85, 1.15);
    s.background.texture.contrast = layer.texture.contrast * (1.0 - t) / (balance * t);
  }
  s.layer = layer;

  const double sx = rig.width / 320.0;
  const double sy = rig.height / 240.0;
  const int width = static_cast<int>(std::lround(rng.uniform(110.0, 150.0) * sx));
  const int height = static_cast<int>(std::lround(rng.uniform(100.0, 150.0) * sy));
  const int x0 = static_cast<int>(std::lround(rng.uniform(95.0, 130.0) * sx));
  const int y0 = static_cast<int>(std::lround(rng.uniform(30.0, 0.0 + 240.0 - 30.0 - height / sy) * sy));
  s.layer_extent = {x0, y0, std::min(rig.width, x0 + width), std::min(rig.height, y0 + height)};
  return s;
}

}  // namespace mlstereo::scenegen
