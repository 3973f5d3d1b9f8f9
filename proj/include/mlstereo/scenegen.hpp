#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mlstereo/grid.hpp"
#include "mlstereo/ground_truth.hpp"

namespace mlstereo::scenegen {

enum class TextureKind : int { ValueNoise = 0, Stripes = 1, Checker = 2 };

/// Band-limited procedural texture. Coordinates are in left-view pixels of
/// the plane the texture is attached to.
struct TextureSpec {
  TextureKind kind = TextureKind::ValueNoise;
  std::uint64_t seed = 0;
  double cell = 8.0;       ///< coarsest lattice spacing / stripe period, pixels
  double contrast = 0.3;   ///< peak-to-peak amplitude around the tint
  Rgb tint{0.5F, 0.5F, 0.5F};
};

struct LayerSpec {
  double depth = 2.0;  ///< metres, fronto-parallel
  TextureSpec texture;
  /// Fraction of the light behind the layer that passes through it (0 = opaque).
  double transmittance = 0.0;
  double stain_density = 0.0;
  double specular_strength = 0.0;
};

/// Half-open pixel rectangle [x0, x1) x [y0, y1) in left-view coordinates.
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;
  bool contains(int x, int y) const noexcept { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

struct SceneSpec {
  LayerSpec background;  ///< the wall; transmittance is ignored (always opaque)
  std::optional<LayerSpec> layer;
  Rect layer_extent;
  std::uint64_t seed = 0;
};

struct RenderedSample {
  Raster left;
  Raster right;
  GroundTruthBundle gt;
  CameraRig rig;
  SceneSpec spec;
};

/// f * B / depth. Throws std::invalid_argument for depth <= 0.
double plane_disparity(const CameraRig& rig, double depth);

/// Texture value at continuous coordinates.
Rgb sample_texture(const TextureSpec& tex, double u, double v);

/// Stain coverage in [0, 1] for a layer, attached to the layer's plane.
double stain_at(const TextureSpec& tex, double u, double v);

/// Renders both views and the analytic ground truth. Throws
/// std::invalid_argument when the extent leaves the image or the layer is not
/// in front of the background.
RenderedSample render(const SceneSpec& spec, const CameraRig& rig);

/// Radiance of one view at continuous pixel coordinates (view 0 = left).
Rgb radiance(const SceneSpec& spec, const CameraRig& rig, int view, double x, double y);

enum class SceneKind { Plain, OpaquePanel, Transparent };

struct Preset {
  std::string name = "tabletop";
  CameraRig rig = CameraRig::tabletop();
  double min_background_disparity = 22.0;
  double max_background_disparity = 36.0;
  double min_separation = 20.0;  ///< fg - bg disparity, pixels
  double max_separation = 36.0;
  double min_transmittance = 0.5;
  double max_transmittance = 0.9;
};

Preset tabletop_preset(int width = 320, int height = 240);
Preset room_corner_preset(int width = 320, int height = 240);
Preset preset_by_name(const std::string& name, int width = 320, int height = 240);

/// Seeded random scene drawn from a preset.
SceneSpec random_scene(const Preset& preset, SceneKind kind, std::uint64_t seed);

/// Deterministic 64-bit generator (splitmix64); platform independent, unlike
/// the standard distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() noexcept;
  double uniform() noexcept;  ///< [0, 1)
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  int uniform_int(int lo, int hi) noexcept;  ///< inclusive

 private:
  std::uint64_t state_;
};

}  // namespace mlstereo::scenegen
