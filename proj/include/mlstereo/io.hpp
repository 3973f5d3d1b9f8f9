#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mlstereo/fusion.hpp"
#include "mlstereo/grid.hpp"
#include "mlstereo/ground_truth.hpp"

namespace mlstereo::io {

namespace fs = std::filesystem;

/// Single-channel portable float map. `samples` are row-major, top row first;
/// the file stores rows bottom-to-top.
struct PfmImage {
  int width = 0;
  int height = 0;
  double scale = -1.0;  ///< negative = little-endian payload
  std::vector<float> samples;

  friend bool operator==(const PfmImage&, const PfmImage&) = default;
};

/// Throws FormatError for "PF" (colour), malformed headers, zero scale and
/// truncated payloads.
PfmImage parse_pfm(const std::string& bytes);
std::string serialize_pfm(const PfmImage& img);

PfmImage read_pfm(const fs::path& path);
void write_pfm(const PfmImage& img, const fs::path& path);

/// Plane <-> float map with scale -1.
PfmImage to_pfm(const Plane& p);
Plane to_plane(const PfmImage& img);
Plane read_pfm_plane(const fs::path& path);
void write_pfm_plane(const Plane& p, const fs::path& path);

using Rgb8 = std::array<std::uint8_t, 3>;
using Image8 = Grid<Rgb8>;

/// 8-bit PNG. Readers accept any colour type and convert with libpng's
/// simplified API; writers emit RGB or grayscale without gamma chunks.
Image8 read_png_rgb(const fs::path& path);
Mask read_png_gray(const fs::path& path);
void write_png_rgb(const Image8& img, const fs::path& path);
void write_png_gray(const Mask& img, const fs::path& path);

/// [0, 1] raster <-> 8 bit, rounding to nearest.
Image8 quantize(const Raster& img);
Raster dequantize(const Image8& img);
Raster read_raster(const fs::path& path);
void write_raster(const Raster& img, const fs::path& path);

/// Mask PNG codes.
inline constexpr std::uint8_t kMaskNormal = 0;
inline constexpr std::uint8_t kMaskTransparent = 128;
inline constexpr std::uint8_t kMaskInvalid = 255;

/// Invalid wins over transparent.
Mask encode_mask(const Mask& transparent, const Mask& valid);
/// Splits codes into {transparent, valid}. Throws FormatError on other values.
std::pair<Mask, Mask> decode_mask(const Mask& codes);

/// Line-oriented key-value text:
///
///   document := { line "\n" }
///   line     := blank | "#" comment | key "=" value
///   key      := [A-Za-z0-9_.]+
///
/// Whitespace around keys and values is trimmed. Keys keep file order;
/// duplicates are rejected.
class KvDocument {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  bool contains(const std::string& key) const;
  /// Throws FormatError when the key is missing or does not parse.
  const std::string& get(const std::string& key) const;
  double get_real(const std::string& key) const;
  long long get_int(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

  static KvDocument parse(const std::string& text);
  std::string to_text() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// %.9g; used for every real written to text files.
std::string format_real(double v);
double parse_real(const std::string& s);
long long parse_int(const std::string& s);
std::uint64_t parse_uint(const std::string& s);

KvDocument read_kv(const fs::path& path);
void write_text(const std::string& text, const fs::path& path);
std::string read_text(const fs::path& path);

struct ManifestRecord {
  std::string id;
  std::string left;
  std::string right;
  std::string disp_fg;
  std::string disp_bg;
  std::string mask;
  std::uint64_t seed = 0;
  double layer_depth = 0.0;       ///< metres; equals wall_depth for single-surface scenes
  double wall_depth = 0.0;        ///< metres
  double transmittance = 0.0;

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

struct DatasetManifest {
  static constexpr int kSchemaVersion = 1;
  int schema = kSchemaVersion;
  CameraRig rig;
  std::vector<ManifestRecord> records;
};

std::string serialize_manifest(const DatasetManifest& m);
DatasetManifest parse_manifest(const std::string& text);
/// Paths in records are relative to the manifest's directory.
void write_manifest(const DatasetManifest& m, const fs::path& path);
/// Throws FormatError when an id repeats or a referenced file is missing.
DatasetManifest read_manifest(const fs::path& path);

/// Ground truth of one sample through its manifest record.
GroundTruthBundle load_ground_truth(const ManifestRecord& rec, const fs::path& root);

enum class PointLabel : std::uint8_t { Foreground = 0, Background = 1 };

struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  Rgb8 colour{};
  PointLabel label = PointLabel::Foreground;
};

/// Foreground points wherever fg > min_disparity; background points in
/// addition inside the transparent mask. Principal point at the image
/// centre ((W - 1) / 2, (H - 1) / 2).
std::vector<Point> point_cloud(const fusion::LabeledDisparity& result, const Raster& left, const CameraRig& rig,
                               double min_disparity = 0.5);
std::string serialize_ply(const std::vector<Point>& points);
/// Returns the number of points written.
std::size_t export_point_cloud(const fusion::LabeledDisparity& result, const Raster& left, const CameraRig& rig,
                               const fs::path& path, double min_disparity = 0.5);

}  // namespace mlstereo::io
