#include "mlstereo/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "mlstereo/errors.hpp"

namespace mlstereo::io {

namespace {

bool host_little_endian() { return std::endian::native == std::endian::little; }

std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0x0000FF00U) | ((v << 8) & 0x00FF0000U) | (v << 24);
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

// Reads one whitespace-delimited header token starting at pos.
std::string header_token(const std::string& bytes, std::size_t& pos) {
  while (pos < bytes.size() && is_space(bytes[pos])) ++pos;
  const std::size_t begin = pos;
  while (pos < bytes.size() && !is_space(bytes[pos])) ++pos;
  if (begin == pos) throw FormatError("pfm: truncated header");
  return bytes.substr(begin, pos - begin);
}

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  return std::all_of(k.begin(), k.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '.';
  });
}

std::uint8_t to_byte(float v) {
  const double x = std::clamp(static_cast<double>(v), 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(x * 255.0));
}

}  // namespace

// ---- PFM -------------------------------------------------------------------

PfmImage parse_pfm(const std::string& bytes) {
  std::size_t pos = 0;
  const std::string magic = header_token(bytes, pos);
  if (magic == "PF") throw FormatError("pfm: 3-channel 'PF' maps are not supported, expected 1 channel ('Pf')");
  if (magic != "Pf") throw FormatError("pfm: bad magic '" + magic + "'");
  PfmImage img;
  const std::string w = header_token(bytes, pos);
  const std::string h = header_token(bytes, pos);
  const std::string s = header_token(bytes, pos);
  try {
    img.width = static_cast<int>(parse_int(w));
    img.height = static_cast<int>(parse_int(h));
    img.scale = parse_real(s);
  } catch (const FormatError&) {
    throw FormatError("pfm: malformed header");
  }
  if (img.width <= 0 || img.height <= 0) throw FormatError("pfm: non-positive dimensions");
  if (img.scale == 0.0 || !std::isfinite(img.scale)) throw FormatError("pfm: zero or non-finite scale");
  if (pos >= bytes.size() || !is_space(bytes[pos])) throw FormatError("pfm: truncated header");
  ++pos;

  const std::size_t n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  if (bytes.size() - pos < n * 4) throw FormatError("pfm: truncated payload");
  const bool swap = (img.scale < 0.0) != host_little_endian();
  img.samples.resize(n);
  for (int r = 0; r < img.height; ++r) {
    const int file_row = img.height - 1 - r;
    for (int c = 0; c < img.width; ++c) {
      std::uint32_t word;
      std::memcpy(&word, bytes.data() + pos + (static_cast<std::size_t>(file_row) * img.width + c) * 4, 4);
      if (swap) word = byteswap32(word);
      img.samples[static_cast<std::size_t>(r) * img.width + c] = std::bit_cast<float>(word);
    }
  }
  return img;
}

std::string serialize_pfm(const PfmImage& img) {
  const std::size_t n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  if (img.width <= 0 || img.height <= 0 || img.samples.size() != n) throw ShapeError("pfm: sample count mismatch");
  if (img.scale == 0.0 || !std::isfinite(img.scale)) throw FormatError("pfm: zero or non-finite scale");
  char scale[40];
  std::snprintf(scale, sizeof scale, "%.17g", img.scale);
  std::string out = "Pf\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n" + scale + "\n";
  const std::size_t header = out.size();
  out.resize(header + n * 4);
  const bool swap = (img.scale < 0.0) != host_little_endian();
  for (int r = 0; r < img.height; ++r) {
    const int file_row = img.height - 1 - r;
    for (int c = 0; c < img.width; ++c) {
      std::uint32_t word = std::bit_cast<std::uint32_t>(img.samples[static_cast<std::size_t>(r) * img.width + c]);
      if (swap) word = byteswap32(word);
      std::memcpy(out.data() + header + (static_cast<std::size_t>(file_row) * img.width + c) * 4, &word, 4);
    }
  }
  return out;
}

PfmImage read_pfm(const fs::path& path) { return parse_pfm(read_text(path)); }

void write_pfm(const PfmImage& img, const fs::path& path) { write_text(serialize_pfm(img), path); }

PfmImage to_pfm(const Plane& p) {
  PfmImage img;
  img.width = p.cols();
  img.height = p.rows();
  img.samples.reserve(p.size());
  for (double v : p.values()) img.samples.push_back(static_cast<float>(v));
  return img;
}

Plane to_plane(const PfmImage& img) {
  Plane p(img.height, img.width);
  auto dst = p.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = img.samples[i];
  return p;
}

Plane read_pfm_plane(const fs::path& path) { return to_plane(read_pfm(path)); }

void write_pfm_plane(const Plane& p, const fs::path& path) { write_pfm(to_pfm(p), path); }

// ---- PNG -------------------------------------------------------------------

namespace {

template <class Pixel>
Grid<Pixel> read_png_as(const fs::path& path, png_uint_32 format) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    const std::string msg = image.message;
    png_image_free(&image);
    if (!fs::exists(path)) throw IoError("cannot open '" + path.string() + "'");
    throw FormatError("png '" + path.string() + "': " + msg);
  }
  image.format = format;
  Grid<Pixel> out(static_cast<int>(image.height), static_cast<int>(image.width));
  if (!png_image_finish_read(&image, nullptr, out.values().data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw FormatError("png '" + path.string() + "': " + msg);
  }
  return out;
}

template <class Pixel>
void write_png_as(const Grid<Pixel>& img, const fs::path& path, png_uint_32 format) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.cols());
  image.height = static_cast<png_uint_32>(img.rows());
  image.format = format;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, img.values().data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot write '" + path.string() + "': " + msg);
  }
}

}  // namespace

Image8 read_png_rgb(const fs::path& path) { return read_png_as<Rgb8>(path, PNG_FORMAT_RGB); }

Mask read_png_gray(const fs::path& path) { return read_png_as<std::uint8_t>(path, PNG_FORMAT_GRAY); }

void write_png_rgb(const Image8& img, const fs::path& path) { write_png_as(img, path, PNG_FORMAT_RGB); }

void write_png_gray(const Mask& img, const fs::path& path) { write_png_as(img, path, PNG_FORMAT_GRAY); }

Image8 quantize(const Raster& img) {
  Image8 out(img.rows(), img.cols());
  auto src = img.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = {to_byte(src[i][0]), to_byte(src[i][1]), to_byte(src[i][2])};
  return out;
}

Raster dequantize(const Image8& img) {
  Raster out(img.rows(), img.cols());
  auto src = img.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    for (int k = 0; k < 3; ++k) dst[i][k] = static_cast<float>(src[i][k] / 255.0);
  }
  return out;
}

Raster read_raster(const fs::path& path) { return dequantize(read_png_rgb(path)); }

void write_raster(const Raster& img, const fs::path& path) { write_png_rgb(quantize(img), path); }

Mask encode_mask(const Mask& transparent, const Mask& valid) {
  require_same_shape(transparent, valid, "encode_mask");
  Mask out(transparent.rows(), transparent.cols());
  auto t = transparent.values();
  auto v = valid.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = !v[i] ? kMaskInvalid : (t[i] ? kMaskTransparent : kMaskNormal);
  return out;
}

std::pair<Mask, Mask> decode_mask(const Mask& codes) {
  Mask transparent(codes.rows(), codes.cols());
  Mask valid(codes.rows(), codes.cols());
  auto src = codes.values();
  auto t = transparent.values();
  auto v = valid.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i] != kMaskNormal && src[i] != kMaskTransparent && src[i] != kMaskInvalid) {
      throw FormatError("mask: unexpected code " + std::to_string(src[i]));
    }
    t[i] = src[i] == kMaskTransparent ? 1 : 0;
    v[i] = src[i] == kMaskInvalid ? 0 : 1;
  }
  return {std::move(transparent), std::move(valid)};
}

// ---- key-value text --------------------------------------------------------

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double parse_real(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) throw FormatError("expected a number, got ''");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE) throw FormatError("expected a number, got '" + t + "'");
  return v;
}

long long parse_int(const std::string& s) {
  const std::string t = trim(s);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw FormatError("expected an integer, got '" + t + "'");
  }
  return v;
}

std::uint64_t parse_uint(const std::string& s) {
  const std::string t = trim(s);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw FormatError("expected an unsigned integer, got '" + t + "'");
  }
  return v;
}

void KvDocument::set(const std::string& key, const std::string& value) {
  if (!valid_key(key)) throw FormatError("invalid key '" + key + "'");
  if (value.find('\n') != std::string::npos) throw FormatError("value of '" + key + "' spans lines");
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void KvDocument::set(const std::string& key, double value) { set(key, format_real(value)); }

void KvDocument::set(const std::string& key, long long value) { set(key, std::to_string(value)); }

bool KvDocument::contains(const std::string& key) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == key; });
}

const std::string& KvDocument::get(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  throw FormatError("missing key '" + key + "'");
}

double KvDocument::get_real(const std::string& key) const {
  try {
    return parse_real(get(key));
  } catch (const FormatError& e) {
    throw FormatError(key + ": " + e.what());
  }
}

long long KvDocument::get_int(const std::string& key) const {
  try {
    return parse_int(get(key));
  } catch (const FormatError& e) {
    throw FormatError(key + ": " + e.what());
  }
}

KvDocument KvDocument::parse(const std::string& text) {
  KvDocument doc;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw FormatError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    if (!valid_key(key)) throw FormatError("line " + std::to_string(lineno) + ": invalid key '" + key + "'");
    if (doc.contains(key)) throw FormatError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    doc.entries_.emplace_back(key, trim(t.substr(eq + 1)));
  }
  return doc;
}

std::string KvDocument::to_text() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

KvDocument read_kv(const fs::path& path) { return KvDocument::parse(read_text(path)); }

void write_text(const std::string& text, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return ss.str();
}

// ---- manifest --------------------------------------------------------------

std::string serialize_manifest(const DatasetManifest& m) {
  KvDocument doc;
  doc.set("schema", static_cast<long long>(m.schema));
  doc.set("rig.focal", m.rig.focal);
  doc.set("rig.baseline", m.rig.baseline);
  doc.set("rig.width", static_cast<long long>(m.rig.width));
  doc.set("rig.height", static_cast<long long>(m.rig.height));
  doc.set("count", static_cast<long long>(m.records.size()));
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const auto& r = m.records[i];
    const std::string p = "sample." + std::to_string(i) + ".";
    doc.set(p + "id", r.id);
    doc.set(p + "left", r.left);
    doc.set(p + "right", r.right);
    doc.set(p + "disp_fg", r.disp_fg);
    doc.set(p + "disp_bg", r.disp_bg);
    doc.set(p + "mask", r.mask);
    doc.set(p + "seed", std::to_string(r.seed));
    doc.set(p + "layer_depth", r.layer_depth);
    doc.set(p + "wall_depth", r.wall_depth);
    doc.set(p + "transmittance", r.transmittance);
  }
  return "# mlstereo dataset manifest\n" + doc.to_text();
}

DatasetManifest parse_manifest(const std::string& text) {
  const KvDocument doc = KvDocument::parse(text);
  DatasetManifest m;
  m.schema = static_cast<int>(doc.get_int("schema"));
  if (m.schema != DatasetManifest::kSchemaVersion) {
    throw FormatError("manifest: unsupported schema " + std::to_string(m.schema));
  }
  m.rig.focal = doc.get_real("rig.focal");
  m.rig.baseline = doc.get_real("rig.baseline");
  m.rig.width = static_cast<int>(doc.get_int("rig.width"));
  m.rig.height = static_cast<int>(doc.get_int("rig.height"));
  const long long count = doc.get_int("count");
  if (count < 0) throw FormatError("manifest: negative count");
  std::set<std::string> ids;
  for (long long i = 0; i < count; ++i) {
    const std::string p = "sample." + std::to_string(i) + ".";
    ManifestRecord r;
    r.id = doc.get(p + "id");
    r.left = doc.get(p + "left");
    r.right = doc.get(p + "right");
    r.disp_fg = doc.get(p + "disp_fg");
    r.disp_bg = doc.get(p + "disp_bg");
    r.mask = doc.get(p + "mask");
    try {
      r.seed = parse_uint(doc.get(p + "seed"));
    } catch (const FormatError& e) {
      throw FormatError(p + "seed: " + e.what());
    }
    r.layer_depth = doc.get_real(p + "layer_depth");
    r.wall_depth = doc.get_real(p + "wall_depth");
    r.transmittance = doc.get_real(p + "transmittance");
    if (!ids.insert(r.id).second) throw FormatError("manifest: duplicate id '" + r.id + "'");
    m.records.push_back(std::move(r));
  }
  return m;
}

void write_manifest(const DatasetManifest& m, const fs::path& path) { write_text(serialize_manifest(m), path); }

DatasetManifest read_manifest(const fs::path& path) {
  DatasetManifest m = parse_manifest(read_text(path));
  const fs::path root = path.parent_path();
  for (const auto& r : m.records) {
    for (const std::string* rel : {&r.left, &r.right, &r.disp_fg, &r.disp_bg, &r.mask}) {
      if (!fs::exists(root / *rel)) throw FormatError("manifest: sample '" + r.id + "' references missing " + *rel);
    }
  }
  return m;
}

GroundTruthBundle load_ground_truth(const ManifestRecord& rec, const fs::path& root) {
  GroundTruthBundle gt;
  gt.fg_disparity = read_pfm_plane(root / rec.disp_fg);
  gt.bg_disparity = read_pfm_plane(root / rec.disp_bg);
  auto [transparent, valid] = decode_mask(read_png_gray(root / rec.mask));
  require_same_shape(gt.fg_disparity, gt.bg_disparity, "load_ground_truth");
  require_same_shape(gt.fg_disparity, transparent, "load_ground_truth");
  gt.transparent_mask = std::move(transparent);
  gt.valid = std::move(valid);
  return gt;
}

// ---- point cloud -----------------------------------------------------------

std::vector<Point> point_cloud(const fusion::LabeledDisparity& result, const Raster& left, const CameraRig& rig,
                               double min_disparity) {
  require_same_shape(result.foreground, left, "point_cloud");
  require_same_shape(result.background, left, "point_cloud");
  require_same_shape(result.transparent_mask, left, "point_cloud");
  const double cx = (left.cols() - 1) / 2.0;
  const double cy = (left.rows() - 1) / 2.0;
  const Image8 colours = quantize(left);
  std::vector<Point> points;
  auto emit = [&](int r, int c, double d, PointLabel label) {
    const double z = rig.fb() / d;
    points.push_back({(c - cx) * z / rig.focal, (r - cy) * z / rig.focal, z, colours(r, c), label});
  };
  for (int r = 0; r < left.rows(); ++r) {
    for (int c = 0; c < left.cols(); ++c) {
      const double fg = result.foreground(r, c);
      if (fg > min_disparity && std::isfinite(fg)) emit(r, c, fg, PointLabel::Foreground);
      const double bg = result.background(r, c);
      if (result.transparent_mask(r, c) && bg > min_disparity && std::isfinite(bg)) {
        emit(r, c, bg, PointLabel::Background);
      }
    }
  }
  return points;
}

std::string serialize_ply(const std::vector<Point>& points) {
  std::string out =
      "ply\nformat ascii 1.0\ncomment label 0 = foreground, 1 = background\nelement vertex " +
      std::to_string(points.size()) +
      "\nproperty float x\nproperty float y\nproperty float z\n"
      "property uchar red\nproperty uchar green\nproperty uchar blue\nproperty uchar label\nend_header\n";
  for (const auto& p : points) {
    out += format_real(p.x) + " " + format_real(p.y) + " " + format_real(p.z) + " " +
           std::to_string(p.colour[0]) + " " + std::to_string(p.colour[1]) + " " + std::to_string(p.colour[2]) +
           " " + std::to_string(static_cast<int>(p.label)) + "\n";
  }
  return out;
}

std::size_t export_point_cloud(const fusion::LabeledDisparity& result, const Raster& left, const CameraRig& rig,
                               const fs::path& path, double min_disparity) {
  const auto points = point_cloud(result, left, rig, min_disparity);
  write_text(serialize_ply(points), path);
  return points.size();
}

}  // namespace mlstereo::io
