#include "liftkit/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <tiffio.h>

#include "liftkit/error.hpp"

namespace liftkit::io {
namespace {

std::string lower_ext(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

template <typename T>
T load_le(const char* p, bool big_endian) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if (big_endian) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  return v;
}

template <typename T>
void store_le(std::string& out, T v) {
  static_assert(std::endian::native == std::endian::little);
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

// PFM header: "Pf" (1 channel) or "PF" (3 channels), width height, scale.
struct PfmHeader {
  int channels = 1;
  int width = 0;
  int height = 0;
  bool big_endian = false;
  std::size_t data_offset = 0;
};

PfmHeader parse_pfm_header(std::string_view bytes) {
  PfmHeader h;
  std::size_t pos = 0;
  const auto next_token = [&]() -> std::string {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return std::string(bytes.substr(start, pos - start));
  };
  const std::string magic = next_token();
  if (magic == "Pf") {
    h.channels = 1;
  } else if (magic == "PF") {
    h.channels = 3;
  } else {
    fail(ErrorCode::kFormat, "not a PFM file");
  }
  try {
    h.width = std::stoi(next_token());
    h.height = std::stoi(next_token());
    const double scale = std::stod(next_token());
    if (scale == 0.0 || !std::isfinite(scale)) fail(ErrorCode::kFormat, "PFM scale must be non-zero");
    h.big_endian = scale > 0.0;
  } catch (const std::logic_error&) {
    fail(ErrorCode::kFormat, "malformed PFM header");
  }
  if (pos >= bytes.size()) fail(ErrorCode::kFormat, "PFM header without data");
  h.data_offset = pos + 1;  // single whitespace byte after the scale
  if (h.width < 1 || h.height < 1) fail(ErrorCode::kFormat, "PFM dimensions must be positive");
  const std::size_t need = static_cast<std::size_t>(h.width) * h.height * h.channels * sizeof(float);
  if (bytes.size() < h.data_offset + need) fail(ErrorCode::kFormat, "truncated PFM data");
  return h;
}

// PFM stores rows bottom-to-top.
float pfm_sample(std::string_view bytes, const PfmHeader& h, int u, int v, int c) {
  const std::size_t row = static_cast<std::size_t>(h.height - 1 - v);
  const std::size_t idx = (row * h.width + u) * h.channels + c;
  return load_le<float>(bytes.data() + h.data_offset + idx * sizeof(float), h.big_endian);
}

NormalMap read_tiff_normals(const fs::path& path) {
  TIFFSetWarningHandler(nullptr);
  TIFFSetErrorHandler(nullptr);
  TIFF* tif = TIFFOpen(path.c_str(), "r");
  if (tif == nullptr) fail(ErrorCode::kFormat, "cannot open TIFF " + path.string());
  std::uint32_t w = 0;
  std::uint32_t h = 0;
  std::uint16_t spp = 0;
  std::uint16_t bps = 0;
  std::uint16_t fmt = SAMPLEFORMAT_UINT;
  std::uint16_t planar = PLANARCONFIG_CONTIG;
  TIFFGetField(tif, TIFFTAG_IMAGEWIDTH, &w);
  TIFFGetField(tif, TIFFTAG_IMAGELENGTH, &h);
  TIFFGetFieldDefaulted(tif, TIFFTAG_SAMPLESPERPIXEL, &spp);
  TIFFGetFieldDefaulted(tif, TIFFTAG_BITSPERSAMPLE, &bps);
  TIFFGetFieldDefaulted(tif, TIFFTAG_SAMPLEFORMAT, &fmt);
  TIFFGetFieldDefaulted(tif, TIFFTAG_PLANARCONFIG, &planar);
  if (spp != 3 || bps != 32 || fmt != SAMPLEFORMAT_IEEEFP || planar != PLANARCONFIG_CONTIG || w == 0 || h == 0) {
    TIFFClose(tif);
    fail(ErrorCode::kFormat, "normal TIFF must be 3-channel interleaved 32-bit float");
  }
  NormalMap normals(static_cast<int>(w), static_cast<int>(h));
  std::vector<float> row(static_cast<std::size_t>(TIFFScanlineSize(tif)) / sizeof(float) + 3);
  for (std::uint32_t v = 0; v < h; ++v) {
    if (TIFFReadScanline(tif, row.data(), v, 0) < 0) {
      TIFFClose(tif);
      fail(ErrorCode::kFormat, "TIFF scanline read failed");
    }
    for (std::uint32_t u = 0; u < w; ++u) {
      const Vec3 n(row[3 * u], row[3 * u + 1], row[3 * u + 2]);
      if (n.allFinite() && n.norm() > 0.0) normals.set(static_cast<int>(u), static_cast<int>(v), n);
    }
  }
  TIFFClose(tif);
  return normals;
}

// --- PLY -------------------------------------------------------------------

enum class PlyType { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

PlyType parse_ply_type(const std::string& name) {
  if (name == "char" || name == "int8") return PlyType::kInt8;
  if (name == "uchar" || name == "uint8") return PlyType::kUInt8;
  if (name == "short" || name == "int16") return PlyType::kInt16;
  if (name == "ushort" || name == "uint16") return PlyType::kUInt16;
  if (name == "int" || name == "int32") return PlyType::kInt32;
  if (name == "uint" || name == "uint32") return PlyType::kUInt32;
  if (name == "float" || name == "float32") return PlyType::kFloat32;
  if (name == "double" || name == "float64") return PlyType::kFloat64;
  fail(ErrorCode::kFormat, "unknown PLY property type \"" + name + "\"");
}

std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::kInt8:
    case PlyType::kUInt8: return 1;
    case PlyType::kInt16:
    case PlyType::kUInt16: return 2;
    case PlyType::kInt32:
    case PlyType::kUInt32:
    case PlyType::kFloat32: return 4;
    case PlyType::kFloat64: return 8;
  }
  return 0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kFloat32;
  bool is_list = false;
  PlyType count_type = PlyType::kUInt8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

class PlyReader {
 public:
  PlyReader(std::string_view bytes, bool ascii, bool big_endian, std::size_t pos)
      : bytes_(bytes), ascii_(ascii), big_endian_(big_endian), pos_(pos) {}

  double read(PlyType t) {
    if (ascii_) return read_ascii();
    const std::size_t n = ply_size(t);
    if (pos_ + n > bytes_.size()) fail(ErrorCode::kFormat, "truncated PLY body");
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    switch (t) {
      case PlyType::kInt8: return load_le<std::int8_t>(p, big_endian_);
      case PlyType::kUInt8: return load_le<std::uint8_t>(p, big_endian_);
      case PlyType::kInt16: return load_le<std::int16_t>(p, big_endian_);
      case PlyType::kUInt16: return load_le<std::uint16_t>(p, big_endian_);
      case PlyType::kInt32: return load_le<std::int32_t>(p, big_endian_);
      case PlyType::kUInt32: return load_le<std::uint32_t>(p, big_endian_);
      case PlyType::kFloat32: return load_le<float>(p, big_endian_);
      case PlyType::kFloat64: return load_le<double>(p, big_endian_);
    }
    return 0.0;
  }

 private:
  double read_ascii() {
    while (pos_ < bytes_.size() && std::isspace(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (start == pos_) fail(ErrorCode::kFormat, "truncated PLY body");
    try {
      return std::stod(std::string(bytes_.substr(start, pos_ - start)));
    } catch (const std::logic_error&) {
      fail(ErrorCode::kFormat, "bad number in PLY body");
    }
  }

  std::string_view bytes_;
  bool ascii_;
  bool big_endian_;
  std::size_t pos_;
};

std::array<double, 3> json_vec3(const json& j, const char* field) {
  if (!j.contains(field) || !j.at(field).is_array() || j.at(field).size() != 3) {
    fail(ErrorCode::kFormat, std::string("field \"") + field + "\": expected an array of 3 numbers");
  }
  std::array<double, 3> out{};
  for (int i = 0; i < 3; ++i) {
    if (!j.at(field)[i].is_number()) fail(ErrorCode::kFormat, std::string("field \"") + field + "\": expected numbers");
    out[i] = j.at(field)[i].get<double>();
  }
  return out;
}

double json_number(const json& j, const char* field) {
  if (!j.contains(field) || !j.at(field).is_number()) {
    fail(ErrorCode::kFormat, std::string("field \"") + field + "\": expected a number");
  }
  return j.at(field).get<double>();
}

std::string json_string(const json& j, const char* field) {
  if (!j.contains(field) || !j.at(field).is_string()) {
    fail(ErrorCode::kFormat, std::string("field \"") + field + "\": expected a string");
  }
  return j.at(field).get<std::string>();
}

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(ErrorCode::kIo, "read failed for " + path.string());
  return ss.str();
}

void write_atomic(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) fail(ErrorCode::kIo, "cannot create directory " + path.parent_path().string());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      fail(ErrorCode::kIo, "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorCode::kIo, "cannot move output into place at " + path.string());
  }
}

DepthImage read_depth(const fs::path& path) {
  const std::string ext = lower_ext(path);
  const std::string bytes = read_text(path);
  if (ext == ".png") return decode_depth_png(bytes);
  if (ext == ".pfm") return decode_pfm_depth(bytes);
  fail(ErrorCode::kFormat, "unsupported depth file extension \"" + ext + "\" (expected .png or .pfm)");
}

DepthImage decode_pfm_depth(std::string_view bytes) {
  const PfmHeader h = parse_pfm_header(bytes);
  if (h.channels != 1) fail(ErrorCode::kFormat, "depth PFM must have a single channel");
  DepthImage depth(h.width, h.height);
  for (int v = 0; v < h.height; ++v) {
    for (int u = 0; u < h.width; ++u) depth.set(u, v, pfm_sample(bytes, h, u, v, 0));
  }
  return depth;
}

std::string encode_pfm_depth(const DepthImage& depth) {
  std::string out = "Pf\n" + std::to_string(depth.width()) + " " + std::to_string(depth.height()) + "\n-1.0\n";
  for (int v = depth.height() - 1; v >= 0; --v) {
    for (int u = 0; u < depth.width(); ++u) {
      store_le<float>(out, depth.valid(u, v) ? static_cast<float>(depth.depth(u, v)) : 0.0f);
    }
  }
  return out;
}

NormalMap decode_pfm_normals(std::string_view bytes) {
  const PfmHeader h = parse_pfm_header(bytes);
  if (h.channels != 3) fail(ErrorCode::kFormat, "normal PFM must have three channels");
  NormalMap normals(h.width, h.height);
  for (int v = 0; v < h.height; ++v) {
    for (int u = 0; u < h.width; ++u) {
      const Vec3 n(pfm_sample(bytes, h, u, v, 0), pfm_sample(bytes, h, u, v, 1), pfm_sample(bytes, h, u, v, 2));
      if (n.allFinite() && n.norm() > 0.0) normals.set(u, v, n);
    }
  }
  return normals;
}

std::string encode_pfm_normals(const NormalMap& normals) {
  std::string out = "PF\n" + std::to_string(normals.width()) + " " + std::to_string(normals.height()) + "\n-1.0\n";
  for (int v = normals.height() - 1; v >= 0; --v) {
    for (int u = 0; u < normals.width(); ++u) {
      const auto& n = normals.normal(u, v);
      for (int c = 0; c < 3; ++c) store_le<float>(out, n ? static_cast<float>((*n)[c]) : 0.0f);
    }
  }
  return out;
}

NormalMap read_normal_map(const fs::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".pfm") return decode_pfm_normals(read_text(path));
  if (ext == ".tif" || ext == ".tiff") {
    if (!fs::exists(path)) fail(ErrorCode::kIo, "cannot open " + path.string());
    return read_tiff_normals(path);
  }
  fail(ErrorCode::kFormat, "unsupported normal map extension \"" + ext + "\" (expected .pfm or .tif)");
}

std::string encode_ply(const PointCloud& cloud) {
  const bool prov = cloud.has_provenance();
  std::string out = "ply\nformat binary_little_endian 1.0\ncomment liftkit point cloud\nelement vertex " +
                    std::to_string(cloud.size()) + "\nproperty float x\nproperty float y\nproperty float z\n";
  if (prov) out += "property uint u\nproperty uint v\n";
  out += "end_header\n";
  out.reserve(out.size() + cloud.size() * (prov ? 20 : 12));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int c = 0; c < 3; ++c) store_le<float>(out, static_cast<float>(cloud.points[i][c]));
    if (prov) {
      store_le<std::uint32_t>(out, cloud.provenance[i].u);
      store_le<std::uint32_t>(out, cloud.provenance[i].v);
    }
  }
  return out;
}

PointCloud decode_ply(std::string_view bytes) {
  const std::size_t end = bytes.find("end_header");
  if (bytes.substr(0, 3) != "ply" || end == std::string_view::npos) fail(ErrorCode::kFormat, "not a PLY file");
  std::size_t body = bytes.find('\n', end);
  if (body == std::string_view::npos) fail(ErrorCode::kFormat, "PLY header not terminated");
  ++body;

  std::istringstream header{std::string(bytes.substr(0, end))};
  std::string line;
  std::string format;
  std::vector<PlyElement> elements;
  while (std::getline(header, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      ls >> format;
    } else if (word == "element") {
      PlyElement e;
      long long count = -1;
      ls >> e.name >> count;
      if (!ls || count < 0) fail(ErrorCode::kFormat, "bad PLY element line: " + line);
      e.count = static_cast<std::size_t>(count);
      elements.push_back(std::move(e));
    } else if (word == "property") {
      if (elements.empty()) fail(ErrorCode::kFormat, "PLY property before any element");
      PlyProperty p;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string count_type;
        std::string item_type;
        ls >> count_type >> item_type >> p.name;
        p.is_list = true;
        p.count_type = parse_ply_type(count_type);
        p.type = parse_ply_type(item_type);
      } else {
        p.type = parse_ply_type(type);
        ls >> p.name;
      }
      if (p.name.empty()) fail(ErrorCode::kFormat, "bad PLY property line: " + line);
      elements.back().properties.push_back(p);
    }
  }
  const bool ascii = format == "ascii";
  if (!ascii && format != "binary_little_endian" && format != "binary_big_endian") {
    fail(ErrorCode::kFormat, "unsupported PLY format \"" + format + "\"");
  }

  PlyReader reader(bytes, ascii, format == "binary_big_endian", body);
  PointCloud cloud;
  bool found_vertex = false;
  for (const auto& e : elements) {
    const bool is_vertex = e.name == "vertex";
    int ix = -1, iy = -1, iz = -1, iu = -1, iv = -1;
    for (std::size_t k = 0; k < e.properties.size(); ++k) {
      const auto& n = e.properties[k].name;
      const int idx = static_cast<int>(k);
      if (n == "x") ix = idx;
      if (n == "y") iy = idx;
      if (n == "z") iz = idx;
      if (n == "u") iu = idx;
      if (n == "v") iv = idx;
    }
    if (is_vertex) {
      if (ix < 0 || iy < 0 || iz < 0) fail(ErrorCode::kFormat, "PLY vertex element lacks x/y/z");
      if (e.count > bytes.size()) fail(ErrorCode::kFormat, "PLY vertex count exceeds file size");
      found_vertex = true;
      cloud.points.reserve(e.count);
    }
    const bool with_prov = is_vertex && iu >= 0 && iv >= 0;
    std::vector<double> values(e.properties.size());
    for (std::size_t r = 0; r < e.count; ++r) {
      for (std::size_t k = 0; k < e.properties.size(); ++k) {
        const auto& p = e.properties[k];
        if (p.is_list) {
          const double n = reader.read(p.count_type);
          if (!(n >= 0.0) || n > static_cast<double>(bytes.size())) fail(ErrorCode::kFormat, "bad PLY list length");
          for (std::size_t m = 0; m < static_cast<std::size_t>(n); ++m) reader.read(p.type);
          values[k] = 0.0;
        } else {
          values[k] = reader.read(p.type);
        }
      }
      if (!is_vertex) continue;
      const Vec3 pt(values[ix], values[iy], values[iz]);
      if (!pt.allFinite()) fail(ErrorCode::kFormat, "non-finite PLY vertex");
      cloud.points.push_back(pt);
      if (with_prov) {
        if (values[iu] < 0 || values[iv] < 0) fail(ErrorCode::kFormat, "negative pixel provenance");
        cloud.provenance.push_back({static_cast<std::uint32_t>(values[iu]), static_cast<std::uint32_t>(values[iv])});
      }
    }
    if (is_vertex) break;
  }
  if (!found_vertex) fail(ErrorCode::kFormat, "PLY file has no vertex element");
  return cloud;
}

json camera_to_json(const CameraModel& camera) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rot.push_back(camera.rotation(r, c));
  }
  return json{{"fx", camera.fx},
              {"fy", camera.fy},
              {"cx", camera.cx},
              {"cy", camera.cy},
              {"width", camera.width},
              {"height", camera.height},
              {"rotation", rot},
              {"translation", {camera.translation.x(), camera.translation.y(), camera.translation.z()}}};
}

CameraModel camera_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::kFormat, "camera JSON must be an object");
  CameraModel cam;
  cam.fx = json_number(j, "fx");
  cam.fy = json_number(j, "fy");
  cam.cx = json_number(j, "cx");
  cam.cy = json_number(j, "cy");
  if (!j.contains("width") || !j["width"].is_number_integer() || !j.contains("height") ||
      !j["height"].is_number_integer()) {
    fail(ErrorCode::kFormat, "field \"width\"/\"height\": expected integers");
  }
  cam.width = j["width"].get<int>();
  cam.height = j["height"].get<int>();
  if (j.contains("rotation")) {
    const auto& r = j["rotation"];
    if (!r.is_array() || r.size() != 9) fail(ErrorCode::kFormat, "field \"rotation\": expected 9 numbers");
    for (int i = 0; i < 9; ++i) {
      if (!r[i].is_number()) fail(ErrorCode::kFormat, "field \"rotation\": expected numbers");
      cam.rotation(i / 3, i % 3) = r[i].get<double>();
    }
  }
  if (j.contains("translation")) {
    const auto t = json_vec3(j, "translation");
    cam.translation = Vec3(t[0], t[1], t[2]);
  }
  try {
    cam.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kFormat, std::string("camera JSON: ") + e.what());
  }
  return cam;
}

json box3d_to_json(const Box3D& box) {
  return json{{"center", {box.center.x(), box.center.y(), box.center.z()}},
              {"dims", {box.dims.x(), box.dims.y(), box.dims.z()}},
              {"yaw", box.yaw},
              {"category", box.category},
              {"score", box.score}};
}

Box3D box3d_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::kFormat, "3D box must be an object");
  Box3D box;
  const auto c = json_vec3(j, "center");
  const auto d = json_vec3(j, "dims");
  box.center = Vec3(c[0], c[1], c[2]);
  box.dims = Vec3(d[0], d[1], d[2]);
  box.yaw = j.contains("yaw") ? json_number(j, "yaw") : 0.0;
  box.category = json_string(j, "category");
  box.score = j.contains("score") ? json_number(j, "score") : 1.0;
  try {
    box.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kFormat, e.what());
  }
  return box;
}

Box2D box2d_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::kFormat, "2D detection must be an object");
  if (!j.contains("bbox") || !j["bbox"].is_array() || j["bbox"].size() != 4) {
    fail(ErrorCode::kFormat, "field \"bbox\": expected [umin, vmin, umax, vmax]");
  }
  Box2D box;
  double v[4];
  for (int i = 0; i < 4; ++i) {
    if (!j["bbox"][i].is_number()) fail(ErrorCode::kFormat, "field \"bbox\": expected numbers");
    v[i] = j["bbox"][i].get<double>();
  }
  box.umin = v[0];
  box.vmin = v[1];
  box.umax = v[2];
  box.vmax = v[3];
  box.category = json_string(j, "category");
  box.score = j.contains("score") ? json_number(j, "score") : 1.0;
  return box;
}

std::vector<Box2D> detections2d_from_json(const json& j) {
  if (!j.is_array()) fail(ErrorCode::kFormat, "detections JSON must be an array");
  std::vector<Box2D> out;
  out.reserve(j.size());
  for (const auto& item : j) out.push_back(box2d_from_json(item));
  return out;
}

SceneSet scenes_from_json(const json& j) {
  if (!j.is_array()) fail(ErrorCode::kFormat, "scene list must be an array of {\"scene\", \"boxes\"}");
  SceneSet set;
  for (const auto& item : j) {
    if (!item.is_object()) fail(ErrorCode::kFormat, "scene entry must be an object");
    Scene scene;
    scene.id = json_string(item, "scene");
    if (!item.contains("boxes") || !item["boxes"].is_array()) fail(ErrorCode::kFormat, "field \"boxes\": expected an array");
    for (const auto& b : item["boxes"]) scene.boxes.push_back(box3d_from_json(b));
    try {
      set.add(std::move(scene));
    } catch (const Error& e) {
      fail(ErrorCode::kFormat, e.what());
    }
  }
  return set;
}

json scenes_to_json(const SceneSet& scenes) {
  json out = json::array();
  for (const auto& s : scenes.scenes()) {
    json boxes = json::array();
    for (const auto& b : s.boxes) boxes.push_back(box3d_to_json(b));
    out.push_back({{"scene", s.id}, {"boxes", boxes}});
  }
  return out;
}

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kFormat, std::string(what) + ": " + e.what());
  }
}

}  // namespace liftkit::io
