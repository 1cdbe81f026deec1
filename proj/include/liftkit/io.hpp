#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "liftkit/boxes.hpp"
#include "liftkit/evaluate.hpp"
#include "liftkit/geometry.hpp"

namespace liftkit::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_text(const fs::path& path);

/// Writes to a sibling temporary file, then renames over `path`.
void write_atomic(const fs::path& path, std::string_view bytes);

// Depth images: 16-bit grayscale PNG in millimetres (0 = invalid) or
// single-channel PFM in metres, chosen by extension.
DepthImage read_depth(const fs::path& path);
DepthImage decode_depth_png(std::string_view bytes);
std::string encode_depth_png(const DepthImage& depth);
DepthImage decode_pfm_depth(std::string_view bytes);
std::string encode_pfm_depth(const DepthImage& depth);

/// Camera-frame normal maps as 3-channel PFM or 32-bit float TIFF; zero
/// vectors and non-finite entries are treated as absent.
NormalMap read_normal_map(const fs::path& path);
NormalMap decode_pfm_normals(std::string_view bytes);
std::string encode_pfm_normals(const NormalMap& normals);

/// Binary little-endian PLY: float x, y, z and optional uint u, v.
std::string encode_ply(const PointCloud& cloud);
/// Accepts ascii and binary_little_endian vertex elements.
PointCloud decode_ply(std::string_view bytes);

json camera_to_json(const CameraModel& camera);
CameraModel camera_from_json(const json& j);

json box3d_to_json(const Box3D& box);
Box3D box3d_from_json(const json& j);
Box2D box2d_from_json(const json& j);
std::vector<Box2D> detections2d_from_json(const json& j);

/// [{"scene": id, "boxes": [...]}]
SceneSet scenes_from_json(const json& j);
json scenes_to_json(const SceneSet& scenes);

json parse_json(std::string_view text, std::string_view what);

}  // namespace liftkit::io
