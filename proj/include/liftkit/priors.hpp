#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "liftkit/boxes.hpp"

namespace liftkit {

/// Category -> typical (L, W, H) in meters. Keys are lower-cased and trimmed.
class SizePriorDB {
 public:
  static std::string normalize_key(std::string_view category);

  /// Throws kFormat on non-positive dims, empty or duplicate (normalised) keys.
  void add(std::string_view category, const Vec3& dims);
  std::optional<Vec3> find(std::string_view category) const;

  const std::map<std::string, Vec3>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::string source;

 private:
  std::map<std::string, Vec3> entries_;
};

/// Parses {"<category>": [L, W, H], ..., "_source": "..."}.
SizePriorDB load_priors(std::string_view json_text);

/// (L W H) / (L_ref W_ref H_ref).
double volume_ratio(const Vec3& dims, const Vec3& ref_dims);
inline double volume_ratio(const Box3D& box, const Vec3& ref_dims) { return volume_ratio(box.dims, ref_dims); }

}  // namespace liftkit
