#include "liftkit/priors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "json.hpp"

#include "liftkit/error.hpp"

namespace liftkit {

std::string SizePriorDB::normalize_key(std::string_view category) {
  std::size_t b = 0;
  std::size_t e = category.size();
  while (b < e && std::isspace(static_cast<unsigned char>(category[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(category[e - 1]))) --e;
  std::string key(category.substr(b, e - b));
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
  return key;
}

void SizePriorDB::add(std::string_view category, const Vec3& dims) {
  const std::string key = normalize_key(category);
  if (key.empty()) fail(ErrorCode::kFormat, "empty category name");
  if (!dims.allFinite() || !(dims.minCoeff() > 0.0)) {
    fail(ErrorCode::kFormat, "field \"" + std::string(category) + "\": dimensions must be positive and finite");
  }
  if (!entries_.emplace(key, dims).second) {
    fail(ErrorCode::kFormat, "field \"" + std::string(category) + "\": duplicate category \"" + key + "\"");
  }
}

std::optional<Vec3> SizePriorDB::find(std::string_view category) const {
  const auto it = entries_.find(normalize_key(category));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

SizePriorDB load_priors(std::string_view json_text) {
  SizePriorDB db;
  // The SAX interface sees duplicate raw keys, which a parsed object would
  // silently collapse.
  struct KeyCollector : nlohmann::json_sax<nlohmann::json> {
    std::vector<std::string> top_level_keys;
    int depth = 0;
    bool null() override { return true; }
    bool boolean(bool) override { return true; }
    bool number_integer(number_integer_t) override { return true; }
    bool number_unsigned(number_unsigned_t) override { return true; }
    bool number_float(number_float_t, const string_t&) override { return true; }
    bool string(string_t&) override { return true; }
    bool binary(binary_t&) override { return true; }
    bool start_object(std::size_t) override { ++depth; return true; }
    bool end_object() override { --depth; return true; }
    bool start_array(std::size_t) override { ++depth; return true; }
    bool end_array() override { --depth; return true; }
    bool key(string_t& k) override {
      if (depth == 1) top_level_keys.push_back(k);
      return true;
    }
    bool parse_error(std::size_t position, const std::string&, const nlohmann::detail::exception& ex) override {
      throw Error(ErrorCode::kFormat, "priors JSON parse error at byte " + std::to_string(position) + ": " + ex.what());
    }
  } collector;
  nlohmann::json::sax_parse(json_text, &collector);

  const auto doc = nlohmann::json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) fail(ErrorCode::kFormat, "priors JSON could not be parsed");
  if (!doc.is_object()) fail(ErrorCode::kFormat, "priors JSON must be an object");

  std::vector<std::string> seen_raw;
  for (const auto& raw : collector.top_level_keys) {
    if (std::find(seen_raw.begin(), seen_raw.end(), raw) != seen_raw.end()) {
      fail(ErrorCode::kFormat, "field \"" + raw + "\": duplicate category");
    }
    seen_raw.push_back(raw);
  }

  for (const auto& raw : collector.top_level_keys) {
    const auto& value = doc.at(raw);
    if (raw == "_source") {
      if (!value.is_string()) fail(ErrorCode::kFormat, "field \"_source\": expected a string");
      db.source = value.get<std::string>();
      continue;
    }
    if (!value.is_array() || value.size() != 3) {
      fail(ErrorCode::kFormat, "field \"" + raw + "\": expected [L, W, H]");
    }
    Vec3 dims;
    for (int i = 0; i < 3; ++i) {
      if (!value[i].is_number()) fail(ErrorCode::kFormat, "field \"" + raw + "\": dimension " + std::to_string(i) + " is not a number");
      dims[i] = value[i].get<double>();
    }
    db.add(raw, dims);
  }
  return db;
}

double volume_ratio(const Vec3& dims, const Vec3& ref_dims) {
  if (!(dims.minCoeff() > 0.0) || !(ref_dims.minCoeff() > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "volume ratio needs positive dimensions");
  }
  return (dims.x() * dims.y() * dims.z()) / (ref_dims.x() * ref_dims.y() * ref_dims.z());
}

}  // namespace liftkit
