#pragma once

#include <json.hpp>

#include "catre/category.hpp"
#include "catre/geometry.hpp"

namespace catre::detail {

inline nlohmann::json vec_to_json(const Vec3& v) { return {v(0), v(1), v(2)}; }

inline Vec3 vec_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::kFormat, "expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline nlohmann::json pose_to_json(const Pose9D& p) {
  nlohmann::json r = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) r.push_back(p.r.matrix()(i, k));
  }
  return {{"R", r}, {"t", vec_to_json(p.t)}, {"s", vec_to_json(p.s)}};
}

inline Pose9D pose_from_json(const nlohmann::json& j) {
  const auto& r = j.at("R");
  if (!r.is_array() || r.size() != 9) throw Error(ErrorKind::kFormat, "R must have 9 entries");
  Mat3 m;
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) m(i, k) = r[3 * i + k].get<double>();
  }
  Pose9D p;
  p.r = Rotation::from_matrix(m, 1e-6);
  p.t = vec_from_json(j.at("t"));
  p.s = vec_from_json(j.at("s"));
  return p;
}

inline nlohmann::json symmetry_to_json(const SymmetrySpec& s) {
  if (!s.symmetric()) return {{"kind", "none"}};
  return {{"kind", "continuous-axis"}, {"axis", vec_to_json(s.axis)}};
}

inline SymmetrySpec symmetry_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "none") return SymmetrySpec::none();
  if (kind == "continuous-axis") return SymmetrySpec::continuous(vec_from_json(j.at("axis")));
  throw Error(ErrorKind::kFormat, "unknown symmetry kind '" + kind + "'");
}

inline nlohmann::json category_to_json(const CategorySpec& c) {
  nlohmann::json ranges = nlohmann::json::array();
  for (const auto& r : c.shape_param_ranges) {
    ranges.push_back({{"name", r.name}, {"min", r.min}, {"max", r.max}});
  }
  return {{"name", c.name},
          {"template", std::string(to_string(c.shape))},
          {"shape_param_ranges", ranges},
          {"symmetry", symmetry_to_json(c.symmetry)}};
}

inline CategorySpec category_from_json(const nlohmann::json& j) {
  CategorySpec c;
  c.name = j.at("name").get<std::string>();
  c.shape = template_from_string(j.at("template").get<std::string>());
  for (const auto& r : j.at("shape_param_ranges")) {
    c.shape_param_ranges.push_back(
        {r.at("name").get<std::string>(), r.at("min").get<double>(), r.at("max").get<double>()});
  }
  c.symmetry = symmetry_from_json(j.at("symmetry"));
  return c;
}

}  // namespace catre::detail
