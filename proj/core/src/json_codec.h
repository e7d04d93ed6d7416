#pragma once

#include "json.hpp"

#include "tlapse/camera.h"
#include "tlapse/errors.h"

namespace tlapse {

inline nlohmann::json vec_to_json(const Eigen::Vector3d& v) {
  return nlohmann::json::array({v.x(), v.y(), v.z()});
}

inline Eigen::Vector3d vec_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw Error(ErrorCode::kIo, "expected a 3-vector");
  return {v[0], v[1], v[2]};
}

inline nlohmann::json camera_to_json(const Camera& c) {
  nlohmann::json j;
  j["fx"] = c.focal.x();
  j["fy"] = c.focal.y();
  j["cx"] = c.principal_point.x();
  j["cy"] = c.principal_point.y();
  std::vector<double> r;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) r.push_back(c.rotation(i, k));
  j["rotation"] = r;
  j["center"] = vec_to_json(c.center);
  j["width"] = c.width;
  j["height"] = c.height;
  return j;
}

inline Camera camera_from_json(const nlohmann::json& j) {
  Camera c;
  c.focal = {j.at("fx").get<double>(), j.at("fy").get<double>()};
  c.principal_point = {j.at("cx").get<double>(), j.at("cy").get<double>()};
  const auto r = j.at("rotation").get<std::vector<double>>();
  if (r.size() != 9) throw Error(ErrorCode::kIo, "rotation needs 9 values");
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) c.rotation(i, k) = r[3 * i + k];
  c.center = vec_from_json(j.at("center"));
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  return c;
}

}  // namespace tlapse
