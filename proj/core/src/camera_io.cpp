#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "gsrecon/error.hpp"
#include "gsrecon/io.hpp"

namespace gsr {

using nlohmann::json;

void write_camera_json(const std::filesystem::path& path, const CameraRig& rig) {
  json doc;
  doc["f"] = rig.intrinsics.f;
  doc["width"] = rig.intrinsics.width;
  doc["height"] = rig.intrinsics.height;
  json poses = json::array();
  for (const auto& pose : rig.poses) {
    if (!pose) {
      poses.push_back(nullptr);
      continue;
    }
    const Mat4 m = pose->matrix();
    json flat = json::array();
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) flat.push_back(m(r, c));
    poses.push_back(std::move(flat));
  }
  doc["poses"] = std::move(poses);

  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << "\n";
}

CameraRig read_camera_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  CameraRig rig;
  try {
    const json doc = json::parse(in);
    rig.intrinsics.f = doc.at("f").get<double>();
    rig.intrinsics.width = doc.at("width").get<int>();
    rig.intrinsics.height = doc.at("height").get<int>();
    for (const auto& entry : doc.at("poses")) {
      if (entry.is_null()) {
        rig.poses.emplace_back();
        continue;
      }
      if (!entry.is_array() || entry.size() != 16)
        throw DataError(path.string() + ": each pose must be 16 numbers");
      Mat4 m;
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) m(r, c) = entry[static_cast<std::size_t>(4 * r + c)].get<double>();
      rig.poses.emplace_back(SE3Pose::from_matrix(m));
    }
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  rig.intrinsics.validate();
  return rig;
}

std::vector<SE3Pose> complete_poses(const CameraRig& rig) {
  std::vector<SE3Pose> poses;
  poses.reserve(rig.poses.size());
  for (std::size_t k = 0; k < rig.poses.size(); ++k) {
    if (!rig.poses[k]) throw DataError("camera " + std::to_string(k) + " has no pose");
    poses.push_back(*rig.poses[k]);
  }
  return poses;
}

}  // namespace gsr
