#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "gsrecon/error.hpp"
#include "gsrecon/io.hpp"
#include "gsrecon/synth.hpp"

namespace gsr {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string view_stem(std::size_t n) { return "view_" + std::to_string(n + 1); }

Image mask_image(const ValidMask& mask) {
  Image img(mask.width(), mask.height(), 1);
  for (std::size_t p = 0; p < mask.size(); ++p) img.data[p] = mask[p] ? 1.0 : 0.0;
  return img;
}

ValidMask mask_from_image(const Image& img) {
  ValidMask mask(img.width, img.height, 0);
  for (int j = 0; j < img.height; ++j)
    for (int i = 0; i < img.width; ++i) mask(i, j) = img.at(i, j, 0) > 0.5 ? 1 : 0;
  return mask;
}

}  // namespace

void write_sample(const fs::path& dir, const DatasetSample& s) {
  fs::create_directories(dir);
  for (std::size_t n = 0; n < s.views(); ++n) {
    write_png(dir / (view_stem(n) + ".png"), s.images[n]);
    write_pfm(dir / (view_stem(n) + "_depth.pfm"), s.depths[n]);
    write_png(dir / (view_stem(n) + "_mask.png"), mask_image(s.masks[n]));
  }
  CameraRig rig{s.intrinsics, {}};
  for (const auto& p : s.poses) rig.poses.emplace_back(p);
  write_camera_json(dir / "cameras.json", rig);

  const json meta = {{"seed", s.seed},
                     {"mode", std::string(to_string(s.mode))},
                     {"views", s.views()},
                     {"scale", s.scale},
                     {"object_center", {s.object_center.x(), s.object_center.y(), s.object_center.z()}}};
  std::ofstream out(dir / "meta.json");
  if (!out) throw DataError("cannot write " + (dir / "meta.json").string());
  out << meta.dump(2) << "\n";
}

DatasetSample read_sample(const fs::path& dir) {
  std::ifstream in(dir / "meta.json");
  if (!in) throw DataError("missing " + (dir / "meta.json").string());
  DatasetSample s;
  std::size_t views = 0;
  try {
    const json meta = json::parse(in);
    s.seed = meta.at("seed").get<std::uint64_t>();
    s.mode = parse_scene_mode(meta.at("mode").get<std::string>());
    views = meta.at("views").get<std::size_t>();
    s.scale = meta.at("scale").get<double>();
    const auto& c = meta.at("object_center");
    s.object_center = Vec3(c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>());
  } catch (const json::exception& e) {
    throw DataError((dir / "meta.json").string() + ": " + e.what());
  }

  const CameraRig rig = read_camera_json(dir / "cameras.json");
  s.intrinsics = rig.intrinsics;
  s.poses = complete_poses(rig);
  if (s.poses.size() != views)
    throw DataError(dir.string() + ": cameras.json has " + std::to_string(s.poses.size()) + " poses, meta says " +
                    std::to_string(views));
  for (std::size_t n = 0; n < views; ++n) {
    Image img = read_png(dir / (view_stem(n) + ".png"));
    if (img.channels == 4) {
      Image rgb(img.width, img.height, 3);
      for (int j = 0; j < img.height; ++j)
        for (int i = 0; i < img.width; ++i)
          for (int c = 0; c < 3; ++c) rgb.at(i, j, c) = img.at(i, j, c);
      img = std::move(rgb);
    }
    if (img.channels != 3) throw DataError(dir.string() + ": " + view_stem(n) + ".png is not RGB");
    s.images.push_back(std::move(img));
    s.depths.push_back(read_pfm(dir / (view_stem(n) + "_depth.pfm")));
    s.masks.push_back(mask_from_image(read_png(dir / (view_stem(n) + "_mask.png"))));
    s.points.push_back(unproject_depth(s.depths[n], s.intrinsics, s.poses[n], s.masks[n]));
  }
  return s;
}

std::vector<fs::path> list_scenes(const fs::path& root) {
  if (!fs::is_directory(root)) throw DataError("dataset directory " + root.string() + " does not exist");
  std::vector<fs::path> scenes;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory() && entry.path().filename().string().starts_with("scene_")) scenes.push_back(entry.path());
  std::sort(scenes.begin(), scenes.end());
  if (scenes.empty()) throw DataError("no scene_* directories in " + root.string());
  return scenes;
}

}  // namespace gsr
