#include <memory>
#include <ostream>
#include <sstream>

#include "cli/cli.hpp"
#include "cli/commands.hpp"
#include "gsrecon/error.hpp"
#include "gsrecon/io.hpp"
#include "gsrecon/renderer.hpp"

namespace gsr::cli {

namespace {

struct RenderArgs {
  std::string ply;
  std::string cameras;
  int view = 1;
  std::vector<double> pose;
  double focal = 0.0;
  int width = 0;
  int height = 0;
  std::string out;
  std::string depth;
  std::string background = "white";
  std::string dump_config;
};

int run_render(const CLI::App& app, const RenderArgs& a, Streams io) {
  if (dump_config_if_requested(app, a.dump_config)) return kOk;
  Intrinsics k;
  SE3Pose pose;
  if (!a.cameras.empty()) {
    const CameraRig rig = read_camera_json(a.cameras);
    if (a.view < 1 || a.view > static_cast<int>(rig.poses.size()))
      throw DataError("--view " + std::to_string(a.view) + " is outside [1, " + std::to_string(rig.poses.size()) + "] for " + a.cameras);
    if (!rig.poses[static_cast<std::size_t>(a.view - 1)])
      throw DataError("view " + std::to_string(a.view) + " has no pose in " + a.cameras);
    pose = *rig.poses[static_cast<std::size_t>(a.view - 1)];
    k = rig.intrinsics;
  } else if (!a.pose.empty()) {
    if (a.pose.size() != 16) throw CLI::ValidationError("--pose", "expects 16 numbers (row-major 4x4)");
    Mat4 m;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) m(r, c) = a.pose[static_cast<std::size_t>(4 * r + c)];
    pose = SE3Pose::from_matrix(m);
  }
  if (a.focal > 0) k.f = a.focal;
  if (a.width > 0) k.width = a.width;
  if (a.height > 0) k.height = a.height;
  if (a.cameras.empty() && !(a.focal > 0 && a.width > 0 && a.height > 0))
    throw CLI::ValidationError("render", "without --cameras, --focal, --width and --height are required");
  k.validate();

  const std::vector<GaussianPrimitive> prims = read_ply(a.ply);
  const RenderOutput r = render(prims, pose, k, parse_color(a.background));
  write_png(a.out, r.color);
  if (!a.depth.empty()) write_pfm(a.depth, r.depth);
  io.out << "rendered " << prims.size() << " Gaussians to " << a.out << "\n";
  return kOk;
}

}  // namespace

Command add_render(CLI::App& root, Streams io) {
  auto args = std::make_shared<RenderArgs>();
  CLI::App* app = root.add_subcommand("render", "Render a Gaussian PLY from a camera");
  app->add_option("ply", args->ply, "Gaussian PLY file")->required()->check(CLI::ExistingFile);
  app->add_option("-o,--out", args->out, "Output PNG")->required();
  auto* cams = app->add_option("--cameras", args->cameras, "Camera JSON")->check(CLI::ExistingFile);
  app->add_option("--view", args->view, "1-based view index into --cameras")->capture_default_str();
  app->add_option("--pose", args->pose, "Camera-to-reference 4x4 matrix, 16 numbers row-major")
      ->expected(16)
      ->excludes(cams);
  app->add_option("--focal", args->focal, "Focal length in pixels (overrides --cameras)");
  app->add_option("--width", args->width, "Image width (overrides --cameras)");
  app->add_option("--height", args->height, "Image height (overrides --cameras)");
  app->add_option("--depth", args->depth, "Also write the expected-depth map as PFM");
  app->add_option("--background", args->background, "white, black or r,g,b")->capture_default_str();
  add_config_options(*app, args->dump_config);
  return {app, [app, args, io] { return run_render(*app, *args, io); }};
}

}  // namespace gsr::cli
