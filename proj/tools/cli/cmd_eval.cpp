#include <algorithm>
#include <cmath>
#include <memory>
#include <ostream>

#include <nlohmann/json.hpp>

#include "cli/cli.hpp"
#include "cli/commands.hpp"
#include "gsrecon/calib.hpp"
#include "gsrecon/error.hpp"
#include "gsrecon/io.hpp"
#include "gsrecon/metrics.hpp"

namespace gsr::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// PSNR of identical images is reported as the string "inf".
json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

struct PoseArgs {
  std::string pred;
  std::string gt;
  std::string out;
  std::string dump_config;
};

int run_eval_pose(const CLI::App& app, const PoseArgs& a, Streams io) {
  if (dump_config_if_requested(app, a.dump_config)) return kOk;
  const std::vector<SE3Pose> pred = complete_poses(read_camera_json(a.pred));
  const std::vector<SE3Pose> gt = complete_poses(read_camera_json(a.gt));
  if (pred.size() != gt.size())
    throw DataError("prediction has " + std::to_string(pred.size()) + " cameras, ground truth " +
                    std::to_string(gt.size()));
  const PoseErrors e = pose_errors(pred, gt);
  const json doc = {{"rre", e.rre}, {"rra15", e.rra15}, {"rra30", e.rra30}, {"te", e.te}, {"pair_rre", e.pair_rre}};
  if (!a.out.empty()) write_text(a.out, doc.dump(2) + "\n");
  io.out << doc.dump(2) << "\n";
  return kOk;
}

struct NvsArgs {
  std::string rendered;
  std::string gt;
  std::string out;
  int resolution = 0;
  std::string dump_config;
};

// Box-filter downsampling by an integer factor.
Image resize_to(const Image& img, int size) {
  if (size <= 0 || (img.width == size && img.height == size)) return img;
  if (img.width != img.height || img.width % size != 0)
    throw DataError("cannot resample " + std::to_string(img.width) + "x" + std::to_string(img.height) + " to " +
                    std::to_string(size) + "x" + std::to_string(size));
  const int f = img.width / size;
  Image out(size, size, img.channels);
  for (int j = 0; j < size; ++j)
    for (int i = 0; i < size; ++i)
      for (int c = 0; c < img.channels; ++c) {
        double s = 0;
        for (int dy = 0; dy < f; ++dy)
          for (int dx = 0; dx < f; ++dx) s += img.at(i * f + dx, j * f + dy, c);
        out.at(i, j, c) = s / (f * f);
      }
  return out;
}

int run_eval_nvs(const CLI::App& app, const NvsArgs& a, Streams io) {
  if (dump_config_if_requested(app, a.dump_config)) return kOk;
  std::vector<fs::path> names;
  for (const auto& entry : fs::directory_iterator(a.rendered)) {
    const fs::path& p = entry.path();
    if (p.extension() != ".png" || p.stem().string().ends_with("_mask")) continue;
    if (fs::exists(fs::path(a.gt) / p.filename())) names.push_back(p.filename());
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) throw DataError("no PNG file names shared by " + a.rendered + " and " + a.gt);

  json per_image = json::array();
  double psnr_sum = 0.0, ssim_sum = 0.0;
  for (const auto& name : names) {
    const Image r = resize_to(read_png(fs::path(a.rendered) / name), a.resolution);
    const Image g = resize_to(read_png(fs::path(a.gt) / name), a.resolution);
    if (!r.same_shape(g)) throw DataError(name.string() + ": rendered and ground-truth images differ in shape");
    const double p = psnr(r, g);
    const double s = ssim(r, g);
    psnr_sum += p;
    ssim_sum += s;
    per_image.push_back({{"image", name.string()}, {"psnr", number_or_inf(p)}, {"ssim", s}});
  }
  const double count = static_cast<double>(names.size());
  const json doc = {{"psnr", number_or_inf(psnr_sum / count)},
                    {"ssim", ssim_sum / count},
                    {"count", names.size()},
                    {"images", per_image}};
  if (!a.out.empty()) write_text(a.out, doc.dump(2) + "\n");
  io.out << doc.dump(2) << "\n";
  return kOk;
}

}  // namespace

Command add_eval_pose(CLI::App& root, Streams io) {
  auto args = std::make_shared<PoseArgs>();
  CLI::App* app = root.add_subcommand("eval-pose", "Relative rotation and translation errors between camera files");
  app->add_option("pred", args->pred, "Predicted cameras.json")->required()->check(CLI::ExistingFile);
  app->add_option("gt", args->gt, "Ground-truth cameras.json")->required()->check(CLI::ExistingFile);
  app->add_option("-o,--out", args->out, "Also write the JSON report here");
  add_config_options(*app, args->dump_config);
  return {app, [app, args, io] { return run_eval_pose(*app, *args, io); }};
}

Command add_eval_nvs(CLI::App& root, Streams io) {
  auto args = std::make_shared<NvsArgs>();
  CLI::App* app = root.add_subcommand("eval-nvs", "PSNR and SSIM between same-named PNGs in two directories");
  app->add_option("rendered", args->rendered, "Directory of rendered views")->required()->check(CLI::ExistingDirectory);
  app->add_option("gt", args->gt, "Directory of reference views")->required()->check(CLI::ExistingDirectory);
  app->add_option("-o,--out", args->out, "Also write the JSON report here");
  app->add_option("--resolution", args->resolution, "Evaluate at this square size (integer downsampling)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  add_config_options(*app, args->dump_config);
  return {app, [app, args, io] { return run_eval_nvs(*app, *args, io); }};
}

}  // namespace gsr::cli
