#include <cstdio>
#include <memory>
#include <ostream>
#include <random>

#include "cli/cli.hpp"
#include "cli/commands.hpp"
#include "gsrecon/error.hpp"
#include "gsrecon/synth.hpp"

namespace gsr::cli {

namespace {

struct SynthArgs {
  std::string out;
  int scenes = 8;
  int views = 4;
  int resolution = 32;
  double focal = 0.0;
  std::string mode = "object";
  std::uint64_t seed = 0;
  int min_blobs = 3;
  int max_blobs = 10;
  double elevation = 20.0;
  double radius = 4.0;
  double min_mask_fraction = 0.025;
  bool random_azimuth = false;
  bool force = false;
  std::string dump_config;
};

std::string scene_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%04d", index);
  return buf;
}

int run_synth(const CLI::App& app, const SynthArgs& a, Streams io) {
  if (dump_config_if_requested(app, a.dump_config)) return kOk;
  namespace fs = std::filesystem;
  const fs::path root(a.out);
  if (fs::exists(root) && !fs::is_empty(root)) {
    if (!a.force) throw DataError("output directory " + root.string() + " is not empty (use --force to replace it)");
    fs::remove_all(root);
  }
  fs::create_directories(root);

  SynthOptions opts;
  opts.views = a.views;
  opts.width = opts.height = a.resolution;
  opts.focal = a.focal;
  opts.mode = parse_scene_mode(a.mode);
  opts.min_blobs = a.min_blobs;
  opts.max_blobs = a.max_blobs;
  opts.elevation_deg = a.elevation;
  opts.radius = a.radius;
  opts.structured = !a.random_azimuth;
  opts.min_mask_fraction = a.min_mask_fraction;
  opts.validate();

  std::mt19937_64 rng(a.seed);
  for (int s = 0; s < a.scenes; ++s) write_sample(root / scene_name(s), make_sample(rng(), opts));
  io.out << "wrote " << a.scenes << " scenes to " << root.string() << "\n";
  return kOk;
}

}  // namespace

Command add_synth(CLI::App& root, Streams io) {
  auto args = std::make_shared<SynthArgs>();
  CLI::App* app = root.add_subcommand("synth", "Generate a synthetic multi-view dataset");
  app->add_option("-o,--out", args->out, "Output dataset directory")->required();
  app->add_option("--scenes", args->scenes, "Number of scenes")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--views", args->views, "Views per scene")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--resolution", args->resolution, "Square image size in pixels")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--focal", args->focal, "Focal length in pixels; 0 selects 0.875 x resolution")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app->add_option("--mode", args->mode, "object (white background) or scene")
      ->check(CLI::IsMember({"object", "scene"}))
      ->capture_default_str();
  app->add_option("--seed", args->seed, "Random seed")->capture_default_str();
  app->add_option("--min-blobs", args->min_blobs, "Fewest blobs per scene")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--max-blobs", args->max_blobs, "Most blobs per scene")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--elevation", args->elevation, "Camera elevation in degrees")->capture_default_str();
  app->add_option("--radius", args->radius, "Orbit radius before normalization")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--min-mask-fraction", args->min_mask_fraction,
                  "Redraw scenes whose foreground covers less of any view than this")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app->add_flag("--random-azimuth", args->random_azimuth, "Draw azimuths uniformly instead of evenly spaced");
  app->add_flag("--force", args->force, "Replace a non-empty output directory");
  add_config_options(*app, args->dump_config);
  return {app, [app, args, io] { return run_synth(*app, *args, io); }};
}

}  // namespace gsr::cli
