#include <fstream>
#include <memory>
#include <ostream>

#include <nlohmann/json.hpp>

#include "cli/cli.hpp"
#include "cli/commands.hpp"
#include "gsrecon/error.hpp"
#include "gsrecon/train.hpp"

namespace gsr::cli {

namespace {

struct TrainArgs {
  std::string data;
  std::string out;
  std::string log;
  TrainConfig config;
  long progress = 100;
  std::string dump_config;
};

nlohmann::json log_json(const TrainLogEntry& e) {
  return {{"step", e.step},       {"l_pos", e.l_pos},         {"l_align", e.l_align},
          {"l_render", e.l_render}, {"total", e.total},       {"l_color", e.l_color},
          {"l_opacity", e.l_opacity}, {"lr", e.lr}};
}

int run_train(const CLI::App& app, TrainArgs a, Streams io) {
  if (dump_config_if_requested(app, a.dump_config)) return kOk;
  namespace fs = std::filesystem;

  std::vector<DatasetSample> dataset;
  for (const auto& dir : list_scenes(a.data)) dataset.push_back(read_sample(dir));
  a.config.model.image_width = dataset.front().intrinsics.width;
  a.config.model.image_height = dataset.front().intrinsics.height;
  a.config.validate();

  const fs::path out(a.out);
  fs::create_directories(out);
  const fs::path log_path = a.log.empty() ? out / "train_log.jsonl" : fs::path(a.log);
  std::ofstream log(log_path);
  if (!log) throw DataError("cannot write " + log_path.string());

  io.err << "training on " << dataset.size() << " scenes for " << a.config.steps << " steps\n";
  const TrainResult result = train(a.config, dataset, [&](const TrainLogEntry& e) {
    log << log_json(e).dump() << "\n";
    if (a.progress > 0 && e.step % a.progress == 0)
      io.err << "step " << e.step << "  l_pos " << e.l_pos << "  l_align " << e.l_align << "  l_render "
             << e.l_render << "  total " << e.total << "\n";
  });
  save_checkpoint(out, result.params);
  io.out << "saved checkpoint to " << out.string() << "\n";
  return kOk;
}

}  // namespace

Command add_train(CLI::App& root, Streams io) {
  auto args = std::make_shared<TrainArgs>();
  TrainConfig& c = args->config;
  CLI::App* app = root.add_subcommand("train", "Train the reconstruction transformer on a synthetic dataset");
  app->add_option("-d,--data", args->data, "Dataset directory written by synth")->required();
  app->add_option("-o,--out", args->out, "Checkpoint directory")->required();
  app->add_option("--log", args->log, "JSON-lines training log (default <out>/train_log.jsonl)");
  app->add_option("--steps", c.steps, "Optimizer steps")->check(CLI::NonNegativeNumber)->capture_default_str();
  app->add_option("--batch", c.batch, "Samples per step")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--lr", c.lr, "Peak learning rate")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--warmup", c.warmup, "Linear warmup steps")->check(CLI::NonNegativeNumber)->capture_default_str();
  app->add_option("--weight-decay", c.adam.weight_decay, "Decoupled weight decay")->capture_default_str();
  app->add_option("--grad-clip", c.grad_clip, "Global gradient-norm clip (0 disables)")->capture_default_str();
  app->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  app->add_option("--layers", c.model.layers, "Transformer blocks")->check(CLI::NonNegativeNumber)->capture_default_str();
  app->add_option("--width", c.model.width, "Token width")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--heads", c.model.heads, "Attention heads")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--patch", c.model.patch, "Patch size")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--max-views", c.model.max_views, "Most views per forward pass")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--lambda-align", c.weights.lambda_align, "Alignment loss weight")->capture_default_str();
  app->add_option("--lambda-pos", c.weights.lambda_pos, "Position loss weight")->capture_default_str();
  app->add_option("--t-max", c.weights.t_max, "Last step with position supervision")->capture_default_str();
  app->add_option("--mono-fraction", c.mono_fraction, "Fraction of single-view batch items")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app->add_option("--color-weight", c.color_weight, "Per-pixel color supervision weight")->capture_default_str();
  app->add_option("--opacity-weight", c.opacity_weight, "Per-pixel opacity supervision weight")->capture_default_str();
  app->add_option("--render-every", c.render_every, "Evaluate the render loss every N steps (0 disables)")
      ->capture_default_str();
  app->add_option("--progress", args->progress, "Print a progress line every N steps (0 disables)")
      ->capture_default_str();
  add_config_options(*app, args->dump_config);
  return {app, [app, args, io] { return run_train(*app, *args, io); }};
}

}  // namespace gsr::cli
