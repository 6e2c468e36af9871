#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>

#include <CLI11.hpp>

#include "gsrecon/geometry.hpp"

namespace gsr::cli {

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

struct Command {
  CLI::App* app = nullptr;
  std::function<int()> run;
};

Command add_synth(CLI::App& root, Streams io);
Command add_train(CLI::App& root, Streams io);
Command add_reconstruct(CLI::App& root, Streams io);
Command add_render(CLI::App& root, Streams io);
Command add_eval_pose(CLI::App& root, Streams io);
Command add_eval_nvs(CLI::App& root, Streams io);

// Shared helpers.

/// `--config FILE` (TOML, flags override) and `--dump-config FILE` on a subcommand.
void add_config_options(CLI::App& app, std::string& dump_path);
/// Writes the subcommand's effective configuration as TOML. Returns true if it did.
bool dump_config_if_requested(const CLI::App& app, const std::string& dump_path);

/// "white", "black" or "r,g,b" with components in [0, 1].
Vec3 parse_color(const std::string& text);

/// Writes `text` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace gsr::cli
