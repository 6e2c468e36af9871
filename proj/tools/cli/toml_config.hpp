#pragma once

#include <CLI11.hpp>

namespace gsr::cli {

/// CLI11 config formatter backed by toml++. Keys are option long names; underscores and dashes are
/// interchangeable. Output is CLI11's TOML writer. With a root app, keys of a flat file are routed to
/// whichever subcommand was selected on the command line.
class TomlConfig : public CLI::ConfigTOML {
 public:
  explicit TomlConfig(const CLI::App* root = nullptr) : root_(root) {}
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;

 private:
  const CLI::App* root_;
};

}  // namespace gsr::cli
