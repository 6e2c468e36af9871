#include "cli/cli.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "cli/commands.hpp"
#include "cli/toml_config.hpp"
#include "gsrecon/error.hpp"

namespace gsr::cli {

// The config file is read by the root app (CLI11 only processes it there); subcommands fall
// through so `gsrecon train --config f.toml` still reaches it.
void add_config_options(CLI::App& app, std::string& dump_path) {
  app.config_formatter(std::make_shared<TomlConfig>());
  app.fallthrough();
  app.add_option("--dump-config", dump_path, "Write the effective configuration as TOML and exit")
      ->configurable(false);
}

bool dump_config_if_requested(const CLI::App& app, const std::string& dump_path) {
  if (dump_path.empty()) return false;
  std::string text = app.config_to_str(true, false);
  write_text(dump_path, text);
  return true;
}

Vec3 parse_color(const std::string& text) {
  if (text == "white") return Vec3::Ones();
  if (text == "black") return Vec3::Zero();
  Vec3 c;
  char sep1 = 0, sep2 = 0;
  std::istringstream in(text);
  if (in >> c[0] >> sep1 >> c[1] >> sep2 >> c[2] && sep1 == ',' && sep2 == ',' && (in >> std::ws).eof() &&
      (c.array() >= 0).all() && (c.array() <= 1).all())
    return c;
  throw CLI::ValidationError("--background", "expected white, black or r,g,b in [0,1], got '" + text + "'");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pose-free sparse-view Gaussian reconstruction", "gsrecon"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "gsrecon 0.1.0");
  app.config_formatter(std::make_shared<TomlConfig>(&app));
  app.set_config("--config", "", "TOML file with option values for the subcommand; command-line flags take precedence");
  const Streams io{out, err};
  const std::vector<Command> commands = {add_synth(app, io),   add_train(app, io),     add_reconstruct(app, io),
                                         add_render(app, io),  add_eval_pose(app, io), add_eval_nvs(app, io)};

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    for (const auto& c : commands)
      if (c.app->parsed()) return c.run();
    return kUsage;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << "\n";
    return kSolverError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return run(args, out, err);
}

}  // namespace gsr::cli
