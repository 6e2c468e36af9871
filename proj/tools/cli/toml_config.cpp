#include "cli/toml_config.hpp"

#include <charconv>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

namespace gsr::cli {

namespace {

std::string scalar_text(const toml::node& node, const std::string& key) {
  if (auto s = node.value<std::string>(); s && node.is_string()) return *s;
  if (node.is_boolean()) return *node.value<bool>() ? "true" : "false";
  if (node.is_integer()) return std::to_string(*node.value<std::int64_t>());
  if (node.is_floating_point()) {
    // shortest text that round-trips
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, *node.value<double>());
    return std::string(buf, res.ptr);
  }
  throw CLI::ConversionError("config key '" + key + "' must be a string, number, boolean or array of those");
}

std::string option_name(std::string key) {
  for (char& c : key)
    if (c == '_') c = '-';
  return key;
}

void collect(const toml::table& table, std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& items) {
  for (const auto& [k, node] : table) {
    const std::string key(k.str());
    if (const auto* sub = node.as_table()) {
      parents.push_back(key);
      collect(*sub, parents, items);
      parents.pop_back();
      continue;
    }
    CLI::ConfigItem item;
    item.parents = parents;
    item.name = option_name(key);
    if (const auto* arr = node.as_array()) {
      for (const auto& elem : *arr) item.inputs.push_back(scalar_text(elem, key));
    } else {
      item.inputs.push_back(scalar_text(node, key));
    }
    items.push_back(std::move(item));
  }
}

}  // namespace

std::vector<CLI::ConfigItem> TomlConfig::from_config(std::istream& input) const {
  std::ostringstream buf;
  buf << input.rdbuf();
  toml::table table;
  try {
    table = toml::parse(buf.str());
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "invalid TOML: " << e.description() << " at line " << e.source().begin.line;
    throw CLI::ConversionError(msg.str());
  }
  std::vector<CLI::ConfigItem> items;
  std::vector<std::string> parents;
  if (root_ != nullptr)
    for (const CLI::App* sub : root_->get_subcommands()) parents.push_back(sub->get_name());
  collect(table, parents, items);
  return items;
}

}  // namespace gsr::cli
