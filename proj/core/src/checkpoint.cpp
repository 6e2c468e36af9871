#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "gsrecon/error.hpp"
#include "gsrecon/model.hpp"

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace gsr {

using nlohmann::json;

namespace {

json config_to_json(const ModelConfig& c) {
  return {{"layers", c.layers},           {"width", c.width},           {"heads", c.heads},
          {"patch", c.patch},             {"mlp_ratio", c.mlp_ratio},   {"image_width", c.image_width},
          {"image_height", c.image_height}, {"max_views", c.max_views}, {"init_depth", c.init_depth},
          {"init_scale", c.init_scale}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.layers = j.at("layers").get<int>();
  c.width = j.at("width").get<int>();
  c.heads = j.at("heads").get<int>();
  c.patch = j.at("patch").get<int>();
  c.mlp_ratio = j.at("mlp_ratio").get<int>();
  c.image_width = j.at("image_width").get<int>();
  c.image_height = j.at("image_height").get<int>();
  c.max_views = j.at("max_views").get<int>();
  c.init_depth = j.at("init_depth").get<double>();
  c.init_scale = j.at("init_scale").get<double>();
  return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const ParameterStore<float>& params) {
  std::filesystem::create_directories(dir);
  json tensors = json::array();
  std::size_t offset = 0;
  std::ofstream bin(dir / "params.bin", std::ios::binary);
  if (!bin) throw DataError("cannot write " + (dir / "params.bin").string());
  for (const auto& p : params.all()) {
    const auto count = static_cast<std::size_t>(p.value.size());
    tensors.push_back({{"name", p.name}, {"shape", {p.value.rows(), p.value.cols()}}, {"offset", offset}});
    bin.write(reinterpret_cast<const char*>(p.value.data()), static_cast<std::streamsize>(count * sizeof(float)));
    offset += count * sizeof(float);
  }
  if (!bin) throw DataError("failed writing " + (dir / "params.bin").string());

  const json manifest = {{"format", "gsrecon-checkpoint"},
                         {"version", 1},
                         {"dtype", "float32"},
                         {"config", config_to_json(params.config())},
                         {"tensors", std::move(tensors)},
                         {"bytes", offset}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw DataError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << "\n";
}

ParameterStore<float> load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw DataError("no checkpoint manifest in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError((dir / "manifest.json").string() + ": " + e.what());
  }

  try {
    if (manifest.at("dtype").get<std::string>() != "float32")
      throw DataError("unsupported checkpoint dtype " + manifest.at("dtype").dump());
    ParameterStore<float> params(config_from_json(manifest.at("config")));

    std::ifstream bin(dir / "params.bin", std::ios::binary);
    if (!bin) throw DataError("cannot open " + (dir / "params.bin").string());
    std::vector<char> blob((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
    if (blob.size() != manifest.at("bytes").get<std::size_t>())
      throw DataError("params.bin is " + std::to_string(blob.size()) + " bytes, manifest says " +
                      manifest.at("bytes").dump());

    const auto& tensors = manifest.at("tensors");
    if (tensors.size() != params.all().size())
      throw DataError("checkpoint has " + std::to_string(tensors.size()) + " tensors, model expects " +
                      std::to_string(params.all().size()));
    for (const auto& t : tensors) {
      auto& p = params[t.at("name").get<std::string>()];
      const auto rows = t.at("shape").at(0).get<Eigen::Index>();
      const auto cols = t.at("shape").at(1).get<Eigen::Index>();
      if (rows != p.value.rows() || cols != p.value.cols())
        throw DataError("tensor '" + p.name + "' has shape " + t.at("shape").dump() + ", expected [" +
                        std::to_string(p.value.rows()) + "," + std::to_string(p.value.cols()) + "]");
      const auto off = t.at("offset").get<std::size_t>();
      const std::size_t bytes = static_cast<std::size_t>(p.value.size()) * sizeof(float);
      if (off + bytes > blob.size()) throw DataError("tensor '" + p.name + "' runs past the end of params.bin");
      std::memcpy(p.value.data(), blob.data() + off, bytes);
    }
    return params;
  } catch (const json::exception& e) {
    throw DataError((dir / "manifest.json").string() + ": " + e.what());
  }
}

}  // namespace gsr
