#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "gsrecon/error.hpp"
#include "gsrecon/gsmap.hpp"

namespace gsr {

namespace {

// Zeroth-order real spherical harmonic; DC color = 0.5 + kSh0 * f_dc.
constexpr double kSh0 = 0.28209479177387814;
constexpr double kOpacityEps = 1e-7;

constexpr std::array<const char*, kGaussianChannels> kPropertyNames = {
    "x", "y", "z", "rot_0", "rot_1", "rot_2", "rot_3", "scale_0", "scale_1", "scale_2",
    "opacity", "f_dc_0", "f_dc_1", "f_dc_2"};

int property_slot(const std::string& name) {
  for (std::size_t k = 0; k < kPropertyNames.size(); ++k)
    if (name == kPropertyNames[k]) return static_cast<int>(k);
  return -1;
}

std::string read_header_line(std::istream& in, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": PLY header ended before end_header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

SplatRecord to_record(const GaussianPrimitive& g) {
  SplatRecord r;
  auto& v = r.values;
  const Quat q = g.rotation.normalized();
  v[0] = static_cast<float>(g.mu.x());
  v[1] = static_cast<float>(g.mu.y());
  v[2] = static_cast<float>(g.mu.z());
  v[3] = static_cast<float>(q.w);
  v[4] = static_cast<float>(q.x);
  v[5] = static_cast<float>(q.y);
  v[6] = static_cast<float>(q.z);
  for (int a = 0; a < 3; ++a) v[7 + a] = static_cast<float>(std::log(g.scale[a]));
  v[10] = static_cast<float>(logit(std::clamp(g.opacity, kOpacityEps, 1.0 - kOpacityEps)));
  for (int c = 0; c < 3; ++c) v[11 + c] = static_cast<float>((g.color[c] - 0.5) / kSh0);
  return r;
}

GaussianPrimitive from_record(const SplatRecord& r) {
  const auto& v = r.values;
  GaussianPrimitive g;
  g.mu = {v[0], v[1], v[2]};
  g.rotation = Quat{v[3], v[4], v[5], v[6]}.normalized();
  for (int a = 0; a < 3; ++a) g.scale[a] = std::exp(static_cast<double>(v[7 + a]));
  g.opacity = sigmoid(v[10]);
  for (int c = 0; c < 3; ++c) g.color[c] = std::clamp(0.5 + kSh0 * v[11 + c], 0.0, 1.0);
  return g;
}

void write_ply_records(const std::filesystem::path& path, std::span<const SplatRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "ply\nformat binary_little_endian 1.0\nelement vertex " << records.size() << "\n";
  for (const char* name : kPropertyNames) out << "property float " << name << "\n";
  out << "end_header\n";
  for (const auto& r : records)
    out.write(reinterpret_cast<const char*>(r.values.data()), sizeof(float) * kGaussianChannels);
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<SplatRecord> read_ply_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());

  if (read_header_line(in, path) != "ply") throw DataError(path.string() + ": missing 'ply' magic");
  std::size_t count = 0;
  bool have_format = false;
  bool have_vertex = false;
  std::vector<int> slots;
  for (;;) {
    const std::string line = read_header_line(in, path);
    if (line == "end_header") break;
    std::istringstream tokens(line);
    std::string keyword;
    tokens >> keyword;
    if (keyword == "comment" || keyword == "obj_info" || keyword.empty()) continue;
    if (keyword == "format") {
      std::string format;
      tokens >> format;
      if (format != "binary_little_endian")
        throw DataError(path.string() + ": unsupported PLY format '" + format + "'");
      have_format = true;
    } else if (keyword == "element") {
      std::string name;
      tokens >> name >> count;
      if (name != "vertex") throw DataError(path.string() + ": unexpected PLY element '" + name + "'");
      if (!tokens) throw DataError(path.string() + ": malformed vertex count");
      have_vertex = true;
    } else if (keyword == "property") {
      std::string type, name;
      tokens >> type >> name;
      if (type != "float" && type != "float32")
        throw DataError(path.string() + ": property '" + name + "' has unsupported type '" + type + "'");
      const int slot = property_slot(name);
      if (slot < 0) throw DataError(path.string() + ": unknown PLY property '" + name + "'");
      if (std::find(slots.begin(), slots.end(), slot) != slots.end())
        throw DataError(path.string() + ": duplicate PLY property '" + name + "'");
      slots.push_back(slot);
    } else {
      throw DataError(path.string() + ": unexpected PLY header line '" + line + "'");
    }
  }
  if (!have_format) throw DataError(path.string() + ": PLY header has no format line");
  if (!have_vertex) throw DataError(path.string() + ": PLY header has no vertex element");
  if (slots.size() != kGaussianChannels) {
    for (const char* name : kPropertyNames)
      if (std::find(slots.begin(), slots.end(), property_slot(name)) == slots.end())
        throw DataError(path.string() + ": missing PLY property '" + std::string(name) + "'");
  }

  std::vector<SplatRecord> records(count);
  std::array<float, kGaussianChannels> row{};
  for (std::size_t k = 0; k < count; ++k) {
    in.read(reinterpret_cast<char*>(row.data()), sizeof(float) * kGaussianChannels);
    if (!in)
      throw DataError(path.string() + ": truncated PLY payload at vertex " + std::to_string(k) + " of " +
                      std::to_string(count));
    for (std::size_t p = 0; p < slots.size(); ++p) records[k].values[static_cast<std::size_t>(slots[p])] = row[p];
  }
  return records;
}

void write_ply(const std::filesystem::path& path, std::span<const GaussianPrimitive> prims) {
  std::vector<SplatRecord> records;
  records.reserve(prims.size());
  for (const auto& g : prims) records.push_back(to_record(g));
  write_ply_records(path, records);
}

std::vector<GaussianPrimitive> read_ply(const std::filesystem::path& path) {
  const auto records = read_ply_records(path);
  std::vector<GaussianPrimitive> prims;
  prims.reserve(records.size());
  for (const auto& r : records) prims.push_back(from_record(r));
  return prims;
}

}  // namespace gsr
