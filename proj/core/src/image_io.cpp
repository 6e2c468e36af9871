#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <png.h>

#include "gsrecon/error.hpp"
#include "gsrecon/io.hpp"

namespace gsr {

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

png_uint_32 png_format(int channels) {
  switch (channels) {
    case 1: return PNG_FORMAT_GRAY;
    case 3: return PNG_FORMAT_RGB;
    case 4: return PNG_FORMAT_RGBA;
    default: throw DataError("PNG supports 1, 3 or 4 channels, got " + std::to_string(channels));
  }
}

}  // namespace

Image quantize_8bit(const Image& image) {
  Image out = image;
  for (double& v : out.data) v = to_byte(v) / 255.0;
  return out;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = png_format(image.channels);

  std::vector<std::uint8_t> bytes(image.data.size());
  std::transform(image.data.begin(), image.data.end(), bytes.begin(), to_byte);
  if (!png_image_write_to_file(&png, path.c_str(), 0, bytes.data(), 0, nullptr))
    throw DataError("cannot write PNG " + path.string() + ": " + png.message);
}

Image read_png(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str()))
    throw DataError("cannot read PNG " + path.string() + ": " + png.message);

  int channels = 3;
  if (png.format == PNG_FORMAT_GRAY || png.format == PNG_FORMAT_LINEAR_Y) {
    channels = 1;
    png.format = PNG_FORMAT_GRAY;
  } else if (png.format & PNG_FORMAT_FLAG_ALPHA) {
    channels = 4;
    png.format = PNG_FORMAT_RGBA;
  } else {
    png.format = PNG_FORMAT_RGB;
  }

  std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, bytes.data(), 0, nullptr)) {
    png_image_free(&png);
    throw DataError("cannot decode PNG " + path.string() + ": " + png.message);
  }
  Image image(static_cast<int>(png.width), static_cast<int>(png.height), channels);
  std::transform(bytes.begin(), bytes.end(), image.data.begin(),
                 [](std::uint8_t b) { return b / 255.0; });
  return image;
}

void write_pfm(const std::filesystem::path& path, const Grid<double>& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "Pf\n" << values.width() << " " << values.height() << "\n-1.0\n";
  std::vector<float> row(static_cast<std::size_t>(values.width()));
  for (int j = values.height() - 1; j >= 0; --j) {
    for (int i = 0; i < values.width(); ++i) row[static_cast<std::size_t>(i)] = static_cast<float>(values(i, j));
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw DataError("failed writing " + path.string());
}

Grid<double> read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string magic;
  int width = 0;
  int height = 0;
  double scale = 0.0;
  in >> magic >> width >> height >> scale;
  if (magic != "Pf") throw DataError(path.string() + ": expected single-channel PFM 'Pf', got '" + magic + "'");
  if (!in || width <= 0 || height <= 0) throw DataError(path.string() + ": malformed PFM header");
  if (scale >= 0) throw DataError(path.string() + ": big-endian PFM is not supported");
  in.get();  // single whitespace byte ends the header

  Grid<double> values(width, height);
  std::vector<float> row(static_cast<std::size_t>(width));
  for (int j = height - 1; j >= 0; --j) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!in) throw DataError(path.string() + ": truncated PFM payload");
    for (int i = 0; i < width; ++i) values(i, j) = row[static_cast<std::size_t>(i)];
  }
  return values;
}

}  // namespace gsr
