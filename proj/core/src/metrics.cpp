#include "gsrecon/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "gsrecon/error.hpp"

namespace gsr {

namespace {

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b))
    throw DataError(std::string(what) + ": image shapes differ (" + std::to_string(a.width) + "x" +
                    std::to_string(a.height) + "x" + std::to_string(a.channels) + " vs " +
                    std::to_string(b.width) + "x" + std::to_string(b.height) + "x" +
                    std::to_string(b.channels) + ")");
}

std::array<double, kSsimWindow> gaussian_window() {
  std::array<double, kSsimWindow> w{};
  double total = 0.0;
  for (int k = 0; k < kSsimWindow; ++k) {
    const double x = k - kSsimWindow / 2;
    w[static_cast<std::size_t>(k)] = std::exp(-x * x / (2.0 * kSsimSigma * kSsimSigma));
    total += w[static_cast<std::size_t>(k)];
  }
  for (double& v : w) v /= total;
  return w;
}

// Separable "valid" filtering of one channel: output is (w - 10) x (h - 10).
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h,
                                 const std::array<double, kSsimWindow>& win) {
  const int ow = w - kSsimWindow + 1;
  const int oh = h - kSsimWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(ow) * h);
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < ow; ++i) {
      double s = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) s += win[static_cast<std::size_t>(k)] * src[static_cast<std::size_t>(j) * w + i + k];
      rows[static_cast<std::size_t>(j) * ow + i] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int j = 0; j < oh; ++j)
    for (int i = 0; i < ow; ++i) {
      double s = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) s += win[static_cast<std::size_t>(k)] * rows[static_cast<std::size_t>(j + k) * ow + i];
      out[static_cast<std::size_t>(j) * ow + i] = s;
    }
  return out;
}

}  // namespace

double mse(const Image& a, const Image& b) {
  require_same_shape(a, b, "mse");
  if (a.data.empty()) throw DataError("mse: empty images");
  double total = 0.0;
  for (std::size_t k = 0; k < a.data.size(); ++k) {
    const double d = a.data[k] - b.data[k];
    total += d * d;
  }
  return total / static_cast<double>(a.data.size());
}

double psnr(const Image& a, const Image& b) {
  const double e = mse(a, b);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / e);
}

double ssim(const Image& a, const Image& b) {
  require_same_shape(a, b, "ssim");
  if (a.width < kSsimWindow || a.height < kSsimWindow)
    throw DataError("ssim: images must be at least 11x11");
  const auto win = gaussian_window();
  const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
  const double c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);
  const std::size_t npix = static_cast<std::size_t>(a.width) * a.height;

  double total = 0.0;
  std::size_t windows = 0;
  for (int c = 0; c < a.channels; ++c) {
    std::vector<double> x(npix), y(npix), xx(npix), yy(npix), xy(npix);
    for (std::size_t p = 0; p < npix; ++p) {
      x[p] = a.data[p * static_cast<std::size_t>(a.channels) + static_cast<std::size_t>(c)];
      y[p] = b.data[p * static_cast<std::size_t>(b.channels) + static_cast<std::size_t>(c)];
      xx[p] = x[p] * x[p];
      yy[p] = y[p] * y[p];
      xy[p] = x[p] * y[p];
    }
    const auto mx = filter_valid(x, a.width, a.height, win);
    const auto my = filter_valid(y, a.width, a.height, win);
    const auto sxx = filter_valid(xx, a.width, a.height, win);
    const auto syy = filter_valid(yy, a.width, a.height, win);
    const auto sxy = filter_valid(xy, a.width, a.height, win);
    for (std::size_t p = 0; p < mx.size(); ++p) {
      const double vx = sxx[p] - mx[p] * mx[p];
      const double vy = syy[p] - my[p] * my[p];
      const double cov = sxy[p] - mx[p] * my[p];
      total += ((2 * mx[p] * my[p] + c1) * (2 * cov + c2)) /
               ((mx[p] * mx[p] + my[p] * my[p] + c1) * (vx + vy + c2));
    }
    windows += mx.size();
  }
  return total / static_cast<double>(windows);
}

}  // namespace gsr
