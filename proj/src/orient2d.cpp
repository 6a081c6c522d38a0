#include "strandrecon/orient2d.hpp"

#include "strandrecon/errors.hpp"
#include "strandrecon/geometry.hpp"
#include "strandrecon/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace strandrecon {

namespace {

constexpr double kConfidenceEps = 1e-3;

// Edge-replicated copy of the image with a border of `pad` pixels, plus
// summed-area tables of v and v^2 used to skip flat windows.
struct PaddedImage {
  int pad = 0;
  int w = 0, h = 0;
  std::vector<double> v;
  std::vector<double> sum, sum2;  // (w+1) x (h+1)

  PaddedImage(const Raster& img, int pad_) : pad(pad_), w(img.width + 2 * pad_), h(img.height + 2 * pad_) {
    v.resize(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const int sx = std::clamp(x - pad, 0, img.width - 1);
        const int sy = std::clamp(y - pad, 0, img.height - 1);
        v[static_cast<std::size_t>(y) * w + x] = img.at(sx, sy);
      }
    sum.assign(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
    sum2.assign(sum.size(), 0.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double a = at(x, y);
        const auto i = static_cast<std::size_t>(y + 1) * (w + 1) + (x + 1);
        sum[i] = a + sum[i - 1] + sum[i - (w + 1)] - sum[i - (w + 1) - 1];
        sum2[i] = a * a + sum2[i - 1] + sum2[i - (w + 1)] - sum2[i - (w + 1) - 1];
      }
  }

  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }

  // Variance over the kernel window centred on image pixel (x, y).
  double window_variance(int x, int y, int ks) const {
    const int x0 = x, y0 = y, x1 = x + ks, y1 = y + ks;
    auto box = [&](const std::vector<double>& s) {
      auto idx = [&](int xx, int yy) { return static_cast<std::size_t>(yy) * (w + 1) + xx; };
      return s[idx(x1, y1)] - s[idx(x0, y1)] - s[idx(x1, y0)] + s[idx(x0, y0)];
    };
    const double n = static_cast<double>(ks) * ks;
    const double m = box(sum) / n;
    return std::max(0.0, box(sum2) / n - m * m);
  }

  double correlate(const std::vector<double>& kernel, int ks, int x, int y) const {
    double acc = 0.0;
    for (int j = 0; j < ks; ++j) {
      const double* row = &v[static_cast<std::size_t>(y + j) * w + x];
      const double* kr = &kernel[static_cast<std::size_t>(j) * ks];
      for (int i = 0; i < ks; ++i) acc += kr[i] * row[i];
    }
    return acc;
  }
};

}  // namespace

double GaborBank::line_angle(int k) const { return angles[static_cast<std::size_t>(k)] + kPi / 2.0; }

GaborBank build_bank(const GaborParams& params) {
  if (params.kernel_size < 5 || params.kernel_size % 2 == 0)
    throw ConfigError("gabor.kernel_size must be odd and >= 5");
  if (params.num_orientations < 4) throw ConfigError("gabor.num_orientations must be >= 4");
  if (!(params.wavelength > 0.0) || !(params.sigma > 0.0))
    throw ConfigError("gabor.wavelength and gabor.sigma must be positive");

  GaborBank bank;
  bank.params = params;
  const int ks = params.kernel_size;
  const int half = ks / 2;
  for (int k = 0; k < params.num_orientations; ++k) {
    const double theta = kPi * k / params.num_orientations;
    const double c = std::cos(theta), s = std::sin(theta);
    std::vector<double> kernel(static_cast<std::size_t>(ks) * ks);
    double mean = 0.0;
    for (int y = -half; y <= half; ++y)
      for (int x = -half; x <= half; ++x) {
        const double xr = x * c + y * s;
        const double yr = -x * s + y * c;
        const double g = std::exp(-(xr * xr + yr * yr) / (2.0 * params.sigma * params.sigma)) *
                         std::cos(2.0 * kPi * xr / params.wavelength);
        kernel[static_cast<std::size_t>(y + half) * ks + (x + half)] = g;
        mean += g;
      }
    mean /= static_cast<double>(kernel.size());
    double l1 = 0.0;
    for (double& g : kernel) {
      g -= mean;
      l1 += std::abs(g);
    }
    for (double& g : kernel) g /= l1;
    bank.angles.push_back(theta);
    bank.kernels.push_back(std::move(kernel));
  }
  return bank;
}

double filter_response(const Raster& image, const GaborBank& bank, int k, int x, int y) {
  const int ks = bank.params.kernel_size;
  const int half = ks / 2;
  double acc = 0.0;
  const auto& kernel = bank.kernels[static_cast<std::size_t>(k)];
  for (int j = 0; j < ks; ++j)
    for (int i = 0; i < ks; ++i) {
      const int sx = std::clamp(x + i - half, 0, image.width - 1);
      const int sy = std::clamp(y + j - half, 0, image.height - 1);
      acc += kernel[static_cast<std::size_t>(j) * ks + i] * image.at(sx, sy);
    }
  return acc;
}

OrientationField2D extract(const Raster& image, const GaborBank& bank, int workers) {
  const int ks = bank.params.kernel_size;
  const int n = bank.size();
  const PaddedImage padded(image, ks / 2);

  OrientationField2D out;
  out.orientation = Raster(image.width, image.height, 2, 0.0f);
  out.confidence = Raster(image.width, image.height, 1, 0.0f);
  std::vector<double> raw(static_cast<std::size_t>(image.width) * image.height, 0.0);

  parallel_for(static_cast<std::size_t>(image.height), workers, [&](std::size_t y0, std::size_t y1) {
    std::vector<double> resp(static_cast<std::size_t>(n));
    for (int y = static_cast<int>(y0); y < static_cast<int>(y1); ++y)
      for (int x = 0; x < image.width; ++x) {
        int best = 0;
        double best_abs = 0.0, sum_abs = 0.0;
        if (padded.window_variance(x, y, ks) > 1e-12) {
          for (int k = 0; k < n; ++k) {
            const double a = std::abs(padded.correlate(bank.kernels[static_cast<std::size_t>(k)], ks, x, y));
            sum_abs += a;
            if (a > best_abs) {
              best_abs = a;
              best = k;
            }
          }
        }
        const double mean_abs = sum_abs / n;
        raw[static_cast<std::size_t>(y) * image.width + x] = (best_abs - mean_abs) / (best_abs + kConfidenceEps);
        const double phi = bank.line_angle(best);
        const Vec2 o = canonical_half_plane(Vec2(std::cos(phi), std::sin(phi)));
        out.orientation.at(x, y, 0) = static_cast<float>(o.x());
        out.orientation.at(x, y, 1) = static_cast<float>(o.y());
      }
  });

  const double peak = *std::max_element(raw.begin(), raw.end());
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const double c = peak > 0.0 ? raw[static_cast<std::size_t>(y) * image.width + x] / peak : 0.0;
      out.confidence.at(x, y) = static_cast<float>(std::clamp(c, 0.0, 1.0));
    }
  return out;
}

}  // namespace strandrecon
