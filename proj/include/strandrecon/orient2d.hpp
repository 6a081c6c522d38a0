#pragma once

#include "strandrecon/raster.hpp"

#include <vector>

namespace strandrecon {

struct GaborParams {
  int num_orientations = 32;
  double wavelength = 4.0;  // px
  double sigma = 2.0;       // px, envelope
  int kernel_size = 13;     // px, odd
};

/// Real even-symmetric Gabor kernels at angles k*pi/N. The kernel at angle
/// theta oscillates along (cos theta, sin theta), so it responds to lines
/// running along theta + pi/2. Kernels are zero-mean and L1-normalised.
struct GaborBank {
  GaborParams params;
  std::vector<double> angles;
  std::vector<std::vector<double>> kernels;  // kernel_size^2, row-major

  int size() const { return static_cast<int>(kernels.size()); }
  // Unit line direction (mod pi) associated with kernel k.
  double line_angle(int k) const;
};

struct OrientationField2D {
  Raster orientation;  // 2 channels, canonical half-plane unit vectors
  Raster confidence;   // [0, 1]
};

// Throws ConfigError unless kernel_size is odd and >= 5 and
// num_orientations >= 4.
GaborBank build_bank(const GaborParams& params);

// Correlation of kernel k with `image` at (x, y), edge-replicated.
double filter_response(const Raster& image, const GaborBank& bank, int k, int x, int y);

/// Per pixel: orientation from the kernel with the largest |response|,
/// confidence = (max - mean) / (max + eps) over |responses|, then
/// normalised by the image maximum.
OrientationField2D extract(const Raster& image, const GaborBank& bank, int workers = 1);

}  // namespace strandrecon
