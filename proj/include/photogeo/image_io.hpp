#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace photogeo {

/// Planar float image, channel-major (C, H, W), values nominally in [0, 1].
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  double& at(int c, int y, int x) { return data[static_cast<std::size_t>((c * height + y) * width + x)]; }
  double at(int c, int y, int x) const { return data[static_cast<std::size_t>((c * height + y) * width + x)]; }
};

/// Writes 1 (gray) or 3 (RGB) channels as PNG, clamping to [0, 1].
void write_png(const std::filesystem::path& path, const Image& image, int bit_depth = 8);

/// Reads any PNG as RGB doubles in [0, 1]; alpha is dropped and gray is
/// replicated. Throws std::runtime_error on malformed input.
Image read_png(const std::filesystem::path& path);

/// Largest centered square, bilinearly resized to size x size.
Image center_square_resize(const Image& image, int size);

}  // namespace photogeo
