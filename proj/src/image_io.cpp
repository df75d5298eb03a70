#include "photogeo/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace photogeo {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
  (void)png;
  throw std::runtime_error(std::string("png: ") + msg);
}

void png_warn(png_structp, png_const_charp) {}

}  // namespace

void write_png(const std::filesystem::path& path, const Image& image, int bit_depth) {
  if (image.channels != 1 && image.channels != 3) throw std::invalid_argument("write_png: 1 or 3 channels");
  if (bit_depth != 8 && bit_depth != 16) throw std::invalid_argument("write_png: bit depth 8 or 16");
  File file(std::fopen(path.c_str(), "wb"));
  if (!file) throw std::runtime_error("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};

  const int W = image.width, H = image.height, C = image.channels;
  const int bytes = bit_depth / 8;
  const double scale = bit_depth == 8 ? 255.0 : 65535.0;
  std::vector<unsigned char> rows(static_cast<std::size_t>(H) * W * C * bytes);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      for (int c = 0; c < C; ++c) {
        const auto q = static_cast<unsigned>(std::lround(std::clamp(image.at(c, y, x), 0.0, 1.0) * scale));
        const std::size_t o = ((static_cast<std::size_t>(y) * W + x) * C + c) * bytes;
        if (bytes == 1) {
          rows[o] = static_cast<unsigned char>(q);
        } else {
          rows[o] = static_cast<unsigned char>(q >> 8);
          rows[o + 1] = static_cast<unsigned char>(q & 0xff);
        }
      }
    }
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(W), static_cast<png_uint_32>(H), bit_depth,
               C == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < H; ++y) {
    png_write_row(png, rows.data() + static_cast<std::size_t>(y) * W * C * bytes);
  }
  png_write_end(png, nullptr);
}

Image read_png(const std::filesystem::path& path) {
  File file(std::fopen(path.c_str(), "rb"));
  if (!file) throw std::runtime_error("cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw std::runtime_error(path.string() + " is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int W = static_cast<int>(png_get_image_width(png, info));
  const int H = static_cast<int>(png_get_image_height(png, info));
  const int out_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<unsigned char> buf(rowbytes * static_cast<std::size_t>(H));
  std::vector<png_bytep> rows(static_cast<std::size_t>(H));
  for (int y = 0; y < H; ++y) rows[static_cast<std::size_t>(y)] = buf.data() + rowbytes * static_cast<std::size_t>(y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);

  Image img;
  img.channels = 3;
  img.height = H;
  img.width = W;
  img.data.resize(static_cast<std::size_t>(3 * H * W));
  const double scale = out_depth == 16 ? 65535.0 : 255.0;
  for (int y = 0; y < H; ++y) {
    const unsigned char* row = rows[static_cast<std::size_t>(y)];
    for (int x = 0; x < W; ++x) {
      for (int c = 0; c < 3; ++c) {
        const std::size_t i = static_cast<std::size_t>(x * 3 + c);
        const unsigned v = out_depth == 16 ? (unsigned(row[2 * i]) << 8) | row[2 * i + 1] : row[i];
        img.at(c, y, x) = double(v) / scale;
      }
    }
  }
  return img;
}

Image center_square_resize(const Image& image, int size) {
  if (size < 1 || image.width < 1 || image.height < 1) throw std::invalid_argument("center_square_resize: empty");
  const int side = std::min(image.width, image.height);
  const double ox = (image.width - side) / 2.0, oy = (image.height - side) / 2.0;
  const double step = double(side) / double(size);
  Image out;
  out.channels = image.channels;
  out.height = out.width = size;
  out.data.resize(static_cast<std::size_t>(image.channels * size * size));
  for (int y = 0; y < size; ++y) {
    const double sy = std::clamp(oy + (y + 0.5) * step - 0.5, 0.0, double(image.height - 1));
    const int y0 = static_cast<int>(sy), y1 = std::min(y0 + 1, image.height - 1);
    const double fy = sy - y0;
    for (int x = 0; x < size; ++x) {
      const double sx = std::clamp(ox + (x + 0.5) * step - 0.5, 0.0, double(image.width - 1));
      const int x0 = static_cast<int>(sx), x1 = std::min(x0 + 1, image.width - 1);
      const double fx = sx - x0;
      for (int c = 0; c < image.channels; ++c) {
        out.at(c, y, x) = (1 - fy) * ((1 - fx) * image.at(c, y0, x0) + fx * image.at(c, y0, x1)) +
                          fy * ((1 - fx) * image.at(c, y1, x0) + fx * image.at(c, y1, x1));
      }
    }
  }
  return out;
}

}  // namespace photogeo
