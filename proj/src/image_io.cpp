#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

#include "cdce/errors.hpp"
#include "cdce/image.hpp"

namespace cdce {

namespace {

Image load_pgm(std::ifstream& in, const std::string& path) {
  std::string magic;
  in >> magic;
  if (magic != "P5") throw ParseError(path + ": not a P5 PGM");

  auto next_token = [&in, &path]() -> long {
    // Skips whitespace and '#' comment lines between header fields.
    while (true) {
      int c = in.peek();
      if (c == EOF) throw ParseError(path + ": truncated PGM header");
      if (std::isspace(c)) {
        in.get();
      } else if (c == '#') {
        std::string line;
        std::getline(in, line);
      } else {
        break;
      }
    }
    long v = -1;
    in >> v;
    if (!in || v < 0) throw ParseError(path + ": bad PGM header field");
    return v;
  };

  const long width = next_token();
  const long height = next_token();
  const long maxval = next_token();
  if (width < 1 || height < 1) throw ParseError(path + ": empty PGM");
  if (maxval != 255)
    throw UnsupportedFormat(path + ": only maxval 255 PGM supported");
  in.get();  // single whitespace after maxval

  std::vector<unsigned char> buf(static_cast<size_t>(width) * height);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<size_t>(in.gcount()) != buf.size())
    throw ParseError(path + ": truncated PGM payload");

  Image img(height, width);
  for (long r = 0; r < height; ++r)
    for (long c = 0; c < width; ++c)
      img(r, c) = static_cast<double>(buf[static_cast<size_t>(r) * width + c]);
  return img;
}

struct PngReadCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  FILE* fp = nullptr;
  ~PngReadCloser() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

Image load_png_gray(const std::string& path) {
  PngReadCloser ctx;
  ctx.fp = std::fopen(path.c_str(), "rb");
  if (!ctx.fp) throw ParseError(path + ": cannot open");

  unsigned char sig[8];
  if (std::fread(sig, 1, 8, ctx.fp) != 8 || png_sig_cmp(sig, 0, 8))
    throw ParseError(path + ": not a PNG");

  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!ctx.png) throw ParseError(path + ": libpng init failed");
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.info) throw ParseError(path + ": libpng init failed");
  if (setjmp(png_jmpbuf(ctx.png))) throw ParseError(path + ": PNG decode error");

  png_init_io(ctx.png, ctx.fp);
  png_set_sig_bytes(ctx.png, 8);
  png_read_info(ctx.png, ctx.info);

  const png_uint_32 width = png_get_image_width(ctx.png, ctx.info);
  const png_uint_32 height = png_get_image_height(ctx.png, ctx.info);
  const int color = png_get_color_type(ctx.png, ctx.info);
  const int depth = png_get_bit_depth(ctx.png, ctx.info);
  if (color != PNG_COLOR_TYPE_GRAY)
    throw UnsupportedFormat(path + ": only grayscale PNG supported");
  if (depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
  if (depth == 16) throw UnsupportedFormat(path + ": only 8-bit PNG supported");
  png_read_update_info(ctx.png, ctx.info);

  std::vector<unsigned char> data(static_cast<size_t>(width) * height);
  std::vector<png_bytep> row_ptrs(height);
  for (png_uint_32 r = 0; r < height; ++r)
    row_ptrs[r] = data.data() + static_cast<size_t>(r) * width;
  png_read_image(ctx.png, row_ptrs.data());
  png_read_end(ctx.png, nullptr);

  Image img(height, width);
  for (png_uint_32 r = 0; r < height; ++r)
    for (png_uint_32 c = 0; c < width; ++c)
      img(r, c) = static_cast<double>(data[static_cast<size_t>(r) * width + c]);
  return img;
}

bool has_suffix(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() &&
         std::equal(suf.rbegin(), suf.rend(), s.rbegin(),
                    [](char a, char b) { return std::tolower(a) == std::tolower(b); });
}

std::vector<unsigned char> to_bytes(const Image& img) {
  std::vector<unsigned char> buf(static_cast<size_t>(img.size()));
  for (Eigen::Index r = 0; r < img.rows(); ++r)
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      double v = std::round(img(r, c));
      if (v < 0.0) v = 0.0;
      if (v > 255.0) v = 255.0;
      buf[static_cast<size_t>(r) * img.cols() + c] = static_cast<unsigned char>(v);
    }
  return buf;
}

}  // namespace

Image load_image(const std::string& path) {
  if (has_suffix(path, ".png")) return load_png_gray(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open");
  return load_pgm(in, path);
}

void save_pgm(const std::string& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out << "P5\n" << img.cols() << " " << img.rows() << "\n255\n";
  const auto buf = to_bytes(img);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw ParseError(path + ": write failed");
}

void save_png(const std::string& path, const Image& img) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw ParseError(path + ": cannot open for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    std::fclose(fp);
    throw ParseError(path + ": libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw ParseError(path + ": PNG encode error");
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.cols()),
               static_cast<png_uint_32>(img.rows()), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const auto buf = to_bytes(img);
  for (Eigen::Index r = 0; r < img.rows(); ++r)
    png_write_row(png, const_cast<png_bytep>(buf.data() + static_cast<size_t>(r) * img.cols()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace cdce
