#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>
#include <vector>

#include "core/error.hpp"
#include "core/image.hpp"

namespace spi {
namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------- PGM

class PgmHeaderReader {
 public:
  PgmHeaderReader(const std::vector<unsigned char>& bytes, const std::string& name)
      : bytes_(bytes), name_(name) {}

  // Reads one whitespace-delimited unsigned integer, skipping '#' comments.
  unsigned long next_number() {
    skip_space_and_comments();
    unsigned long value = 0;
    bool any = false;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      require(value <= 0xffffffffUL, ErrorCode::Format, name_ + ": header value too large");
      any = true;
      ++pos_;
    }
    require(any, ErrorCode::Format, name_ + ": malformed PGM header");
    return value;
  }

  // Binary rasters start after exactly one whitespace byte.
  std::size_t raster_offset() {
    require(pos_ < bytes_.size() && std::isspace(bytes_[pos_]), ErrorCode::Format,
            name_ + ": missing separator before raster");
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<unsigned char>& bytes_;
  std::string name_;
  std::size_t pos_ = 2;
};

Image load_pgm(const std::vector<unsigned char>& bytes, const std::string& name) {
  require(bytes.size() >= 2 && bytes[0] == 'P', ErrorCode::Format,
          name + ": not a PNM file");
  const char kind = static_cast<char>(bytes[1]);
  if (kind == '3' || kind == '6') fail(ErrorCode::Format, name + ": color PPM images are not supported");
  require(kind == '2' || kind == '5', ErrorCode::Format, name + ": unsupported PNM variant P" + std::string(1, kind));

  PgmHeaderReader header(bytes, name);
  const std::size_t width = header.next_number();
  const std::size_t height = header.next_number();
  const unsigned long maxval = header.next_number();
  require(width > 0 && height > 0, ErrorCode::Format, name + ": empty image");
  require(maxval >= 1 && maxval <= 65535, ErrorCode::Format, name + ": maxval out of range");

  Grid grid(height, width);
  const double maxv = static_cast<double>(maxval);
  if (kind == '2') {
    for (double& v : grid.values) {
      const unsigned long sample = header.next_number();
      require(sample <= maxval, ErrorCode::Format, name + ": sample exceeds maxval");
      v = static_cast<double>(sample) / maxv;
    }
  } else {
    const std::size_t offset = header.raster_offset();
    const std::size_t bytes_per = maxval < 256 ? 1 : 2;
    require(bytes.size() >= offset + grid.size() * bytes_per, ErrorCode::Format,
            name + ": truncated raster");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      unsigned long sample = bytes[offset + i * bytes_per];
      if (bytes_per == 2) sample = (sample << 8) | bytes[offset + i * 2 + 1];
      require(sample <= maxval, ErrorCode::Format, name + ": sample exceeds maxval");
      grid.values[i] = static_cast<double>(sample) / maxv;
    }
  }
  return Image::from_grid(std::move(grid));
}

std::uint16_t to_u16(double v) {
  return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
}

void save_pgm(const Image& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path.string());
  out << "P5\n" << image.width() << ' ' << image.height() << "\n65535\n";
  std::vector<unsigned char> raster;
  raster.reserve(image.pixel_count() * 2);
  for (double v : image.pixels()) {
    const std::uint16_t s = to_u16(v);
    raster.push_back(static_cast<unsigned char>(s >> 8));
    raster.push_back(static_cast<unsigned char>(s & 0xff));
  }
  out.write(reinterpret_cast<const char*>(raster.data()),
            static_cast<std::streamsize>(raster.size()));
  require(static_cast<bool>(out), ErrorCode::Io, "write failed for " + path.string());
}

// ---------------------------------------------------------------- PNG
//
// libpng reports errors by longjmp. The setjmp frames below own no objects
// whose lifetime starts after setjmp, and exceptions are raised only after
// libpng has returned.

struct PngRaster {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int depth = 0;
  int color = 0;
  std::vector<unsigned char> bytes;
  std::vector<png_bytep> rows;
  char error[256] = {};
};

void png_error_handler(png_structp png, png_const_charp message) {
  auto* raster = static_cast<PngRaster*>(png_get_error_ptr(png));
  std::snprintf(raster->error, sizeof(raster->error), "%s", message);
  std::longjmp(png_jmpbuf(png), 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

// Returns false with raster.error set on failure.
bool read_png_raster(std::FILE* file, PngRaster& raster) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &raster,
                                           png_error_handler, png_warning_handler);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, file);
  png_read_info(png, info);
  raster.width = png_get_image_width(png, info);
  raster.height = png_get_image_height(png, info);
  raster.color = png_get_color_type(png, info);
  raster.depth = png_get_bit_depth(png, info);
  if (raster.color != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    return true;  // caller rejects
  }
  if (raster.depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  raster.bytes.resize(row_bytes * raster.height);
  raster.rows.resize(raster.height);
  for (std::size_t r = 0; r < raster.height; ++r) {
    raster.rows[r] = raster.bytes.data() + r * row_bytes;
  }
  png_read_image(png, raster.rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool write_png_raster(std::FILE* file, PngRaster& raster) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &raster,
                                            png_error_handler, png_warning_handler);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, file);
  png_set_IHDR(png, info, raster.width, raster.height, 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, raster.rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Image load_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  require(file != nullptr, ErrorCode::Io, "cannot open " + path.string());
  PngRaster raster;
  if (!read_png_raster(file.get(), raster)) {
    fail(ErrorCode::Format, path.string() + ": png: " + raster.error);
  }
  require(raster.color == PNG_COLOR_TYPE_GRAY, ErrorCode::Format,
          path.string() + ": only single-channel grayscale PNG is supported");

  const bool wide = raster.depth == 16;
  const double maxv = wide ? 65535.0 : 255.0;
  Grid grid(raster.height, raster.width);
  for (std::size_t r = 0; r < raster.height; ++r) {
    const png_bytep row = raster.rows[r];
    for (std::size_t c = 0; c < raster.width; ++c) {
      const unsigned sample = wide ? (row[2 * c] << 8) | row[2 * c + 1] : row[c];
      grid(r, c) = sample / maxv;
    }
  }
  return Image::from_grid(std::move(grid));
}

void save_png(const Image& image, const std::filesystem::path& path) {
  PngRaster raster;
  raster.width = static_cast<png_uint_32>(image.width());
  raster.height = static_cast<png_uint_32>(image.height());
  raster.bytes.resize(image.pixel_count() * 2);
  std::size_t k = 0;
  for (double v : image.pixels()) {
    const std::uint16_t s = to_u16(v);
    raster.bytes[k++] = static_cast<unsigned char>(s >> 8);
    raster.bytes[k++] = static_cast<unsigned char>(s & 0xff);
  }
  raster.rows.resize(raster.height);
  for (std::size_t r = 0; r < raster.height; ++r) {
    raster.rows[r] = raster.bytes.data() + r * image.width() * 2;
  }
  FilePtr file(std::fopen(path.c_str(), "wb"));
  require(file != nullptr, ErrorCode::Io, "cannot write " + path.string());
  if (!write_png_raster(file.get(), raster)) {
    fail(ErrorCode::Io, path.string() + ": png: " + raster.error);
  }
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  require(std::filesystem::exists(path), ErrorCode::Io, "no such file: " + path.string());
  if (lower_extension(path) == ".png") return load_png(path);
  const auto bytes = read_all(path);
  // Sniff the PNG signature for files with an unexpected extension.
  if (bytes.size() >= 8 && bytes[0] == 0x89 && bytes[1] == 'P' && bytes[2] == 'N') {
    return load_png(path);
  }
  return load_pgm(bytes, path.string());
}

void save_image(const Image& image, const std::filesystem::path& path) {
  require(image.pixel_count() > 0, ErrorCode::InvalidArgument, "cannot save an empty image");
  if (lower_extension(path) == ".png") {
    save_png(image, path);
  } else {
    save_pgm(image, path);
  }
}

void save_grid(const Grid& grid, const std::filesystem::path& path) {
  save_image(Image::clamped(grid), path);
}

}  // namespace spi
