#pragma once

#include <filesystem>

#include "core/grid.hpp"

namespace spi {

// Grayscale raster with every pixel finite and in [0,1]. Immutable once built.
class Image {
 public:
  Image() = default;

  // Validates range and finiteness; throws Error(Format) otherwise.
  static Image from_grid(Grid grid);
  // Clamps each value to [0,1]; non-finite values are rejected.
  static Image clamped(const Grid& grid);
  // Clamps, then rounds to the 16-bit grid k/65535 used by saved files.
  static Image quantized16(const Grid& grid);

  std::size_t height() const { return grid_.rows; }
  std::size_t width() const { return grid_.cols; }
  std::size_t pixel_count() const { return grid_.size(); }
  std::span<const double> pixels() const { return grid_.span(); }
  const Grid& grid() const { return grid_; }

  bool operator==(const Image&) const = default;

 private:
  explicit Image(Grid grid) : grid_(std::move(grid)) {}
  Grid grid_;
};

// PGM (P2/P5, any maxval up to 65535) or grayscale PNG (8/16-bit).
Image load_image(const std::filesystem::path& path);

// Writes 16-bit samples. ".png" selects PNG, anything else PGM P5.
void save_image(const Image& image, const std::filesystem::path& path);

// Same as save_image but clamps an arbitrary grid first.
void save_grid(const Grid& grid, const std::filesystem::path& path);

}  // namespace spi
