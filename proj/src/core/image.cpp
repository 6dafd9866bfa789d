#include "core/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "core/error.hpp"

namespace spi {

Image Image::from_grid(Grid grid) {
  require(grid.size() == grid.rows * grid.cols, ErrorCode::Dimension,
          "image buffer does not match its dimensions");
  for (double v : grid.values) {
    require(std::isfinite(v) && v >= 0.0 && v <= 1.0, ErrorCode::Format,
            "image pixel outside [0,1]: " + std::to_string(v));
  }
  return Image(std::move(grid));
}

Image Image::clamped(const Grid& grid) {
  Grid out = grid;
  for (double& v : out.values) {
    require(std::isfinite(v), ErrorCode::Numeric, "non-finite pixel value");
    v = std::clamp(v, 0.0, 1.0);
  }
  return Image(std::move(out));
}

Image Image::quantized16(const Grid& grid) {
  Grid out = grid;
  for (double& v : out.values) {
    require(std::isfinite(v), ErrorCode::Numeric, "non-finite pixel value");
    v = std::round(std::clamp(v, 0.0, 1.0) * 65535.0) / 65535.0;
  }
  return Image(std::move(out));
}

}  // namespace spi
