#pragma once

#include "core/grid.hpp"

namespace spi {

// Orthonormal type-II 2-D DCT and its inverse (type III).
Grid dct2_forward(const Grid& image);
Grid dct2_inverse(const Grid& coeffs);

}  // namespace spi
