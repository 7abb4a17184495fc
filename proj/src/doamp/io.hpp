#pragma once

#include <string>

#include "doamp/metrics.hpp"
#include "doamp/types.hpp"

namespace doamp {

/// Pixels in [0, 1], rows x cols x channels with the channel index fastest.
struct Image {
  ImageShape shape;
  Vec pixels;
};

/// Binary PGM (P5, one channel) or PPM (P6, three channels), maxval <= 255.
Image load_pnm(const std::string& path);
/// Values are clamped to [0, 1] and rounded to 8 bits.
void save_pnm(const std::string& path, const Image& image);

/// "OAMPMAT1" | u64 rows | u64 cols | rows*cols f64, row-major, little-endian.
Mat read_matrix(const std::string& path);
void write_matrix(const std::string& path, const Mat& a);

}  // namespace doamp
