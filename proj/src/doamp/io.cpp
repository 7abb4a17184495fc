#include "doamp/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "doamp/errors.hpp"

namespace doamp {

namespace {

constexpr char kMatrixMagic[] = "OAMPMAT1";

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "short write to " + path);
}

// Header tokens are separated by whitespace; '#' starts a comment line.
class HeaderReader {
 public:
  HeaderReader(const std::vector<unsigned char>& bytes, std::string path)
      : bytes_(bytes), path_(std::move(path)) {}

  std::string token() {
    skip_space();
    std::string out;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) out.push_back(static_cast<char>(bytes_[pos_++]));
    if (out.empty()) fail(ErrorCode::kFormat, "truncated header in " + path_);
    return out;
  }

  std::size_t number() {
    const std::string t = token();
    std::size_t value = 0;
    for (char c : t) {
      if (c < '0' || c > '9') fail(ErrorCode::kFormat, "malformed header field '" + t + "' in " + path_);
      value = value * 10 + static_cast<std::size_t>(c - '0');
    }
    return value;
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      fail(ErrorCode::kFormat, "missing raster separator in " + path_);
    }
    return pos_ + 1;
  }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<unsigned char>& bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

Image load_pnm(const std::string& path) {
  const auto bytes = read_file(path);
  HeaderReader header(bytes, path);
  const std::string magic = header.token();
  std::size_t channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    fail(ErrorCode::kFormat, "unsupported image type '" + magic + "' in " + path);
  }
  Image img;
  img.shape.cols = header.number();
  img.shape.rows = header.number();
  img.shape.channels = channels;
  const std::size_t maxval = header.number();
  if (maxval == 0 || maxval > 255) {
    fail(ErrorCode::kFormat, "unsupported bit depth (maxval " + std::to_string(maxval) + ") in " + path);
  }
  if (img.shape.size() == 0) fail(ErrorCode::kFormat, "empty image in " + path);
  const std::size_t offset = header.raster_offset();
  if (bytes.size() < offset + img.shape.size()) fail(ErrorCode::kFormat, "truncated raster in " + path);
  img.pixels.resize(static_cast<Eigen::Index>(img.shape.size()));
  for (std::size_t i = 0; i < img.shape.size(); ++i) {
    img.pixels[static_cast<Eigen::Index>(i)] = bytes[offset + i] / static_cast<double>(maxval);
  }
  return img;
}

void save_pnm(const std::string& path, const Image& image) {
  const auto& s = image.shape;
  require(s.channels == 1 || s.channels == 3, ErrorCode::kInvalidDimension,
          "only 1- or 3-channel images can be saved");
  require(static_cast<std::size_t>(image.pixels.size()) == s.size() && s.size() > 0,
          ErrorCode::kInvalidDimension, "pixel count does not match the image shape");
  const std::string header = std::string(s.channels == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(s.cols) + " " + std::to_string(s.rows) + "\n255\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  for (Eigen::Index i = 0; i < image.pixels.size(); ++i) {
    const double v = std::clamp(image.pixels[i], 0.0, 1.0);
    bytes.push_back(static_cast<unsigned char>(std::lround(v * 255.0)));
  }
  write_file(path, bytes);
}

Mat read_matrix(const std::string& path) {
  const auto bytes = read_file(path);
  if (bytes.size() < 24 || std::memcmp(bytes.data(), kMatrixMagic, 8) != 0) {
    fail(ErrorCode::kFormat, "missing OAMPMAT1 header in " + path);
  }
  auto u64_at = [&](std::size_t off) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[off + i]) << (8 * i);
    return v;
  };
  const std::uint64_t rows = u64_at(8);
  const std::uint64_t cols = u64_at(16);
  if (rows == 0 || cols == 0 || (bytes.size() - 24) / 8 / cols < rows ||
      bytes.size() != 24 + 8 * rows * cols) {
    fail(ErrorCode::kFormat, "matrix payload does not match its dimensions in " + path);
  }
  Mat a(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::size_t off = 24;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c, off += 8) a(r, c) = std::bit_cast<double>(u64_at(off));
  }
  return a;
}

void write_matrix(const std::string& path, const Mat& a) {
  std::vector<unsigned char> bytes(kMatrixMagic, kMatrixMagic + 8);
  auto put = [&](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<unsigned char>(v >> (8 * i)));
  };
  put(static_cast<std::uint64_t>(a.rows()));
  put(static_cast<std::uint64_t>(a.cols()));
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) put(std::bit_cast<std::uint64_t>(a(r, c)));
  }
  write_file(path, bytes);
}

}  // namespace doamp
