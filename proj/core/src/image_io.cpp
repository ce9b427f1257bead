#include "stda/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace stda {

namespace {

uint8_t to_byte(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<uint8_t>(std::lround(c * 255.0f));
}

}  // namespace

float quantize8(float v) { return static_cast<float>(to_byte(v)) / 255.0f; }

Tensor<float> load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw std::runtime_error("image not found: " + path.string());
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw std::runtime_error("malformed image " + path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&img);
    throw std::runtime_error("malformed image " + path.string() + ": " + img.message);
  }
  const int64_t h = img.height, w = img.width;
  std::vector<float> data(static_cast<size_t>(3 * h * w));
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      for (int64_t c = 0; c < 3; ++c) {
        data[(c * h + y) * w + x] = static_cast<float>(buf[(y * w + x) * 3 + c]) / 255.0f;
      }
    }
  }
  return Tensor<float>::from_data({3, h, w}, std::move(data));
}

void save_image(const std::filesystem::path& path, const Tensor<float>& image) {
  int64_t c = 0, h = 0, w = 0;
  if (image.ndim() == 2) {
    c = 1, h = image.dim(0), w = image.dim(1);
  } else if (image.ndim() == 3 && (image.dim(0) == 1 || image.dim(0) == 3)) {
    c = image.dim(0), h = image.dim(1), w = image.dim(2);
  } else {
    throw ShapeError("save_image expects [3,H,W], [1,H,W] or [H,W], got " + shape_str(image.shape()));
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto src = image.data();
  std::vector<uint8_t> buf(static_cast<size_t>(c * h * w));
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      for (int64_t ch = 0; ch < c; ++ch) buf[(y * w + x) * c + ch] = to_byte(src[(ch * h + y) * w + x]);
    }
  }
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = c == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw std::runtime_error("cannot write image " + path.string() + ": " + img.message);
  }
}

std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace stda
