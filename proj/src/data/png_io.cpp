#include "flowlhd/data/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "flowlhd/data/tensor_io.hpp"
#include "flowlhd/errors.hpp"

namespace flowlhd::data {

namespace fs = std::filesystem;

DecodedPng read_png(const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw DataError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  DecodedPng out;
  out.height = image.height;
  out.width = image.width;
  out.rgb.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.rgb.data(), 0, nullptr)) {
    png_image_free(&image);
    throw DataError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  return out;
}

void write_png(const fs::path& path, std::size_t height, std::size_t width, std::size_t channels,
               std::span<const std::uint8_t> hwc) {
  if (channels != 1 && channels != 3) throw DataError("PNG output supports 1 or 3 channels");
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (!png_image_write_to_file(&image, path.c_str(), 0, hwc.data(), 0, nullptr)) {
    throw DataError("cannot write PNG " + path.string() + ": " + image.message);
  }
}

namespace {

std::vector<std::uint8_t> resize_bilinear(const DecodedPng& img, std::size_t oh, std::size_t ow) {
  std::vector<std::uint8_t> out(oh * ow * 3);
  const double sy = static_cast<double>(img.height) / static_cast<double>(oh);
  const double sx = static_cast<double>(img.width) / static_cast<double>(ow);
  for (std::size_t y = 0; y < oh; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, static_cast<double>(img.height - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < ow; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, static_cast<double>(img.width - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < 3; ++c) {
        auto px = [&](std::size_t yy, std::size_t xx) { return static_cast<double>(img.rgb[(yy * img.width + xx) * 3 + c]); };
        const double v = (1 - wy) * ((1 - wx) * px(y0, x0) + wx * px(y0, x1)) + wy * ((1 - wx) * px(y1, x0) + wx * px(y1, x1));
        out[(y * ow + x) * 3 + c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

bool is_png(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return ext == ".png";
}

}  // namespace

Dataset load_image_dir(const fs::path& dir, const ImageDirOptions& options) {
  if (!fs::is_directory(dir)) throw DataError("image directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_png(entry.path())) files.push_back(entry.path());
  }
  if (files.empty()) throw DataError("no PNG files in " + dir.string());
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

  std::vector<DecodedPng> decoded;
  decoded.reserve(files.size());
  for (const auto& f : files) decoded.push_back(read_png(f));

  const std::size_t h = options.height ? options.height : decoded.front().height;
  const std::size_t w = options.width ? options.width : decoded.front().width;
  std::vector<std::string> offenders;
  for (std::size_t i = 0; i < decoded.size(); ++i) {
    if (decoded[i].height == h && decoded[i].width == w) continue;
    if (options.resize) {
      decoded[i].rgb = resize_bilinear(decoded[i], h, w);
      decoded[i].height = h;
      decoded[i].width = w;
    } else {
      offenders.push_back(files[i].filename().string() + " (" + std::to_string(decoded[i].width) + "x" +
                          std::to_string(decoded[i].height) + ")");
    }
  }
  if (!offenders.empty()) {
    std::string msg = "images do not match expected size " + std::to_string(w) + "x" + std::to_string(h) + ":";
    for (const auto& o : offenders) msg += " " + o;
    throw DataError(msg + " (pass --resize to rescale)");
  }

  ImageBatch batch(decoded.size(), 3, h, w);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < decoded.size(); ++i) {
    ids.push_back(files[i].filename().string());
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        for (std::size_t c = 0; c < 3; ++c) batch.at(i, c, y, x) = decoded[i].rgb[(y * w + x) * 3 + c];
  }
  return Dataset::from_images(std::move(ids), std::move(batch));
}

void write_image_dir(const fs::path& dir, const Dataset& images) {
  if (!images.is_image()) throw DataError("write_image_dir needs an image dataset");
  fs::create_directories(dir);
  const auto& b = images.images();
  if (b.c != 1 && b.c != 3) throw DataError("PNG output supports 1 or 3 channels");
  std::vector<std::uint8_t> hwc(b.per_image());
  for (std::size_t i = 0; i < b.n; ++i) {
    for (std::size_t y = 0; y < b.h; ++y)
      for (std::size_t x = 0; x < b.w; ++x)
        for (std::size_t c = 0; c < b.c; ++c) hwc[(y * b.w + x) * b.c + c] = b.at(i, c, y, x);
    std::string name = images.ids()[i];
    if (!is_png(name)) name += ".png";
    write_png(dir / name, b.h, b.w, b.c, hwc);
  }
}

Dataset load_dataset(const fs::path& path, const ImageDirOptions& options) {
  if (fs::is_directory(path)) return load_image_dir(path, options);
  if (!fs::exists(path)) throw DataError("data path not found: " + path.string());
  auto raw = read_tensor_file(path);
  if (auto* t = std::get_if<numerics::Tensor>(&raw)) {
    if (t->rank() != 2) throw DataError(path.string() + ": f64 tensors must be N x D point sets");
    return Dataset::from_points(std::move(*t));
  }
  return Dataset::from_images(read_image_tensor(path));
}

}  // namespace flowlhd::data
