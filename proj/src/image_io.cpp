#include "ssid/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

namespace ssid {

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  if (image.height <= 0 || image.width <= 0 ||
      image.pixels.size() != static_cast<std::size_t>(image.height) * image.width) {
    throw std::invalid_argument("write_pgm: inconsistent image for " + path.string());
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  auto token = [&]() {
    std::string t;
    char c;
    while (is.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(is, skip);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!t.empty()) break;
        continue;
      }
      t += c;
    }
    return t;
  };
  if (token() != "P5") throw std::runtime_error(path.string() + ": not a binary PGM (P5)");
  GrayImage img;
  try {
    img.width = std::stoi(token());
    img.height = std::stoi(token());
    if (std::stoi(token()) != 255) throw std::runtime_error("maxval must be 255");
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": bad PGM header (" + e.what() + ")");
  }
  if (img.width <= 0 || img.height <= 0) throw std::runtime_error(path.string() + ": bad PGM dimensions");
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  is.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (is.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    throw std::runtime_error(path.string() + ": truncated PGM payload");
  }
  return img;
}

GrayImage to_gray(const Tensor& image) {
  if (image.rank() != 3 || image.dim(2) != 1) throw ShapeError("to_gray expects (h, w, 1), got " + shape_string(image.shape()));
  GrayImage g;
  g.height = image.dim(0);
  g.width = image.dim(1);
  g.pixels.resize(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    const float v = std::clamp(image[i], 0.0f, 1.0f);
    g.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
  }
  return g;
}

Tensor from_gray(const GrayImage& image) {
  Tensor t(Shape{image.height, image.width, 1});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(image.pixels[i]) / 255.0f;
  return t;
}

}  // namespace ssid
