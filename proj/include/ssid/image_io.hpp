#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ssid/tensor.hpp"

namespace ssid {

// Binary PGM (P5), maxval 255.
struct GrayImage {
  int height = 0, width = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

void write_pgm(const std::filesystem::path& path, const GrayImage& image);
GrayImage read_pgm(const std::filesystem::path& path);

// (h, w, 1) in [0, 1] <-> 8-bit, rounding to nearest.
GrayImage to_gray(const Tensor& image);
Tensor from_gray(const GrayImage& image);

}  // namespace ssid
