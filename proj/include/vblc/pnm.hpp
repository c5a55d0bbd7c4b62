#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "vblc/image.hpp"

namespace vblc {

// Binary PPM (P6, maxval 255). Encoding quantizes to round(v * 255).
std::vector<std::uint8_t> encode_ppm(const Image& img);
Image decode_ppm(const std::vector<std::uint8_t>& bytes);

// Binary PGM (P5, maxval 255), pixel value = class id, 255 = ignore.
// Decoding rejects ids >= num_classes other than the ignore sentinel.
std::vector<std::uint8_t> encode_pgm(const LabelMap& labels);
LabelMap decode_pgm(const std::vector<std::uint8_t>& bytes, int num_classes);

Image read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Image& img);
LabelMap read_pgm(const std::filesystem::path& path, int num_classes);
void write_pgm(const std::filesystem::path& path, const LabelMap& labels);

// Intensity of an 8-bit sample, quantized to the 2^-24 grid instead of
// the raw k/255 double so that 1 - v stays exactly representable and
// channel inversion round-trips bit-exactly. Off k/255 by < 3e-8.
double intensity_from_byte(std::uint8_t k);

std::uint8_t byte_from_intensity(double v);

}  // namespace vblc
