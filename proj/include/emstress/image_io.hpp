#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "emstress/field_image.hpp"

namespace emstress {

// EMIMG v1: one FieldImage, little-endian. Used for prediction files.
//   magic "EMIMG\0\0\0", u32 version, u32 kind, i64 design_id, f64 time_years,
//   u32 width, u32 height, u32 n_runs, (u32 start, u32 length)[n_runs], f32 pixels[w*h]
void write_image(std::ostream& os, const FieldImage& image);
FieldImage read_image(std::istream& is);
void save_image(const std::string& path, const FieldImage& image);
FieldImage load_image(const std::string& path);

// File name used for a prediction of (design, year) inside a prediction directory.
std::string prediction_filename(std::int64_t design_id, double time_years);

struct ValueRange {
  double min = 0.0;
  double max = 0.0;
};

// Range over every pixel, background included.
ValueRange value_range(const FieldImage& image);

enum class Palette { Gray, Jet };

struct RenderedImage {
  int width = 0;
  int height = 0;
  int channels = 1;          // 1 gray, 3 RGB
  int max_value = 65535;     // Netpbm maxval
  std::vector<std::uint16_t> samples;
  ValueRange range;
};

// Gray renders to 16 bits per pixel so the sidecar range can de-quantise it;
// Jet renders to 8-bit RGB. Row 0 of the output is the top of the layout
// (largest y). A degenerate range renders uniformly at level 0.
RenderedImage render(const FieldImage& image, Palette palette);

// Writes a PGM (P5) or PPM (P6) file plus "<path>.range" holding "min <v>" and "max <v>".
void write_netpbm(const std::string& path, const RenderedImage& img);
std::string encode_netpbm(const RenderedImage& img);
ValueRange read_range_sidecar(const std::string& path);

// Inverse of the gray quantisation for one sample.
double dequantize(std::uint16_t level, const ValueRange& range, int max_value = 65535);

}  // namespace emstress
