#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emstress/tree.hpp"

namespace emstress {

enum class ChannelKind : std::uint8_t { Current = 0, Stress = 1 };

std::string to_string(ChannelKind kind);

// Single-channel 256x256 raster, one pixel per um. Pixel (x, y) lives at
// index y * 256 + x; row index grows with the layout y coordinate.
// `mask` marks the wire footprint; pixels outside it are exactly zero.
struct FieldImage {
  static constexpr int kSize = kCanvasPixels;
  static constexpr std::size_t kPixels = static_cast<std::size_t>(kSize) * kSize;

  ChannelKind kind = ChannelKind::Current;
  std::int64_t design_id = 0;
  double time_years = 0.0;  // stress images only
  std::vector<float> pixels = std::vector<float>(kPixels, 0.0f);
  std::vector<std::uint8_t> mask = std::vector<std::uint8_t>(kPixels, 0);

  static std::size_t index(int x, int y) { return static_cast<std::size_t>(y) * kSize + static_cast<std::size_t>(x); }
  float at(int x, int y) const { return pixels[index(x, y)]; }
  bool on_wire(int x, int y) const { return mask[index(x, y)] != 0; }
  std::size_t wire_pixel_count() const;

  bool operator==(const FieldImage&) const = default;
};

// (input current image, aging time, target stress image) training record.
struct SamplePair {
  std::int64_t design_id = 0;
  double time_years = 0.0;
  FieldImage input;
  FieldImage target;
};

// Run-length encoding of a mask as (start, length) runs of set pixels.
struct MaskRun {
  std::uint32_t start;
  std::uint32_t length;
  bool operator==(const MaskRun&) const = default;
};
std::vector<MaskRun> encode_mask(const std::vector<std::uint8_t>& mask);
std::vector<std::uint8_t> decode_mask(const std::vector<MaskRun>& runs, std::size_t size);

}  // namespace emstress
