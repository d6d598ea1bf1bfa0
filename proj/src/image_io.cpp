#include "emstress/image_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "binary_io.hpp"

namespace emstress {

namespace {
constexpr char kMagic[8] = {'E', 'M', 'I', 'M', 'G', '\0', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

// Piecewise-linear jet ramp over [-1, 1].
double jet_base(double v) {
  if (v <= -0.75) return 0.0;
  if (v <= -0.25) return (v + 0.75) / 0.5;
  if (v <= 0.25) return 1.0;
  if (v <= 0.75) return 1.0 - (v - 0.25) / 0.5;
  return 0.0;
}
}  // namespace

void write_image(std::ostream& os, const FieldImage& image) {
  using detail::put;
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(image.kind));
  put<std::int64_t>(os, image.design_id);
  put<double>(os, image.time_years);
  put<std::uint32_t>(os, FieldImage::kSize);
  put<std::uint32_t>(os, FieldImage::kSize);
  const auto runs = encode_mask(image.mask);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(runs.size()));
  for (const auto& r : runs) {
    put<std::uint32_t>(os, r.start);
    put<std::uint32_t>(os, r.length);
  }
  detail::put_span<float>(os, image.pixels);
}

FieldImage read_image(std::istream& is) {
  using detail::get;
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || !std::equal(magic, magic + 8, kMagic)) {
    throw std::runtime_error("not an EMIMG file");
  }
  const auto version = get<std::uint32_t>(is);
  if (version != kVersion) throw std::runtime_error("unsupported EMIMG version " + std::to_string(version));
  FieldImage img;
  const auto kind = get<std::uint32_t>(is);
  if (kind > 1) throw std::runtime_error("unknown EMIMG channel kind");
  img.kind = static_cast<ChannelKind>(kind);
  img.design_id = get<std::int64_t>(is);
  img.time_years = get<double>(is);
  if (get<std::uint32_t>(is) != FieldImage::kSize || get<std::uint32_t>(is) != FieldImage::kSize) {
    throw std::runtime_error("EMIMG image is not 256x256");
  }
  std::vector<MaskRun> runs(get<std::uint32_t>(is));
  for (auto& r : runs) {
    r.start = get<std::uint32_t>(is);
    r.length = get<std::uint32_t>(is);
  }
  img.mask = decode_mask(runs, FieldImage::kPixels);
  detail::get_into<float>(is, img.pixels);
  return img;
}

void save_image(const std::string& path, const FieldImage& image) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_image(out, image);
  if (!out) throw std::runtime_error("write failed: " + path);
}

FieldImage load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_image(in);
}

std::string prediction_filename(std::int64_t design_id, double time_years) {
  std::ostringstream os;
  os << "pred_" << std::setw(6) << std::setfill('0') << design_id << "_y";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), time_years);
  os << std::string(buf, ptr) << ".emimg";
  return os.str();
}

ValueRange value_range(const FieldImage& image) {
  auto [lo, hi] = std::minmax_element(image.pixels.begin(), image.pixels.end());
  return {static_cast<double>(*lo), static_cast<double>(*hi)};
}

RenderedImage render(const FieldImage& image, Palette palette) {
  RenderedImage out;
  out.width = FieldImage::kSize;
  out.height = FieldImage::kSize;
  out.channels = palette == Palette::Gray ? 1 : 3;
  out.max_value = palette == Palette::Gray ? 65535 : 255;
  out.range = value_range(image);
  const double span = out.range.max - out.range.min;
  out.samples.reserve(FieldImage::kPixels * static_cast<std::size_t>(out.channels));
  for (int row = 0; row < out.height; ++row) {
    const int y = out.height - 1 - row;
    for (int x = 0; x < out.width; ++x) {
      const double u = span > 0.0 ? (static_cast<double>(image.at(x, y)) - out.range.min) / span : 0.0;
      if (palette == Palette::Gray) {
        out.samples.push_back(static_cast<std::uint16_t>(std::lround(u * out.max_value)));
      } else {
        const double v = 2.0 * u - 1.0;
        for (double c : {jet_base(v - 0.5), jet_base(v), jet_base(v + 0.5)}) {
          out.samples.push_back(static_cast<std::uint16_t>(std::lround(c * out.max_value)));
        }
      }
    }
  }
  return out;
}

std::string encode_netpbm(const RenderedImage& img) {
  std::ostringstream os(std::ios::binary);
  os << (img.channels == 1 ? "P5" : "P6") << "\n" << img.width << " " << img.height << "\n" << img.max_value << "\n";
  for (std::uint16_t s : img.samples) {
    if (img.max_value > 255) os.put(static_cast<char>(s >> 8));  // Netpbm is big-endian
    os.put(static_cast<char>(s & 0xFF));
  }
  return os.str();
}

void write_netpbm(const std::string& path, const RenderedImage& img) {
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << encode_netpbm(img);
  }
  std::ofstream side(path + ".range", std::ios::trunc);
  if (!side) throw std::runtime_error("cannot write " + path + ".range");
  side << std::setprecision(17) << "min " << img.range.min << "\nmax " << img.range.max << "\n";
}

ValueRange read_range_sidecar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  ValueRange r;
  std::string key;
  double v = 0.0;
  while (in >> key >> v) {
    if (key == "min") r.min = v;
    if (key == "max") r.max = v;
  }
  return r;
}

double dequantize(std::uint16_t level, const ValueRange& range, int max_value) {
  return range.min + (range.max - range.min) * static_cast<double>(level) / max_value;
}

}  // namespace emstress
