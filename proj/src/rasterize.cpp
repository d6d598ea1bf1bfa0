#include "emstress/rasterize.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "emstress/solver.hpp"

namespace emstress {

std::string to_string(ChannelKind kind) {
  return kind == ChannelKind::Current ? "current" : "stress";
}

std::size_t FieldImage::wire_pixel_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

std::vector<MaskRun> encode_mask(const std::vector<std::uint8_t>& mask) {
  std::vector<MaskRun> runs;
  for (std::size_t i = 0; i < mask.size();) {
    if (!mask[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < mask.size() && mask[j]) ++j;
    runs.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j - i)});
    i = j;
  }
  return runs;
}

std::vector<std::uint8_t> decode_mask(const std::vector<MaskRun>& runs, std::size_t size) {
  std::vector<std::uint8_t> mask(size, 0);
  for (const MaskRun& r : runs) {
    if (static_cast<std::size_t>(r.start) + r.length > size) throw std::runtime_error("mask run out of range");
    std::fill_n(mask.begin() + r.start, r.length, std::uint8_t{1});
  }
  return mask;
}

std::vector<int> pixel_owners(const InterconnectTree& tree) {
  std::vector<int> owner(FieldImage::kPixels, -1);
  const auto& branches = tree.branches();
  std::vector<std::size_t> order(branches.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return branches[a].id < branches[b].id; });
  for (std::size_t bi : order) {
    const PixelRect r = tree.footprint(branches[bi]);
    if (r.x0 < 0 || r.y0 < 0 || r.x1 >= FieldImage::kSize || r.y1 >= FieldImage::kSize) {
      throw std::out_of_range("branch " + std::to_string(branches[bi].id) + " footprint leaves the canvas");
    }
    for (int y = r.y0; y <= r.y1; ++y) {
      for (int x = r.x0; x <= r.x1; ++x) {
        int& o = owner[FieldImage::index(x, y)];
        if (o < 0) o = static_cast<int>(bi);
      }
    }
  }
  return owner;
}

FieldImage rasterize_current(const InterconnectTree& tree) {
  FieldImage img;
  img.kind = ChannelKind::Current;
  img.design_id = tree.design_id();
  const std::vector<int> owner = pixel_owners(tree);
  for (std::size_t i = 0; i < owner.size(); ++i) {
    if (owner[i] < 0) continue;
    img.mask[i] = 1;
    img.pixels[i] = static_cast<float>(tree.branches()[static_cast<std::size_t>(owner[i])].current_density);
  }
  return img;
}

FieldImage rasterize_stress(const InterconnectTree& tree, const StressField& field, double time_s) {
  const StressSnapshot& snap = field.at_time(time_s);
  const Mesh mesh(tree, field.dx_um);
  if (snap.branches.size() != mesh.branches().size()) {
    throw std::invalid_argument("stress field does not belong to this tree");
  }
  for (std::size_t b = 0; b < mesh.branches().size(); ++b) {
    if (field.branch_ids.at(b) != mesh.branches()[b].branch_id) {
      throw std::invalid_argument("stress field branch order differs from the tree");
    }
  }
  FieldImage img;
  img.kind = ChannelKind::Stress;
  img.design_id = tree.design_id();
  img.time_years = time_s / kSecondsPerYear;
  const std::vector<int> owner = pixel_owners(tree);
  for (int y = 0; y < FieldImage::kSize; ++y) {
    for (int x = 0; x < FieldImage::kSize; ++x) {
      const std::size_t i = FieldImage::index(x, y);
      if (owner[i] < 0) continue;
      const auto bi = static_cast<std::size_t>(owner[i]);
      const Branch& b = tree.branches()[bi];
      const Node& lo = tree.low_node(b);
      const int along = tree.orientation(b) == Orientation::Horizontal ? x - lo.x : y - lo.y;
      const double s = std::clamp(static_cast<double>(along), 0.0, static_cast<double>(tree.length_um(b)));
      img.mask[i] = 1;
      img.pixels[i] = static_cast<float>(sample_branch(mesh, snap, bi, s));
    }
  }
  return img;
}

}  // namespace emstress
