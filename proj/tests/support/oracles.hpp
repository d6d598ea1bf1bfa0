#pragma once

// Independent reference implementations used by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "emstress/analytic.hpp"
#include "emstress/field_image.hpp"
#include "emstress/physics.hpp"
#include "emstress/solver.hpp"
#include "emstress/tree.hpp"

namespace oracle {

using namespace emstress;

// Two-terminal horizontal segment from (x0, y) to (x0 + L, y).
inline InterconnectTree segment(int length_um, double j, int width = 1, int x0 = 10, int y = 100,
                                std::int64_t design_id = 0) {
  return InterconnectTree(design_id,
                          {{0, x0, y, NodeKind::Terminal}, {1, x0 + length_um, y, NodeKind::Terminal}},
                          {{0, 0, 1, width, j}});
}

// T: junction at (100, 100), arms of 60 (left), 40 (right) and 50 (up) um.
// Currents pass KCL for widths (w_left, w_right, w_up) when j_up is chosen by the caller.
inline InterconnectTree tee(double j_left, double j_right, double j_up, int w_left = 1, int w_right = 1,
                            int w_up = 1) {
  return InterconnectTree(0,
                          {{0, 40, 100, NodeKind::Terminal},
                           {1, 100, 100, NodeKind::Junction},
                           {2, 140, 100, NodeKind::Terminal},
                           {3, 100, 150, NodeKind::Terminal}},
                          {{0, 0, 1, w_left, j_left}, {1, 1, 2, w_right, j_right}, {2, 1, 3, w_up, j_up}});
}

// Point-in-rectangle rasterizer: each pixel takes the j of the lowest-id branch
// whose metal rectangle contains it.
struct BruteRaster {
  std::vector<float> pixels = std::vector<float>(FieldImage::kPixels, 0.0f);
  std::vector<std::uint8_t> mask = std::vector<std::uint8_t>(FieldImage::kPixels, 0);
};

inline BruteRaster brute_force_current(const InterconnectTree& tree) {
  std::vector<Branch> branches = tree.branches();
  std::sort(branches.begin(), branches.end(), [](const Branch& a, const Branch& b) { return a.id < b.id; });
  BruteRaster out;
  for (int py = 0; py < FieldImage::kSize; ++py) {
    for (int px = 0; px < FieldImage::kSize; ++px) {
      for (const Branch& b : branches) {
        const Node& a = tree.node(b.from);
        const Node& c = tree.node(b.to);
        const int lo_x = std::min(a.x, c.x), hi_x = std::max(a.x, c.x);
        const int lo_y = std::min(a.y, c.y), hi_y = std::max(a.y, c.y);
        // metal spans [node - (w-1)/2, node - (w-1)/2 + w - 1] across the axis
        const int below = (b.width - 1) / 2;
        bool inside;
        if (a.y == c.y) {
          inside = px >= lo_x && px <= hi_x && py >= a.y - below && py < a.y - below + b.width;
        } else {
          inside = py >= lo_y && py <= hi_y && px >= a.x - below && px < a.x - below + b.width;
        }
        if (inside) {
          out.pixels[static_cast<std::size_t>(py) * FieldImage::kSize + px] = static_cast<float>(b.current_density);
          out.mask[static_cast<std::size_t>(py) * FieldImage::kSize + px] = 1;
          break;
        }
      }
    }
  }
  return out;
}

// NRMSE of a single-segment solve against the series, over cell centres.
inline double segment_nrmse(const Mesh& mesh, const StressSnapshot& snap, double length_um, double G, double kappa,
                            double sigma_T) {
  const auto& cells = snap.branches.at(0);
  double sq = 0.0;
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const double x_um = (static_cast<double>(i) + 0.5) * mesh.dx_um();
    const double ref = analytic_single_segment(length_um * 1e-6, G, kappa, sigma_T, x_um * 1e-6, snap.time_s,
                                               SeriesOptions{1e-12, 100000});
    sq += (cells[i] - ref) * (cells[i] - ref);
    lo = std::min(lo, ref);
    hi = std::max(hi, ref);
  }
  return std::sqrt(sq / static_cast<double>(cells.size())) / (hi - lo);
}

// Max absolute error against the series at cell centres.
inline double segment_max_error(const Mesh& mesh, const StressSnapshot& snap, double length_um, double G,
                                double kappa, double sigma_T) {
  const auto& cells = snap.branches.at(0);
  double err = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const double x_um = (static_cast<double>(i) + 0.5) * mesh.dx_um();
    const double ref = analytic_single_segment(length_um * 1e-6, G, kappa, sigma_T, x_um * 1e-6, snap.time_s,
                                               SeriesOptions{1e-14, 100000});
    err = std::max(err, std::abs(cells[i] - ref));
  }
  return err;
}

// Total V * sigma over all cells of a snapshot, Pa um^3.
inline double content(const InterconnectTree& tree, const StressSnapshot& snap, double dx_um, double t_metal_um) {
  double total = 0.0;
  for (std::size_t b = 0; b < snap.branches.size(); ++b) {
    double s = 0.0;
    for (double v : snap.branches[b]) s += v;
    total += s * tree.branches()[b].width * t_metal_um * dx_um;
  }
  return total;
}

inline double nrmse_over(const std::vector<double>& pred, const std::vector<double>& truth) {
  double sq = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) sq += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  const auto [lo, hi] = std::minmax_element(truth.begin(), truth.end());
  return std::sqrt(sq / static_cast<double>(truth.size())) / (*hi - *lo);
}

inline std::vector<double> flatten(const StressSnapshot& s) {
  std::vector<double> out;
  for (const auto& b : s.branches) out.insert(out.end(), b.begin(), b.end());
  out.insert(out.end(), s.junctions.begin(), s.junctions.end());
  return out;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("emstress_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace oracle
