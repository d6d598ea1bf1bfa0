#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace emstress {

// Hydrostatic stress at one instant: per-branch cell-centre samples (Pa) in
// tree branch order, plus one value per interior junction.
struct StressSnapshot {
  double time_s = 0.0;
  std::vector<std::vector<double>> branches;
  std::vector<double> junctions;

  bool operator==(const StressSnapshot&) const = default;
};

struct StressField {
  std::int64_t design_id = 0;
  double dx_um = 1.0;
  std::vector<int> branch_ids;
  std::vector<int> junction_ids;  // node ids of interior junctions
  std::vector<StressSnapshot> snapshots;

  bool operator==(const StressField&) const = default;

  // Index of the snapshot whose time matches to 1e-9 relative; throws if absent.
  std::size_t snapshot_index(double time_s) const;
  const StressSnapshot& at_time(double time_s) const;
};

// EMSTRESS v1 binary container, little-endian.
//   magic "EMSTRESS", u32 version, i64 design_id, u32 n_times, u32 n_branches,
//   u32 n_junctions, f64 dx_um, i32 branch_ids[n_branches], u32 cells[n_branches],
//   i32 junction_ids[n_junctions], then per time: f64 time_s, per branch
//   f64[cells], f64 junctions[n_junctions].
void write_stress(std::ostream& os, const StressField& field);
StressField read_stress(std::istream& is);
void save_stress(const std::string& path, const StressField& field);
StressField load_stress(const std::string& path);

}  // namespace emstress
