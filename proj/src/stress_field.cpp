#include "emstress/stress_field.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "binary_io.hpp"

namespace emstress {

namespace {
constexpr char kMagic[8] = {'E', 'M', 'S', 'T', 'R', 'E', 'S', 'S'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

std::size_t StressField::snapshot_index(double time_s) const {
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    const double t = snapshots[i].time_s;
    if (t == time_s || std::abs(t - time_s) <= 1e-9 * std::max(std::abs(t), std::abs(time_s))) {
      return i;
    }
  }
  throw std::out_of_range("stress field has no snapshot at t = " + std::to_string(time_s) + " s");
}

const StressSnapshot& StressField::at_time(double time_s) const {
  return snapshots[snapshot_index(time_s)];
}

void write_stress(std::ostream& os, const StressField& field) {
  using detail::put;
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kVersion);
  put<std::int64_t>(os, field.design_id);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(field.snapshots.size()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(field.branch_ids.size()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(field.junction_ids.size()));
  put<double>(os, field.dx_um);
  std::vector<std::uint32_t> cells(field.branch_ids.size(), 0);
  if (!field.snapshots.empty()) {
    for (std::size_t b = 0; b < cells.size(); ++b) {
      cells[b] = static_cast<std::uint32_t>(field.snapshots.front().branches.at(b).size());
    }
  }
  for (int id : field.branch_ids) put<std::int32_t>(os, id);
  for (auto c : cells) put<std::uint32_t>(os, c);
  for (int id : field.junction_ids) put<std::int32_t>(os, id);
  for (const auto& snap : field.snapshots) {
    if (snap.branches.size() != cells.size() || snap.junctions.size() != field.junction_ids.size()) {
      throw std::invalid_argument("stress snapshot does not match the field layout");
    }
    put<double>(os, snap.time_s);
    for (std::size_t b = 0; b < cells.size(); ++b) {
      if (snap.branches[b].size() != cells[b]) {
        throw std::invalid_argument("stress snapshot cell count changed between times");
      }
      detail::put_span<double>(os, snap.branches[b]);
    }
    detail::put_span<double>(os, snap.junctions);
  }
}

StressField read_stress(std::istream& is) {
  using detail::get;
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::string(magic, 8) != std::string(kMagic, 8)) {
    throw std::runtime_error("not an EMSTRESS file");
  }
  const auto version = get<std::uint32_t>(is);
  if (version != kVersion) {
    throw std::runtime_error("unsupported EMSTRESS version " + std::to_string(version));
  }
  StressField f;
  f.design_id = get<std::int64_t>(is);
  const auto n_times = get<std::uint32_t>(is);
  const auto n_branches = get<std::uint32_t>(is);
  const auto n_junctions = get<std::uint32_t>(is);
  f.dx_um = get<double>(is);
  f.branch_ids.resize(n_branches);
  for (auto& id : f.branch_ids) id = get<std::int32_t>(is);
  std::vector<std::uint32_t> cells(n_branches);
  for (auto& c : cells) c = get<std::uint32_t>(is);
  f.junction_ids.resize(n_junctions);
  for (auto& id : f.junction_ids) id = get<std::int32_t>(is);
  f.snapshots.resize(n_times);
  for (auto& snap : f.snapshots) {
    snap.time_s = get<double>(is);
    snap.branches.resize(n_branches);
    for (std::uint32_t b = 0; b < n_branches; ++b) {
      snap.branches[b].resize(cells[b]);
      detail::get_into<double>(is, snap.branches[b]);
    }
    snap.junctions.resize(n_junctions);
    detail::get_into<double>(is, snap.junctions);
  }
  return f;
}

void save_stress(const std::string& path, const StressField& field) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_stress(out, field);
  if (!out) throw std::runtime_error("write failed: " + path);
}

StressField load_stress(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_stress(in);
}

}  // namespace emstress
