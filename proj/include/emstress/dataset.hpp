#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "emstress/field_image.hpp"

namespace emstress {

// Standardisation statistics, fitted on the training split. Current and
// stress statistics use wire pixels only.
struct NormStats {
  double mean_current = 0.0;
  double std_current = 1.0;
  double mean_stress = 0.0;
  double std_stress = 1.0;
  double mean_time = 0.0;
  double std_time = 1.0;

  bool operator==(const NormStats&) const = default;
};

// Throws std::domain_error when any channel has zero variance or the split is empty.
NormStats standardize_fit(std::span<const SamplePair> training);

// Normalises wire pixels with the channel's statistics; off-wire pixels stay 0.
FieldImage standardize_apply(const FieldImage& image, const NormStats& stats);
FieldImage standardize_invert(const FieldImage& image, const NormStats& stats);
double standardize_time(double years, const NormStats& stats);
double unstandardize_time(double normalized, const NormStats& stats);

class DatasetError : public std::runtime_error {
 public:
  enum class Kind { Io, Format, Version, Checksum };
  DatasetError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// EMDS v1 container, little-endian:
//   header: "EMDS", u32 version, u32 width, u32 height, u64 n_samples, f64 stats[6]
//   index:  n_samples x (i64 design_id, f64 time_years, u64 offset, u64 size), sorted by (design_id, time)
//   records: i64 design_id, f64 time_years, u32 n_runs, (u32 start, u32 length)[n_runs],
//            u32 n_wire, f32 current[n_wire], f32 stress[n_wire]   (wire pixels in raster order)
//   trailer: SHA-256 of all preceding bytes.
// Images are stored in physical units; apply the stats to normalise.
std::vector<std::uint8_t> encode_dataset(std::span<const SamplePair> samples, const NormStats& stats);
// Writes via a temporary file held under an exclusive lock, then renames into place.
void write_dataset(std::span<const SamplePair> samples, const NormStats& stats, const std::string& path);

class DatasetReader {
 public:
  explicit DatasetReader(std::vector<std::uint8_t> bytes);
  static DatasetReader open(const std::string& path);

  const NormStats& stats() const { return stats_; }
  std::size_t size() const { return index_.size(); }

  struct IndexEntry {
    std::int64_t design_id;
    double time_years;
    std::uint64_t offset;
    std::uint64_t size;
  };
  const std::vector<IndexEntry>& index() const { return index_; }

  SamplePair record(std::size_t i) const;
  // Binary search over the index.
  std::optional<std::size_t> find(std::int64_t design_id, double time_years) const;
  std::vector<SamplePair> all() const;

 private:
  std::vector<std::uint8_t> bytes_;
  NormStats stats_;
  std::vector<IndexEntry> index_;
};

struct Dataset {
  NormStats stats;
  std::vector<SamplePair> samples;
};
Dataset read_dataset(const std::string& path);

struct Split {
  std::vector<std::int64_t> train;
  std::vector<std::int64_t> test;
};

// Design-level split: round(test_fraction * n) designs go to the test side.
Split split_by_design(std::span<const std::int64_t> design_ids, double test_fraction, std::uint64_t seed);
void write_split(const std::string& path, const Split& split);
Split read_split(const std::string& path);

}  // namespace emstress
