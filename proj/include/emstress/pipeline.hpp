#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "emstress/dataset.hpp"
#include "emstress/generator.hpp"
#include "emstress/image_io.hpp"
#include "emstress/metrics.hpp"
#include "emstress/physics.hpp"
#include "emstress/solver.hpp"

namespace emstress {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PipelineConfig {
  std::filesystem::path out_dir = "emstress_out";
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  GenConfig gen;
  SolverConfig solver;
  PhysicalParams params;
  std::vector<double> report_years{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  double test_fraction = 0.15;

  std::filesystem::path designs_dir() const { return out_dir / "designs"; }
  std::filesystem::path stress_dir() const { return out_dir / "stress"; }
  std::filesystem::path dataset_path() const { return out_dir / "dataset.emds"; }
  std::filesystem::path split_path() const { return out_dir / "split.tsv"; }
  std::filesystem::path eval_dir() const { return out_dir / "eval"; }

  void validate() const;
};

// Applies "key = value" pairs; unknown keys and malformed values throw ConfigError.
void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value);
// Reads a key-value config file ('#' starts a comment).
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});
PipelineConfig parse_config(const std::string& text, PipelineConfig base = {});
// Resolved configuration as "key = value" lines, parseable by parse_config.
std::string dump_config(const PipelineConfig& cfg);

// Seed of the design-level split, derived from the run seed.
std::uint64_t split_seed(const PipelineConfig& cfg);

// Runs fn(i) for i in [0, n) on `workers` threads; returns when all are done.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

struct DesignEntry {
  std::int64_t design_id = 0;
  std::string path;  // relative to the manifest's directory
  std::uint64_t seed = 0;
};

struct StressEntry {
  std::int64_t design_id = 0;
  std::string status;  // ok | error
  std::string path;
  double wall_ms = 0.0;
  std::string error;
};

struct BatchResult {
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  bool partial() const { return failed > 0; }
};

BatchResult run_gen(const PipelineConfig& cfg);
std::vector<DesignEntry> read_design_manifest(const std::filesystem::path& path);

BatchResult run_simulate(const PipelineConfig& cfg);
std::vector<StressEntry> read_stress_manifest(const std::filesystem::path& path);

struct DatasetResult {
  std::size_t samples = 0;
  Split split;
  NormStats stats;
  std::string sha256;
};
// Builds samples for every successfully simulated design x report year.
std::vector<SamplePair> build_samples(const PipelineConfig& cfg);
DatasetResult run_dataset(const PipelineConfig& cfg);

enum class EvalSplit { Test, Train, All };

struct EvalOptions {
  std::filesystem::path pred_dir;
  std::filesystem::path dataset;  // defaults to cfg.dataset_path()
  EvalSplit split = EvalSplit::Test;
  std::optional<std::filesystem::path> emit_baseline_dir;
};
EvalReport run_eval(const PipelineConfig& cfg, const EvalOptions& opts);

struct RenderOptions {
  // Exactly one source: an EMIMG file, a dataset sample, or a stress file with its tree.
  std::optional<std::filesystem::path> image;
  std::optional<std::filesystem::path> dataset;
  std::optional<std::filesystem::path> stress;
  std::optional<std::filesystem::path> tree;
  std::int64_t design_id = 0;
  double year = 10.0;
  ChannelKind channel = ChannelKind::Stress;
  Palette palette = Palette::Gray;
  std::filesystem::path output;
};
FieldImage render_source(const RenderOptions& opts);
void run_render(const RenderOptions& opts);

}  // namespace emstress
