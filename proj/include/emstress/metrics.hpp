#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "emstress/field_image.hpp"

namespace emstress {

class MetricError : public std::runtime_error {
 public:
  enum class Kind { EmptyMask, MaskMismatch, DegenerateRange, SizeMismatch };
  MetricError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Errors over paired samples of the footprint S.
double rmse(std::span<const double> pred, std::span<const double> truth);
// rmse / (max(truth) - min(truth)).
double nrmse(std::span<const double> pred, std::span<const double> truth);

// Image forms: S is the shared footprint mask; values in physical units.
double rmse(const FieldImage& pred, const FieldImage& truth);
double nrmse(const FieldImage& pred, const FieldImage& truth);

// Predicts the mean of truth over S at every footprint pixel.
FieldImage baseline_mean_predictor(const FieldImage& truth);

struct SampleMetrics {
  std::int64_t design_id = 0;
  double time_years = 0.0;
  std::string status = "ok";  // ok | missing | mask_mismatch | degenerate
  double rmse = 0.0;
  double nrmse = 0.0;
  double baseline_nrmse = 0.0;
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // population
  double max = 0.0;
  double min = 0.0;
  std::size_t count = 0;
};

// Population statistics; throws std::invalid_argument on an empty input.
Summary summarize(std::span<const double> values);

struct EvalReport {
  std::vector<SampleMetrics> rows;
  Summary nrmse;
  Summary baseline_nrmse;
  double mean_rmse = 0.0;
};

// Aggregates over rows with status "ok". Throws when there are none.
EvalReport aggregate(std::vector<SampleMetrics> rows);

// Tab-separated per-sample table.
void write_report_table(std::ostream& os, const EvalReport& report);
// Mean / Standard Deviation / Max / Min rows for the model and the baseline.
void write_report_summary(std::ostream& os, const EvalReport& report);

}  // namespace emstress
