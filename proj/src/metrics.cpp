#include "emstress/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace emstress {

double rmse(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw MetricError(MetricError::Kind::SizeMismatch, "prediction/truth size mismatch");
  if (truth.empty()) throw MetricError(MetricError::Kind::EmptyMask, "empty footprint");
  double sq = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = truth[i] - pred[i];
    sq += d * d;
  }
  return std::sqrt(sq / static_cast<double>(truth.size()));
}

double nrmse(std::span<const double> pred, std::span<const double> truth) {
  const double e = rmse(pred, truth);
  const auto [lo, hi] = std::minmax_element(truth.begin(), truth.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) throw MetricError(MetricError::Kind::DegenerateRange, "ground truth has zero stress range");
  return e / range;
}

namespace {

std::pair<std::vector<double>, std::vector<double>> masked_values(const FieldImage& pred, const FieldImage& truth) {
  if (pred.mask != truth.mask) throw MetricError(MetricError::Kind::MaskMismatch, "prediction footprint differs from truth");
  std::vector<double> p;
  std::vector<double> t;
  for (std::size_t i = 0; i < truth.mask.size(); ++i) {
    if (!truth.mask[i]) continue;
    p.push_back(pred.pixels[i]);
    t.push_back(truth.pixels[i]);
  }
  if (t.empty()) throw MetricError(MetricError::Kind::EmptyMask, "empty footprint");
  return {std::move(p), std::move(t)};
}

}  // namespace

double rmse(const FieldImage& pred, const FieldImage& truth) {
  auto [p, t] = masked_values(pred, truth);
  return rmse(p, t);
}

double nrmse(const FieldImage& pred, const FieldImage& truth) {
  auto [p, t] = masked_values(pred, truth);
  return nrmse(p, t);
}

FieldImage baseline_mean_predictor(const FieldImage& truth) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < truth.mask.size(); ++i) {
    if (!truth.mask[i]) continue;
    sum += truth.pixels[i];
    ++n;
  }
  if (n == 0) throw MetricError(MetricError::Kind::EmptyMask, "empty footprint");
  FieldImage out = truth;
  const auto mean = static_cast<float>(sum / static_cast<double>(n));
  for (std::size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] = out.mask[i] ? mean : 0.0f;
  return out;
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("cannot summarise an empty set");
  Summary s;
  s.count = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.count);
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(s.count));
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

EvalReport aggregate(std::vector<SampleMetrics> rows) {
  EvalReport report;
  report.rows = std::move(rows);
  std::vector<double> model;
  std::vector<double> baseline;
  double rmse_sum = 0.0;
  for (const auto& r : report.rows) {
    if (r.status != "ok") continue;
    model.push_back(r.nrmse);
    baseline.push_back(r.baseline_nrmse);
    rmse_sum += r.rmse;
  }
  report.nrmse = summarize(model);
  report.baseline_nrmse = summarize(baseline);
  report.mean_rmse = rmse_sum / static_cast<double>(model.size());
  return report;
}

void write_report_table(std::ostream& os, const EvalReport& report) {
  os << "design_id\ttime_years\tstatus\trmse_pa\tnrmse\tbaseline_nrmse\n";
  os << std::setprecision(10);
  for (const auto& r : report.rows) {
    os << r.design_id << '\t' << r.time_years << '\t' << r.status << '\t' << r.rmse << '\t' << r.nrmse << '\t'
       << r.baseline_nrmse << '\n';
  }
}

void write_report_summary(std::ostream& os, const EvalReport& report) {
  auto pct = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << v * 100.0 << '%';
    return s.str();
  };
  const std::size_t flagged = report.rows.size() - report.nrmse.count;
  os << "Statistics of NRMSE (" << report.nrmse.count << " samples evaluated, " << flagged << " flagged)\n";
  os << std::left << std::setw(20) << "" << std::setw(12) << "Model" << "Baseline\n";
  auto row = [&](const char* label, double m, double b) {
    os << std::left << std::setw(20) << label << std::setw(12) << pct(m) << pct(b) << '\n';
  };
  row("Mean", report.nrmse.mean, report.baseline_nrmse.mean);
  row("Standard Deviation", report.nrmse.std, report.baseline_nrmse.std);
  row("Max", report.nrmse.max, report.baseline_nrmse.max);
  row("Min", report.nrmse.min, report.baseline_nrmse.min);
  os << "Mean RMSE: " << std::setprecision(6) << report.mean_rmse / 1e9 << " GPa\n";
}

}  // namespace emstress
