#include <cmath>
#include <sstream>

#include "doctest.h"
#include "emstress/metrics.hpp"
#include "emstress/rng.hpp"

using namespace emstress;

TEST_CASE("rmse hand values") {
  const std::vector<double> t{1, 2, 3};
  CHECK(rmse(t, t) == 0.0);
  const std::vector<double> shifted{1 + 5, 2 + 5, 3 + 5};
  CHECK(rmse(shifted, t) == 5.0);
  const std::vector<double> a{3, 4}, b{0, 0};
  CHECK(rmse(a, b) == std::sqrt(12.5));
  CHECK(rmse(a, b) == doctest::Approx(3.5355).epsilon(1e-4));
  CHECK(rmse(a, b) == rmse(b, a));
}

TEST_CASE("nrmse hand values") {
  // range 2 GPa, every error 0.13 GPa
  const std::vector<double> truth{0.0, 1e9, 2e9};
  const std::vector<double> pred{0.13e9, 1e9 - 0.13e9, 2e9 + 0.13e9};
  CHECK(nrmse(pred, truth) == doctest::Approx(0.065).epsilon(1e-12));
  const std::vector<double> flat{4, 4, 4};
  CHECK_THROWS_AS(nrmse(truth, flat), MetricError);
  // not symmetric: the normaliser comes from truth
  const std::vector<double> wide{0, 10}, narrow{0, 5};
  CHECK(nrmse(wide, narrow) != nrmse(narrow, wide));
}

TEST_CASE("image errors: empty footprint and mask mismatch") {
  FieldImage a, b;
  CHECK_THROWS_AS(rmse(a, b), MetricError);
  a.mask[3] = 1;
  try {
    rmse(a, b);
    FAIL("expected mismatch");
  } catch (const MetricError& e) {
    CHECK(e.kind() == MetricError::Kind::MaskMismatch);
  }
}

TEST_CASE("aggregate") {
  SampleMetrics one;
  one.nrmse = 0.05;
  auto r = aggregate({one});
  CHECK(r.nrmse.mean == 0.05);
  CHECK(r.nrmse.max == 0.05);
  CHECK(r.nrmse.min == 0.05);
  CHECK(r.nrmse.std == 0.0);
  SampleMetrics a, b, flagged;
  a.nrmse = 0.06;
  b.nrmse = 0.08;
  flagged.status = "missing";
  flagged.nrmse = 99;
  r = aggregate({a, b, flagged});
  CHECK(r.nrmse.mean == doctest::Approx(0.07).epsilon(1e-14));
  CHECK(r.nrmse.std == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(r.nrmse.count == 2);
  CHECK_THROWS(aggregate({flagged}));
}

TEST_CASE("baseline on a linear profile") {
  FieldImage truth;
  truth.kind = ChannelKind::Stress;
  const int n = 2001;
  for (int i = 0; i < n; ++i) {
    const std::size_t k = static_cast<std::size_t>(i);
    truth.mask[k] = 1;
    truth.pixels[k] = static_cast<float>(2e8 * i / (n - 1));
  }
  const FieldImage base = baseline_mean_predictor(truth);
  CHECK(base.mask == truth.mask);
  // std of a uniform ramp over its range is 1/sqrt(12)
  CHECK(nrmse(base, truth) == doctest::Approx(1.0 / std::sqrt(12.0)).epsilon(1e-3));
  CHECK(nrmse(base, truth) == doctest::Approx(0.289).epsilon(2e-3));
}

TEST_CASE("scale properties on random pairs") {
  Rng rng(31);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> p(64), t(64), kp(64), kt(64);
    const double k = rng.uniform(-50, 50);
    for (int q = 0; q < 64; ++q) {
      p[q] = rng.uniform(-1e8, 1e8);
      t[q] = rng.uniform(-1e8, 1e8);
      kp[q] = k * p[q];
      kt[q] = k * t[q];
    }
    CHECK(rmse(kp, kt) == doctest::Approx(std::abs(k) * rmse(p, t)).epsilon(1e-12));
    CHECK(nrmse(kp, kt) == doctest::Approx(nrmse(p, t)).epsilon(1e-12));
  }
}

TEST_CASE("summary uses the table labels") {
  SampleMetrics a;
  a.nrmse = 0.06;
  a.baseline_nrmse = 0.3;
  std::ostringstream os;
  write_report_summary(os, aggregate({a}));
  for (const char* label : {"Mean", "Standard Deviation", "Max", "Min", "Baseline"}) {
    CHECK(os.str().find(label) != std::string::npos);
  }
  std::ostringstream tsv;
  write_report_table(tsv, aggregate({a}));
  CHECK(tsv.str().rfind("design_id\ttime_years\tstatus", 0) == 0);
}
