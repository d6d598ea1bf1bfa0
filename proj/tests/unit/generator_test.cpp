#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "emstress/generator.hpp"
#include "emstress/rng.hpp"
#include "oracles.hpp"

using namespace emstress;

TEST_CASE("mix function is fixed") {
  // reference splitmix64 output for 0 and for the golden increment
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
  CHECK(mix_seed(1, 0) == splitmix64(1 ^ splitmix64(0x9E3779B97F4A7C15ULL)));
  CHECK(design_seed(1, 5) != design_seed(1, 6));
}

TEST_CASE("rng bounded draws stay in range and are reproducible") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const auto v = a.uniform_int(-3, 7);
    CHECK(v >= -3);
    CHECK(v <= 7);
    CHECK(v == b.uniform_int(-3, 7));
    const double u = a.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(u == b.uniform01());
  }
}

TEST_CASE("generation is deterministic") {
  const GenConfig g;
  const PhysicalParams p;
  for (std::uint64_t s : {1ULL, 77ULL, 123456789ULL}) {
    CHECK(serialize_tree(generate_tree(s, g, p, 4)) == serialize_tree(generate_tree(s, g, p, 4)));
  }
  CHECK(serialize_tree(generate_tree(1, g, p)) != serialize_tree(generate_tree(2, g, p)));
}

TEST_CASE("fixed branch count") {
  GenConfig g;
  g.branch_count_min = g.branch_count_max = 5;
  for (std::uint64_t s = 0; s < 20; ++s) CHECK(generate_tree(s, g, PhysicalParams{}).branches().size() == 5);
}

TEST_CASE("hundred designs validate clean") {
  const GenConfig g;
  const PhysicalParams p;
  int bad = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const auto t = generate_tree(design_seed(7, i), g, p, static_cast<std::int64_t>(i));
    const auto v = validate_tree(t, p);
    if (!v.empty()) ++bad;
    const int n = static_cast<int>(t.branches().size());
    CHECK(n >= g.branch_count_min);
    CHECK(n <= g.branch_count_max);
    for (const auto& b : t.branches()) {
      CHECK(b.width >= 1);
      CHECK(b.width <= 4);
      CHECK(t.length_um(b) >= g.min_split_piece_um);
      CHECK(t.length_um(b) <= g.segment_length_max_um);
    }
  }
  CHECK(bad == 0);
}

TEST_CASE("coverage of branch counts and current magnitudes") {
  const GenConfig g;
  const PhysicalParams p;
  int nmin = 1000, nmax = 0;
  double jmin = INFINITY, jmax = 0;
  for (std::uint64_t i = 0; i < 500; ++i) {
    const auto t = generate_tree(design_seed(11, i), g, p);
    nmin = std::min<int>(nmin, static_cast<int>(t.branches().size()));
    nmax = std::max<int>(nmax, static_cast<int>(t.branches().size()));
    for (const auto& b : t.branches()) {
      if (b.current_density == 0) continue;
      jmin = std::min(jmin, std::abs(b.current_density));
      jmax = std::max(jmax, std::abs(b.current_density));
    }
  }
  CHECK(nmin <= 5);
  CHECK(nmax >= 60);
  CHECK(jmin <= 1e7);
  CHECK(jmax >= 9e8);
}

TEST_CASE("current assignment on a single segment") {
  const PhysicalParams p;
  const InterconnectTree seg = oracle::segment(30, 0.0, 2);
  const auto t = assign_currents(seg, {{0, 1e-4}, {1, -1e-4}}, p);
  // 1e-4 A through 2 um x 0.2 um
  CHECK(std::abs(t.branches()[0].current_density) == doctest::Approx(1e-4 / (2e-6 * 0.2e-6)));
  CHECK(t.branches()[0].current_density > 0);  // enters at the low end, flows toward +x
  const auto z = assign_currents(seg, {}, p);
  CHECK(z.branches()[0].current_density == 0.0);
  CHECK_THROWS(assign_currents(seg, {{0, 1.0}}, p));
}

TEST_CASE("routed currents satisfy KCL") {
  const PhysicalParams p;
  const InterconnectTree tee = oracle::tee(0, 0, 0, 2, 1, 3);
  const auto t = assign_currents(tee, {{0, 3e-5}, {2, -1e-5}, {3, -2e-5}}, p);
  CHECK(validate_tree(t, p).empty());
  CHECK(kcl_residual(t, t.node(1), p) < 1e-12);
}

TEST_CASE("generator config validation") {
  GenConfig g;
  g.branch_count_min = 10;
  g.branch_count_max = 5;
  CHECK_THROWS(g.validate());
  g = {};
  g.j_magnitude_min = 5e8;
  g.j_magnitude_max = 1e8;
  CHECK_THROWS(g.validate());
}
