#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "doctest.h"
#include "emstress/dataset.hpp"
#include "emstress/rng.hpp"
#include "oracles.hpp"

using namespace emstress;

namespace {

// Random sample on a random subset of pixels; values in physical ranges.
SamplePair random_sample(Rng& rng, std::int64_t id, double year) {
  SamplePair s;
  s.design_id = id;
  s.time_years = year;
  s.input.kind = ChannelKind::Current;
  s.target.kind = ChannelKind::Stress;
  s.input.design_id = s.target.design_id = id;
  s.target.time_years = year;
  const int y = static_cast<int>(rng.uniform_int(5, 250));
  const int x0 = static_cast<int>(rng.uniform_int(0, 100));
  const int len = static_cast<int>(rng.uniform_int(5, 150));
  for (int x = x0; x <= x0 + len; ++x) {
    const std::size_t i = FieldImage::index(x, y);
    s.input.mask[i] = s.target.mask[i] = 1;
    s.input.pixels[i] = static_cast<float>(rng.uniform(-1e9, 1e9));
    s.target.pixels[i] = static_cast<float>(rng.uniform(-3e8, 3e8));
  }
  return s;
}

std::vector<std::uint8_t> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("two-point standardisation") {
  SamplePair s;
  s.time_years = 1;
  s.input.mask[0] = s.input.mask[1] = 1;
  s.target.mask = s.input.mask;
  s.input.pixels[0] = -1e9f;
  s.input.pixels[1] = 1e9f;
  s.target.pixels[0] = 1.0f;
  s.target.pixels[1] = 3.0f;
  SamplePair t = s;
  t.time_years = 3;
  const std::vector<SamplePair> train{s, t};
  const NormStats st = standardize_fit(train);
  CHECK(st.mean_current == 0.0);
  CHECK(st.std_current == 1e9);
  CHECK(st.mean_stress == 2.0);
  CHECK(st.std_stress == 1.0);
  CHECK(st.mean_time == 2.0);
  CHECK(st.std_time == 1.0);
  const FieldImage n = standardize_apply(s.input, st);
  CHECK(n.pixels[0] == -1.0f);
  CHECK(n.pixels[1] == 1.0f);
  CHECK(n.pixels[2] == 0.0f);
  CHECK(standardize_time(3.0, st) == 1.0);
  CHECK(unstandardize_time(-1.0, st) == 1.0);
}

TEST_CASE("constant channel has no variance") {
  SamplePair s;
  s.input.mask[0] = s.input.mask[1] = 1;
  s.target.mask = s.input.mask;
  s.input.pixels[0] = s.input.pixels[1] = 5.0f;
  s.target.pixels[0] = 1.0f;
  SamplePair t = s;
  t.time_years = 2;
  const std::vector<SamplePair> train{s, t};
  CHECK_THROWS_AS(standardize_fit(train), std::domain_error);
  CHECK_THROWS_AS(standardize_fit(std::span<const SamplePair>{}), std::domain_error);
}

TEST_CASE("apply then invert restores wire pixels") {
  Rng rng(5);
  std::vector<SamplePair> v;
  for (int i = 0; i < 4; ++i) v.push_back(random_sample(rng, i, 1 + i));
  const NormStats st = standardize_fit(v);
  for (const auto& s : v) {
    const FieldImage back = standardize_invert(standardize_apply(s.target, st), st);
    for (std::size_t i = 0; i < back.pixels.size(); ++i) {
      if (!s.target.mask[i]) {
        CHECK(back.pixels[i] == 0.0f);
        continue;
      }
      CHECK(std::abs(back.pixels[i] - s.target.pixels[i]) <= 1e-6 * std::max(1.0f, std::abs(s.target.pixels[i])) + 1.0);
    }
  }
}

TEST_CASE("EMDS round trip is bit exact") {
  Rng rng(17);
  std::vector<SamplePair> v;
  for (int i = 0; i < 10; ++i) v.push_back(random_sample(rng, 100 - i, 1 + i % 3));
  const NormStats st = standardize_fit(v);
  oracle::TempDir dir("emds");
  const std::string path = (dir.path() / "d.emds").string();
  write_dataset(v, st, path);
  const Dataset d = read_dataset(path);
  CHECK(d.stats == st);
  REQUIRE(d.samples.size() == v.size());
  for (const auto& s : v) {
    const auto it = std::find_if(d.samples.begin(), d.samples.end(), [&](const SamplePair& r) {
      return r.design_id == s.design_id && r.time_years == s.time_years;
    });
    REQUIRE(it != d.samples.end());
    CHECK(it->input == s.input);
    CHECK(it->target == s.target);
  }
  CHECK(encode_dataset(v, st) == slurp(path));
}

TEST_CASE("truncated container fails the checksum") {
  Rng rng(3);
  std::vector<SamplePair> v{random_sample(rng, 1, 1), random_sample(rng, 2, 2)};
  auto bytes = encode_dataset(v, NormStats{});
  bytes.resize(bytes.size() - 100);
  try {
    DatasetReader r(bytes);
    FAIL("expected a checksum error");
  } catch (const DatasetError& e) {
    CHECK(e.kind() == DatasetError::Kind::Checksum);
  }
}

TEST_CASE("flipped byte and wrong version are reported") {
  Rng rng(4);
  std::vector<SamplePair> v{random_sample(rng, 1, 1)};
  auto bytes = encode_dataset(v, NormStats{});
  auto flipped = bytes;
  flipped[200] ^= 0x40;
  CHECK_THROWS_AS(DatasetReader{flipped}, DatasetError);
  auto v2 = bytes;
  v2[4] = 2;
  try {
    DatasetReader r(v2);
    FAIL("expected a version error");
  } catch (const DatasetError& e) {
    CHECK(e.kind() == DatasetError::Kind::Version);
  }
}

TEST_CASE("index lookup agrees with a linear scan") {
  Rng rng(8);
  std::vector<SamplePair> v;
  for (int d = 0; d < 100; ++d) {
    for (int y = 1; y <= 10; ++y) {
      SamplePair s;
      s.design_id = d * 7 % 100;
      s.time_years = y;
      const auto i = static_cast<std::size_t>(rng.uniform_int(0, FieldImage::kPixels - 1));
      s.input.mask[i] = s.target.mask[i] = 1;
      s.input.pixels[i] = static_cast<float>(s.design_id);
      s.target.pixels[i] = static_cast<float>(y);
      v.push_back(s);
    }
  }
  const DatasetReader r(encode_dataset(v, NormStats{}));
  REQUIRE(r.size() == 1000);
  const auto all = r.all();
  Rng pick(9);
  for (int q = 0; q < 200; ++q) {
    const std::int64_t d = pick.uniform_int(0, 99);
    const double y = static_cast<double>(pick.uniform_int(1, 10));
    const auto idx = r.find(d, y);
    REQUIRE(idx.has_value());
    const auto lin = std::find_if(all.begin(), all.end(), [&](auto& s) { return s.design_id == d && s.time_years == y; });
    REQUIRE(lin != all.end());
    const SamplePair got = r.record(*idx);
    CHECK(got.input == lin->input);
    CHECK(got.target == lin->target);
  }
  CHECK(!r.find(1000, 1.0).has_value());
  CHECK(!r.find(3, 11.0).has_value());
}

TEST_CASE("design split") {
  std::vector<std::int64_t> ids(100);
  std::iota(ids.begin(), ids.end(), 0);
  const Split s = split_by_design(ids, 0.15, 1);
  CHECK(s.test.size() == 15);
  CHECK(s.train.size() == 85);
  const Split again = split_by_design(ids, 0.15, 1);
  CHECK(again.test == s.test);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Split k = split_by_design(ids, 0.15, seed);
    std::vector<std::int64_t> both;
    std::set_intersection(k.train.begin(), k.train.end(), k.test.begin(), k.test.end(), std::back_inserter(both));
    CHECK(both.empty());
    CHECK(k.train.size() + k.test.size() == 100);
  }
  // repeated ids (one per time sample) collapse to designs
  std::vector<std::int64_t> rep;
  for (int d = 0; d < 20; ++d) {
    for (int y = 0; y < 10; ++y) rep.push_back(d);
  }
  CHECK(split_by_design(rep, 0.15, 3).test.size() == 3);
  CHECK_THROWS(split_by_design(ids, 1.0, 1));
}

TEST_CASE("split manifest round trip") {
  oracle::TempDir dir("split");
  const Split s{{1, 2, 5}, {3, 4}};
  write_split((dir.path() / "s.tsv").string(), s);
  const Split r = read_split((dir.path() / "s.tsv").string());
  CHECK(r.train == s.train);
  CHECK(r.test == s.test);
}
