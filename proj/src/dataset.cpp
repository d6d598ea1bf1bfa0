#include "emstress/dataset.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "emstress/digest.hpp"
#include "emstress/rng.hpp"

namespace emstress {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'D', 'S'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 4 + 8 + 6 * 8;
constexpr std::size_t kIndexEntryBytes = 8 + 8 + 8 + 8;
constexpr std::size_t kDigestBytes = 32;

struct Moments {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
};

template <typename Visit>
Moments moments(Visit&& visit) {
  Moments m;
  double sum = 0.0;
  visit([&](double v) {
    sum += v;
    ++m.count;
  });
  if (m.count == 0) return m;
  m.mean = sum / static_cast<double>(m.count);
  double sq = 0.0;
  visit([&](double v) { sq += (v - m.mean) * (v - m.mean); });
  m.std = std::sqrt(sq / static_cast<double>(m.count));
  return m;
}

void require_spread(const Moments& m, const char* channel) {
  if (m.count == 0 || !(m.std > 0.0)) {
    throw std::domain_error(std::string("zero variance in the ") + channel + " channel");
  }
}

FieldImage affine_on_wire(const FieldImage& image, double scale, double shift) {
  FieldImage out = image;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = out.mask[i] ? static_cast<float>(static_cast<double>(image.pixels[i]) * scale + shift) : 0.0f;
  }
  return out;
}

}  // namespace

NormStats standardize_fit(std::span<const SamplePair> training) {
  if (training.empty()) throw std::domain_error("cannot fit statistics on an empty training split");
  auto wire_values = [&](bool stress) {
    return [&training, stress](auto&& f) {
      for (const SamplePair& s : training) {
        const FieldImage& img = stress ? s.target : s.input;
        for (std::size_t i = 0; i < img.pixels.size(); ++i) {
          if (img.mask[i]) f(static_cast<double>(img.pixels[i]));
        }
      }
    };
  };
  const Moments current = moments(wire_values(false));
  const Moments stress = moments(wire_values(true));
  const Moments time = moments([&](auto&& f) {
    for (const SamplePair& s : training) f(s.time_years);
  });
  require_spread(current, "current");
  require_spread(stress, "stress");
  require_spread(time, "time");
  return {current.mean, current.std, stress.mean, stress.std, time.mean, time.std};
}

FieldImage standardize_apply(const FieldImage& image, const NormStats& stats) {
  const bool stress = image.kind == ChannelKind::Stress;
  const double mean = stress ? stats.mean_stress : stats.mean_current;
  const double sd = stress ? stats.std_stress : stats.std_current;
  return affine_on_wire(image, 1.0 / sd, -mean / sd);
}

FieldImage standardize_invert(const FieldImage& image, const NormStats& stats) {
  const bool stress = image.kind == ChannelKind::Stress;
  const double mean = stress ? stats.mean_stress : stats.mean_current;
  const double sd = stress ? stats.std_stress : stats.std_current;
  return affine_on_wire(image, sd, mean);
}

double standardize_time(double years, const NormStats& stats) {
  return (years - stats.mean_time) / stats.std_time;
}

double unstandardize_time(double normalized, const NormStats& stats) {
  return normalized * stats.std_time + stats.mean_time;
}

std::vector<std::uint8_t> encode_dataset(std::span<const SamplePair> samples, const NormStats& stats) {
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (samples[a].design_id != samples[b].design_id) return samples[a].design_id < samples[b].design_id;
    return samples[a].time_years < samples[b].time_years;
  });

  detail::ByteWriter records;
  std::vector<DatasetReader::IndexEntry> index;
  const std::size_t records_start = kHeaderBytes + kIndexEntryBytes * samples.size();
  for (std::size_t i : order) {
    const SamplePair& s = samples[i];
    if (s.input.mask != s.target.mask) {
      throw std::invalid_argument("sample (" + std::to_string(s.design_id) + ", " + std::to_string(s.time_years) +
                                  ") has different input and target footprints");
    }
    const std::size_t begin = records.size();
    records.put<std::int64_t>(s.design_id);
    records.put<double>(s.time_years);
    const std::vector<MaskRun> runs = encode_mask(s.input.mask);
    records.put<std::uint32_t>(static_cast<std::uint32_t>(runs.size()));
    for (const MaskRun& r : runs) {
      records.put<std::uint32_t>(r.start);
      records.put<std::uint32_t>(r.length);
    }
    std::vector<float> current;
    std::vector<float> stress;
    for (std::size_t p = 0; p < s.input.mask.size(); ++p) {
      if (!s.input.mask[p]) continue;
      current.push_back(s.input.pixels[p]);
      stress.push_back(s.target.pixels[p]);
    }
    records.put<std::uint32_t>(static_cast<std::uint32_t>(current.size()));
    records.put_span<float>(current);
    records.put_span<float>(stress);
    index.push_back({s.design_id, s.time_years, records_start + begin, records.size() - begin});
  }

  detail::ByteWriter out;
  out.put_bytes(std::string_view(kMagic, 4));
  out.put<std::uint32_t>(kVersion);
  out.put<std::uint32_t>(FieldImage::kSize);
  out.put<std::uint32_t>(FieldImage::kSize);
  out.put<std::uint64_t>(samples.size());
  for (double v : {stats.mean_current, stats.std_current, stats.mean_stress, stats.std_stress, stats.mean_time,
                   stats.std_time}) {
    out.put<double>(v);
  }
  for (const auto& e : index) {
    out.put<std::int64_t>(e.design_id);
    out.put<double>(e.time_years);
    out.put<std::uint64_t>(e.offset);
    out.put<std::uint64_t>(e.size);
  }
  auto& bytes = out.bytes();
  bytes.insert(bytes.end(), records.bytes().begin(), records.bytes().end());
  const Sha256 digest = sha256(bytes);
  bytes.insert(bytes.end(), digest.begin(), digest.end());
  return std::move(bytes);
}

void write_dataset(std::span<const SamplePair> samples, const NormStats& stats, const std::string& path) {
  const std::vector<std::uint8_t> bytes = encode_dataset(samples, stats);
  const std::string tmp = path + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw DatasetError(DatasetError::Kind::Io, "cannot create " + tmp + ": " + std::strerror(errno));
  struct FdGuard {
    int fd;
    ~FdGuard() { ::close(fd); }
  } guard{fd};
  if (::flock(fd, LOCK_EX) != 0) throw DatasetError(DatasetError::Kind::Io, "cannot lock " + tmp);
  std::size_t written = 0;
  while (written < bytes.size()) {
    const ssize_t n = ::write(fd, bytes.data() + written, bytes.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw DatasetError(DatasetError::Kind::Io, "write failed: " + tmp);
    }
    written += static_cast<std::size_t>(n);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DatasetError(DatasetError::Kind::Io, "cannot rename " + tmp + " to " + path + ": " + ec.message());
}

DatasetReader::DatasetReader(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {
  if (bytes_.size() < 8 || std::memcmp(bytes_.data(), kMagic, 4) != 0) {
    throw DatasetError(DatasetError::Kind::Format, "not an EMDS container");
  }
  detail::ByteReader r(bytes_);
  r.seek(4);
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) {
    throw DatasetError(DatasetError::Kind::Version, "unsupported EMDS version " + std::to_string(version));
  }
  if (bytes_.size() < kHeaderBytes + kDigestBytes) {
    throw DatasetError(DatasetError::Kind::Checksum, "EMDS container truncated: checksum missing");
  }
  const std::size_t body = bytes_.size() - kDigestBytes;
  const Sha256 expected = sha256(std::span<const std::uint8_t>(bytes_.data(), body));
  if (!std::equal(expected.begin(), expected.end(), bytes_.begin() + static_cast<std::ptrdiff_t>(body))) {
    throw DatasetError(DatasetError::Kind::Checksum, "EMDS checksum mismatch");
  }
  const auto width = r.get<std::uint32_t>();
  const auto height = r.get<std::uint32_t>();
  if (width != FieldImage::kSize || height != FieldImage::kSize) {
    throw DatasetError(DatasetError::Kind::Format, "EMDS image size is not 256x256");
  }
  const auto n = r.get<std::uint64_t>();
  stats_.mean_current = r.get<double>();
  stats_.std_current = r.get<double>();
  stats_.mean_stress = r.get<double>();
  stats_.std_stress = r.get<double>();
  stats_.mean_time = r.get<double>();
  stats_.std_time = r.get<double>();
  if (n > (body - kHeaderBytes) / kIndexEntryBytes) throw DatasetError(DatasetError::Kind::Format, "EMDS index too large");
  index_.resize(n);
  for (auto& e : index_) {
    e.design_id = r.get<std::int64_t>();
    e.time_years = r.get<double>();
    e.offset = r.get<std::uint64_t>();
    e.size = r.get<std::uint64_t>();
    if (e.offset + e.size > body) throw DatasetError(DatasetError::Kind::Format, "EMDS record outside the file");
  }
}

DatasetReader DatasetReader::open(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(DatasetError::Kind::Io, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return DatasetReader(std::move(bytes));
}

SamplePair DatasetReader::record(std::size_t i) const {
  const IndexEntry& e = index_.at(i);
  detail::ByteReader r(std::span<const std::uint8_t>(bytes_.data() + e.offset, e.size));
  SamplePair s;
  s.design_id = r.get<std::int64_t>();
  s.time_years = r.get<double>();
  std::vector<MaskRun> runs(r.get<std::uint32_t>());
  for (auto& run : runs) {
    run.start = r.get<std::uint32_t>();
    run.length = r.get<std::uint32_t>();
  }
  const std::vector<std::uint8_t> mask = decode_mask(runs, FieldImage::kPixels);
  const auto n_wire = r.get<std::uint32_t>();
  std::vector<float> current(n_wire);
  std::vector<float> stress(n_wire);
  r.get_into<float>(current);
  r.get_into<float>(stress);
  s.input.kind = ChannelKind::Current;
  s.input.design_id = s.design_id;
  s.input.mask = mask;
  s.target.kind = ChannelKind::Stress;
  s.target.design_id = s.design_id;
  s.target.time_years = s.time_years;
  s.target.mask = mask;
  std::size_t k = 0;
  for (std::size_t p = 0; p < mask.size(); ++p) {
    if (!mask[p]) continue;
    if (k >= n_wire) throw DatasetError(DatasetError::Kind::Format, "EMDS record mask/pixel count mismatch");
    s.input.pixels[p] = current[k];
    s.target.pixels[p] = stress[k];
    ++k;
  }
  if (k != n_wire) throw DatasetError(DatasetError::Kind::Format, "EMDS record mask/pixel count mismatch");
  return s;
}

std::optional<std::size_t> DatasetReader::find(std::int64_t design_id, double time_years) const {
  auto it = std::lower_bound(index_.begin(), index_.end(), std::make_pair(design_id, time_years),
                             [](const IndexEntry& e, const std::pair<std::int64_t, double>& key) {
                               return e.design_id != key.first ? e.design_id < key.first : e.time_years < key.second;
                             });
  if (it == index_.end() || it->design_id != design_id || it->time_years != time_years) return std::nullopt;
  return static_cast<std::size_t>(it - index_.begin());
}

std::vector<SamplePair> DatasetReader::all() const {
  std::vector<SamplePair> out;
  out.reserve(index_.size());
  for (std::size_t i = 0; i < index_.size(); ++i) out.push_back(record(i));
  return out;
}

Dataset read_dataset(const std::string& path) {
  DatasetReader reader = DatasetReader::open(path);
  return {reader.stats(), reader.all()};
}

Split split_by_design(std::span<const std::int64_t> design_ids, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw std::invalid_argument("test fraction must lie in (0, 1)");
  std::vector<std::int64_t> ids(design_ids.begin(), design_ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  Rng rng(seed);
  for (std::size_t i = ids.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(ids[i - 1], ids[j]);
  }
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(ids.size())));
  Split s;
  s.test.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.train.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_test), ids.end());
  std::sort(s.test.begin(), s.test.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

void write_split(const std::string& path, const Split& split) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "design_id\tsplit\n";
  for (auto id : split.train) out << id << "\ttrain\n";
  for (auto id : split.test) out << id << "\ttest\n";
}

Split read_split(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Split s;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::int64_t id = 0;
    std::string side;
    if (!(ls >> id >> side)) continue;
    (side == "test" ? s.test : s.train).push_back(id);
  }
  return s;
}

}  // namespace emstress
