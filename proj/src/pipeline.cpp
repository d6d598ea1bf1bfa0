#include "emstress/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "emstress/digest.hpp"
#include "emstress/rasterize.hpp"
#include "emstress/stress_field.hpp"
#include "emstress/tree.hpp"

namespace emstress {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  T v{};
  const std::string t = trim(text);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return v;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

struct Setting {
  const char* key;
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename T, typename Member>
Setting numeric(const char* key, Member member) {
  return {key,
          [key, member](PipelineConfig& c, const std::string& v) { member(c) = parse_value<T>(key, v); },
          [member](const PipelineConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_number(member(const_cast<PipelineConfig&>(c)));
            } else {
              return std::to_string(member(const_cast<PipelineConfig&>(c)));
            }
          }};
}

#define EMSTRESS_FIELD(expr) [](PipelineConfig& c) -> auto& { return expr; }

const std::vector<Setting>& settings() {
  static const std::vector<Setting> table = {
      {"out", [](PipelineConfig& c, const std::string& v) { c.out_dir = trim(v); },
       [](const PipelineConfig& c) { return c.out_dir.string(); }},
      numeric<std::uint64_t>("seed", EMSTRESS_FIELD(c.seed)),
      numeric<std::size_t>("workers", EMSTRESS_FIELD(c.workers)),
      numeric<std::size_t>("n_designs", EMSTRESS_FIELD(c.gen.n_designs)),
      numeric<int>("branch_count_min", EMSTRESS_FIELD(c.gen.branch_count_min)),
      numeric<int>("branch_count_max", EMSTRESS_FIELD(c.gen.branch_count_max)),
      numeric<int>("width_min_px", EMSTRESS_FIELD(c.gen.width_min_px)),
      numeric<int>("width_max_px", EMSTRESS_FIELD(c.gen.width_max_px)),
      numeric<int>("segment_length_min_um", EMSTRESS_FIELD(c.gen.segment_length_min_um)),
      numeric<int>("segment_length_max_um", EMSTRESS_FIELD(c.gen.segment_length_max_um)),
      numeric<double>("j_magnitude_min", EMSTRESS_FIELD(c.gen.j_magnitude_min)),
      numeric<double>("j_magnitude_max", EMSTRESS_FIELD(c.gen.j_magnitude_max)),
      numeric<double>("dx_um", EMSTRESS_FIELD(c.solver.dx_um)),
      numeric<double>("dt_initial_s", EMSTRESS_FIELD(c.solver.schedule.dt_initial_s)),
      numeric<double>("dt_max_s", EMSTRESS_FIELD(c.solver.schedule.dt_max_s)),
      numeric<double>("dt_ramp_factor", EMSTRESS_FIELD(c.solver.schedule.ramp_factor)),
      {"integrator",
       [](PipelineConfig& c, const std::string& v) {
         const std::string t = trim(v);
         if (t == "backward-euler") {
           c.solver.integrator = TimeIntegrator::BackwardEuler;
         } else if (t == "crank-nicolson") {
           c.solver.integrator = TimeIntegrator::CrankNicolson;
         } else {
           throw ConfigError("config key 'integrator': expected backward-euler or crank-nicolson, got '" + t + "'");
         }
       },
       [](const PipelineConfig& c) {
         return std::string(c.solver.integrator == TimeIntegrator::BackwardEuler ? "backward-euler" : "crank-nicolson");
       }},
      numeric<double>("linear_solver_tol", EMSTRESS_FIELD(c.solver.linear_solver_tol)),
      numeric<double>("D0", EMSTRESS_FIELD(c.params.D0)),
      numeric<double>("Ea", EMSTRESS_FIELD(c.params.Ea)),
      numeric<double>("B", EMSTRESS_FIELD(c.params.B)),
      numeric<double>("Omega", EMSTRESS_FIELD(c.params.Omega)),
      numeric<double>("T", EMSTRESS_FIELD(c.params.T)),
      numeric<double>("Zstar", EMSTRESS_FIELD(c.params.Zstar)),
      numeric<double>("e_charge", EMSTRESS_FIELD(c.params.e_charge)),
      numeric<double>("rho", EMSTRESS_FIELD(c.params.rho)),
      numeric<double>("sigma_T", EMSTRESS_FIELD(c.params.sigma_T)),
      numeric<double>("t_metal_um", EMSTRESS_FIELD(c.params.t_metal_um)),
      {"report_years",
       [](PipelineConfig& c, const std::string& v) {
         c.report_years.clear();
         std::stringstream ss(v);
         for (std::string item; std::getline(ss, item, ',');) {
           if (!trim(item).empty()) c.report_years.push_back(parse_value<double>("report_years", item));
         }
       },
       [](const PipelineConfig& c) {
         std::string s;
         for (std::size_t i = 0; i < c.report_years.size(); ++i) {
           s += (i ? "," : "") + format_number(c.report_years[i]);
         }
         return s;
       }},
      numeric<double>("test_fraction", EMSTRESS_FIELD(c.test_fraction)),
  };
  return table;
}

#undef EMSTRESS_FIELD

void write_manifest_header(std::ostream& os, const PipelineConfig& cfg) {
  std::istringstream lines(dump_config(cfg));
  for (std::string line; std::getline(lines, line);) os << "# " << line << "\n";
}

std::vector<std::vector<std::string>> read_tsv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest " + path.string());
  std::vector<std::vector<std::string>> rows;
  bool header = true;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string col; std::getline(ss, col, '\t');) cols.push_back(col);
    rows.push_back(std::move(cols));
  }
  return rows;
}

std::string design_filename(std::int64_t id) {
  std::ostringstream os;
  os << "design_" << std::setw(6) << std::setfill('0') << id << ".emtree";
  return os.str();
}

std::string stress_filename(std::int64_t id) {
  std::ostringstream os;
  os << "stress_" << std::setw(6) << std::setfill('0') << id << ".emstress";
  return os.str();
}

}  // namespace

void PipelineConfig::validate() const {
  try {
    gen.validate();
    solver.validate();
    validate_params(params);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (workers == 0) throw ConfigError("workers must be >= 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  for (std::size_t i = 0; i < report_years.size(); ++i) {
    if (!(report_years[i] >= 0.0) || (i > 0 && !(report_years[i] > report_years[i - 1]))) {
      throw ConfigError("report_years must be >= 0 and strictly increasing");
    }
  }
}

void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  for (const Setting& s : settings()) {
    if (key == s.key) {
      s.set(cfg, value);
      if (key == "seed") cfg.gen.rng_seed = cfg.seed;
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

PipelineConfig parse_config(const std::string& text, PipelineConfig base) {
  std::istringstream in(text);
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(base, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

PipelineConfig load_config(const fs::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string dump_config(const PipelineConfig& cfg) {
  std::string out;
  for (const Setting& s : settings()) out += std::string(s.key) + " = " + s.get(cfg) + "\n";
  return out;
}

std::uint64_t split_seed(const PipelineConfig& cfg) {
  return mix_seed(cfg.seed, 0x5350'4C49'5400ULL);  // "SPLIT"
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

BatchResult run_gen(const PipelineConfig& cfg) {
  cfg.validate();
  const fs::path dir = cfg.designs_dir();
  fs::create_directories(dir);
  const std::size_t n = cfg.gen.n_designs;
  std::vector<DesignEntry> entries(n);
  std::vector<std::string> errors(n);
  parallel_for(n, cfg.workers, [&](std::size_t i) {
    const auto id = static_cast<std::int64_t>(i);
    const std::uint64_t seed = design_seed(cfg.seed, i);
    entries[i] = {id, design_filename(id), seed};
    try {
      save_tree((dir / entries[i].path).string(), generate_tree(seed, cfg.gen, cfg.params, id));
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  BatchResult result;
  std::ofstream manifest(dir / "manifest.tsv", std::ios::trunc);
  write_manifest_header(manifest, cfg);
  manifest << "design_id\tpath\tseed\n";
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      spdlog::error("design {}: {}", i, errors[i]);
      ++result.failed;
      continue;
    }
    manifest << entries[i].design_id << '\t' << entries[i].path << '\t' << entries[i].seed << '\n';
    ++result.succeeded;
  }
  spdlog::info("gen: {} designs written to {}", result.succeeded, dir.string());
  return result;
}

std::vector<DesignEntry> read_design_manifest(const fs::path& path) {
  std::vector<DesignEntry> out;
  for (const auto& cols : read_tsv(path)) {
    if (cols.size() < 3) throw ConfigError("malformed design manifest row in " + path.string());
    out.push_back({parse_value<std::int64_t>("design_id", cols[0]), cols[1], parse_value<std::uint64_t>("seed", cols[2])});
  }
  return out;
}

BatchResult run_simulate(const PipelineConfig& cfg) {
  cfg.validate();
  const std::vector<DesignEntry> designs = read_design_manifest(cfg.designs_dir() / "manifest.tsv");
  const fs::path dir = cfg.stress_dir();
  fs::create_directories(dir);
  std::vector<StressEntry> entries(designs.size());
  parallel_for(designs.size(), cfg.workers, [&](std::size_t i) {
    StressEntry& e = entries[i];
    e.design_id = designs[i].design_id;
    e.path = stress_filename(e.design_id);
    const auto start = std::chrono::steady_clock::now();
    try {
      const InterconnectTree tree = load_tree((cfg.designs_dir() / designs[i].path).string());
      const StressField field = solve_transient(tree, cfg.params, cfg.solver, cfg.report_years);
      save_stress((dir / e.path).string(), field);
      e.status = "ok";
    } catch (const std::exception& ex) {
      e.status = "error";
      e.error = ex.what();
    }
    e.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (e.status == "ok") {
      spdlog::debug("simulate: design {} solved in {:.1f} ms", e.design_id, e.wall_ms);
    } else {
      spdlog::error("simulate: design {} failed: {}", e.design_id, e.error);
    }
  });
  BatchResult result;
  std::ofstream manifest(dir / "manifest.tsv", std::ios::trunc);
  write_manifest_header(manifest, cfg);
  manifest << "design_id\tstatus\tpath\twall_ms\terror\n";
  for (const StressEntry& e : entries) {
    manifest << e.design_id << '\t' << e.status << '\t' << e.path << '\t' << std::fixed << std::setprecision(3)
             << e.wall_ms << '\t' << e.error << '\n';
    (e.status == "ok" ? result.succeeded : result.failed)++;
  }
  spdlog::info("simulate: {} solved, {} failed", result.succeeded, result.failed);
  return result;
}

std::vector<StressEntry> read_stress_manifest(const fs::path& path) {
  std::vector<StressEntry> out;
  for (const auto& cols : read_tsv(path)) {
    if (cols.size() < 4) throw ConfigError("malformed stress manifest row in " + path.string());
    StressEntry e;
    e.design_id = parse_value<std::int64_t>("design_id", cols[0]);
    e.status = cols[1];
    e.path = cols[2];
    e.wall_ms = parse_value<double>("wall_ms", cols[3]);
    if (cols.size() > 4) e.error = cols[4];
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<SamplePair> build_samples(const PipelineConfig& cfg) {
  const std::vector<DesignEntry> designs = read_design_manifest(cfg.designs_dir() / "manifest.tsv");
  std::vector<StressEntry> stress = read_stress_manifest(cfg.stress_dir() / "manifest.tsv");
  std::erase_if(stress, [](const StressEntry& e) { return e.status != "ok"; });
  std::sort(stress.begin(), stress.end(), [](const auto& a, const auto& b) { return a.design_id < b.design_id; });

  std::vector<std::vector<SamplePair>> per_design(stress.size());
  std::vector<std::string> errors(stress.size());
  parallel_for(stress.size(), cfg.workers, [&](std::size_t i) {
    try {
      auto it = std::find_if(designs.begin(), designs.end(),
                             [&](const DesignEntry& d) { return d.design_id == stress[i].design_id; });
      if (it == designs.end()) throw std::runtime_error("design missing from manifest");
      const InterconnectTree tree = load_tree((cfg.designs_dir() / it->path).string());
      const StressField field = load_stress((cfg.stress_dir() / stress[i].path).string());
      const FieldImage current = rasterize_current(tree);
      for (double year : cfg.report_years) {
        SamplePair s;
        s.design_id = tree.design_id();
        s.time_years = year;
        s.input = current;
        s.target = rasterize_stress(tree, field, year * kSecondsPerYear);
        s.target.time_years = year;
        per_design[i].push_back(std::move(s));
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  std::vector<SamplePair> samples;
  for (std::size_t i = 0; i < per_design.size(); ++i) {
    if (!errors[i].empty()) {
      throw std::runtime_error("dataset: design " + std::to_string(stress[i].design_id) + ": " + errors[i]);
    }
    for (auto& s : per_design[i]) samples.push_back(std::move(s));
  }
  return samples;
}

DatasetResult run_dataset(const PipelineConfig& cfg) {
  cfg.validate();
  const std::vector<SamplePair> samples = build_samples(cfg);
  DatasetResult result;
  result.samples = samples.size();
  std::vector<std::int64_t> ids;
  for (const auto& s : samples) ids.push_back(s.design_id);
  if (ids.empty()) throw std::runtime_error("dataset: no simulated designs available");
  result.split = split_by_design(ids, cfg.test_fraction, split_seed(cfg));
  std::vector<SamplePair> train;
  for (const auto& s : samples) {
    if (std::binary_search(result.split.train.begin(), result.split.train.end(), s.design_id)) train.push_back(s);
  }
  result.stats = standardize_fit(train);
  fs::create_directories(cfg.out_dir);
  write_dataset(samples, result.stats, cfg.dataset_path().string());
  write_split(cfg.split_path().string(), result.split);
  result.sha256 = sha256_file(cfg.dataset_path().string());
  {
    std::ofstream digest(cfg.out_dir / "dataset.sha256", std::ios::trunc);
    digest << result.sha256 << "  " << cfg.dataset_path().filename().string() << "\n";
    std::ofstream manifest(cfg.out_dir / "dataset_manifest.txt", std::ios::trunc);
    write_manifest_header(manifest, cfg);
    manifest << "samples\t" << result.samples << "\n"
             << "train_designs\t" << result.split.train.size() << "\n"
             << "test_designs\t" << result.split.test.size() << "\n"
             << "sha256\t" << result.sha256 << "\n";
  }
  spdlog::info("dataset: {} samples, sha256 {}", result.samples, result.sha256);
  return result;
}

EvalReport run_eval(const PipelineConfig& cfg, const EvalOptions& opts) {
  const fs::path dataset_path = opts.dataset.empty() ? cfg.dataset_path() : opts.dataset;
  const DatasetReader reader = DatasetReader::open(dataset_path.string());
  std::optional<Split> split;
  const fs::path split_path = dataset_path.parent_path() / "split.tsv";
  if (opts.split != EvalSplit::All) {
    if (!fs::exists(split_path)) throw ConfigError("split manifest " + split_path.string() + " not found");
    split = read_split(split_path.string());
    std::sort(split->train.begin(), split->train.end());
    std::sort(split->test.begin(), split->test.end());
  }
  if (opts.emit_baseline_dir) fs::create_directories(*opts.emit_baseline_dir);

  std::vector<SampleMetrics> rows;
  for (std::size_t i = 0; i < reader.size(); ++i) {
    const auto& e = reader.index()[i];
    if (split) {
      const auto& side = opts.split == EvalSplit::Test ? split->test : split->train;
      if (!std::binary_search(side.begin(), side.end(), e.design_id)) continue;
    }
    const SamplePair sample = reader.record(i);
    SampleMetrics row;
    row.design_id = e.design_id;
    row.time_years = e.time_years;
    FieldImage baseline;
    try {
      baseline = baseline_mean_predictor(sample.target);
      row.baseline_nrmse = nrmse(baseline, sample.target);
    } catch (const MetricError& err) {
      row.status = "degenerate";
      rows.push_back(row);
      spdlog::warn("eval: design {} year {}: {}", e.design_id, e.time_years, err.what());
      continue;
    }
    if (opts.emit_baseline_dir) {
      save_image((*opts.emit_baseline_dir / prediction_filename(e.design_id, e.time_years)).string(), baseline);
    }
    const fs::path pred_path = opts.pred_dir / prediction_filename(e.design_id, e.time_years);
    if (opts.pred_dir.empty() || !fs::exists(pred_path)) {
      row.status = "missing";
      rows.push_back(row);
      continue;
    }
    try {
      const FieldImage pred = load_image(pred_path.string());
      row.rmse = rmse(pred, sample.target);
      row.nrmse = nrmse(pred, sample.target);
    } catch (const MetricError& err) {
      row.status = err.kind() == MetricError::Kind::MaskMismatch ? "mask_mismatch" : "degenerate";
      spdlog::warn("eval: design {} year {}: {}", e.design_id, e.time_years, err.what());
    } catch (const std::exception& err) {
      row.status = "unreadable";
      spdlog::warn("eval: design {} year {}: {}", e.design_id, e.time_years, err.what());
    }
    rows.push_back(row);
  }

  EvalReport report;
  const bool any_ok = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.status == "ok"; });
  if (any_ok) {
    report = aggregate(std::move(rows));
  } else {
    report.rows = std::move(rows);
  }
  fs::create_directories(cfg.eval_dir());
  std::ofstream table(cfg.eval_dir() / "report.tsv", std::ios::trunc);
  write_report_table(table, report);
  std::ofstream summary(cfg.eval_dir() / "summary.txt", std::ios::trunc);
  if (any_ok) {
    write_report_summary(summary, report);
  } else {
    summary << "No predictions evaluated (" << report.rows.size() << " samples flagged)\n";
  }
  return report;
}

FieldImage render_source(const RenderOptions& opts) {
  const int sources = int(opts.image.has_value()) + int(opts.dataset.has_value()) + int(opts.stress.has_value());
  if (sources != 1) throw ConfigError("render needs exactly one of --image, --dataset or --stress");
  if (opts.image) return load_image(opts.image->string());
  if (opts.dataset) {
    const DatasetReader reader = DatasetReader::open(opts.dataset->string());
    auto idx = reader.find(opts.design_id, opts.year);
    if (!idx) {
      throw ConfigError("dataset has no sample for design " + std::to_string(opts.design_id) + " at year " +
                        format_number(opts.year));
    }
    SamplePair s = reader.record(*idx);
    return opts.channel == ChannelKind::Current ? s.input : s.target;
  }
  if (!opts.tree) throw ConfigError("--stress requires --tree");
  const InterconnectTree tree = load_tree(opts.tree->string());
  if (opts.channel == ChannelKind::Current) return rasterize_current(tree);
  const StressField field = load_stress(opts.stress->string());
  return rasterize_stress(tree, field, opts.year * kSecondsPerYear);
}

void run_render(const RenderOptions& opts) {
  if (opts.output.empty()) throw ConfigError("render needs an output path");
  const FieldImage image = render_source(opts);
  if (opts.output.has_parent_path()) fs::create_directories(opts.output.parent_path());
  write_netpbm(opts.output.string(), render(image, opts.palette));
}

}  // namespace emstress
