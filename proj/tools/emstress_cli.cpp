// emstress: batch front-end (gen, simulate, dataset, eval, render).

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "emstress/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;
constexpr int kExitFailure = 1;

void init_logging() {
  auto logger = spdlog::stderr_color_mt("emstress");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  const char* env = std::getenv("EMSTRESS_LOG");
  const std::string level = env ? env : "info";
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    if (level != "info") spdlog::warn("EMSTRESS_LOG='{}' not recognised, using info", level);
    spdlog::set_level(spdlog::level::info);
  }
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> out;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key = value config file");
  cmd->add_option("--seed", c.seed, "run seed (overrides config)");
  cmd->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--set", c.sets, "extra key=value override, repeatable");
}

emstress::PipelineConfig resolve(const Common& c) {
  emstress::PipelineConfig cfg;
  if (!c.config.empty()) cfg = emstress::load_config(c.config);
  for (const auto& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw emstress::ConfigError("--set expects key=value, got '" + kv + "'");
    emstress::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) emstress::apply_setting(cfg, "seed", std::to_string(*c.seed));
  if (c.workers) cfg.workers = *c.workers;
  if (c.out) cfg.out_dir = *c.out;
  cfg.validate();
  return cfg;
}

int batch_exit(const emstress::BatchResult& r) { return r.partial() ? kExitPartial : kExitOk; }

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"Electromigration stress dataset pipeline"};
  app.require_subcommand(1);

  Common common;
  auto* gen = app.add_subcommand("gen", "generate random interconnect trees");
  auto* sim = app.add_subcommand("simulate", "solve stress evolution for generated designs");
  auto* ds = app.add_subcommand("dataset", "export the EMDS dataset and split");
  auto* eval = app.add_subcommand("eval", "score predictions against a dataset");
  auto* rend = app.add_subcommand("render", "render a field as a heatmap");
  for (auto* cmd : {gen, sim, ds, eval, rend}) add_common(cmd, common);

  std::string pred_dir;
  std::string dataset;
  std::string split = "test";
  std::string baseline_dir;
  eval->add_option("--pred-dir", pred_dir, "directory of pred_<id>_y<year>.emimg files");
  eval->add_option("--dataset", dataset, "dataset file (default: <out>/dataset.emds)");
  eval->add_option("--split", split, "test | train | all")->check(CLI::IsMember({"test", "train", "all"}));
  eval->add_option("--emit-baseline", baseline_dir, "also write mean-predictor images here");

  std::string image;
  std::string stress;
  std::string tree;
  std::int64_t design_id = 0;
  double year = 10.0;
  std::string channel = "stress";
  std::string palette = "gray";
  std::string output;
  rend->add_option("--image", image, "EMIMG file");
  rend->add_option("--dataset", dataset, "dataset file; picks --design/--year");
  rend->add_option("--stress", stress, "EMSTRESS file (needs --tree)");
  rend->add_option("--tree", tree, "EMTREE file");
  rend->add_option("--design", design_id, "design id");
  rend->add_option("--year", year, "aging time in years");
  rend->add_option("--channel", channel, "stress | current")->check(CLI::IsMember({"stress", "current"}));
  rend->add_option("--palette", palette, "gray | jet")->check(CLI::IsMember({"gray", "jet"}));
  rend->add_option("-o,--output", output, "output .pgm/.ppm path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*rend) {
      emstress::RenderOptions opts;
      if (!image.empty()) opts.image = image;
      if (!dataset.empty()) opts.dataset = dataset;
      if (!stress.empty()) opts.stress = stress;
      if (!tree.empty()) opts.tree = tree;
      if (opts.tree && !opts.stress && channel == "current") opts.stress = std::filesystem::path();
      opts.design_id = design_id;
      opts.year = year;
      opts.channel = channel == "current" ? emstress::ChannelKind::Current : emstress::ChannelKind::Stress;
      opts.palette = palette == "jet" ? emstress::Palette::Jet : emstress::Palette::Gray;
      opts.output = output;
      emstress::run_render(opts);
      return kExitOk;
    }
    const emstress::PipelineConfig cfg = resolve(common);
    if (*gen) return batch_exit(emstress::run_gen(cfg));
    if (*sim) return batch_exit(emstress::run_simulate(cfg));
    if (*ds) {
      const auto r = emstress::run_dataset(cfg);
      std::cout << r.sha256 << "\n";
      return kExitOk;
    }
    if (*eval) {
      emstress::EvalOptions opts;
      opts.pred_dir = pred_dir;
      opts.dataset = dataset;
      opts.split = split == "train" ? emstress::EvalSplit::Train
                   : split == "all" ? emstress::EvalSplit::All
                                    : emstress::EvalSplit::Test;
      if (!baseline_dir.empty()) opts.emit_baseline_dir = baseline_dir;
      emstress::run_eval(cfg, opts);
      std::ifstream summary(cfg.eval_dir() / "summary.txt");
      std::cout << summary.rdbuf();
      return kExitOk;
    }
  } catch (const emstress::ConfigError& e) {
    spdlog::error("config: {}", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
  return kExitOk;
}
