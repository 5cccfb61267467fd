// dialeval command-line entry point.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include <omp.h>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "dialeval/config.hpp"
#include "dialeval/error.hpp"
#include "dialeval/pipeline.hpp"

namespace fs = std::filesystem;
using namespace dialeval;

int main(int argc, char** argv) {
  CLI::App app{"Multilingual dialogue evaluation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> jobs;
  bool quiet = false;
  app.add_option("--config", config_path, "TOML run configuration")->required();
  app.add_option("--seed", seed, "Override the configured seed");
  app.add_option("--out", out, "Override the output directory");
  app.add_option("--jobs", jobs, "Worker threads and in-flight request cap")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", quiet, "Only log warnings and errors");

  std::optional<std::string> dataset;
  std::optional<std::string> weights;
  std::optional<std::string> transcript;
  bool offline = false;

  auto* gen = app.add_subcommand("gen-samples", "Generate VSP/NSP/Siamese training samples");
  auto* score = app.add_subcommand("score", "Score datasets with the configured submetrics");
  score->add_option("--dataset", dataset, "Only score this dataset");
  score->add_flag("--offline", offline, "Use mock backends and the mock or replayed judge");
  auto* est = app.add_subcommand("estimate-weights", "Estimate fusion weights on development scores");
  est->add_option("--weights", weights, "Output path (default <out>/weights.json)");
  auto* eval = app.add_subcommand("evaluate", "Fuse test scores and correlate with annotations");
  eval->add_option("--weights", weights, "Weight file (default <out>/weights.json)");
  auto* replay = app.add_subcommand("replay", "Re-parse a recorded judge transcript without network access");
  replay->add_option("--dataset", dataset, "Only replay this dataset");
  replay->add_option("--transcript", transcript, "Transcript JSONL")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ErrorKind::usage);
  }

  auto logger = spdlog::stderr_color_mt("dialeval");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    RunConfig config = load_config(config_path);
    if (seed) config.seed = *seed;
    if (out) config.output_dir = *out;
    if (jobs) {
      config.concurrency = *jobs;
      config.llm.concurrency = *jobs;
    }
    omp_set_num_threads(static_cast<int>(config.concurrency));

    if (*gen) {
      cmd_gen_samples(config);
    } else if (*score) {
      cmd_score(config, dataset, offline);
    } else if (*est) {
      cmd_estimate_weights(config, weights ? fs::path(*weights) : paths::weights_file(config));
    } else if (*eval) {
      const auto report = cmd_evaluate(config, weights ? fs::path(*weights) : paths::weights_file(config));
      std::fputs(render_text(report).c_str(), stdout);
    } else if (*replay) {
      cmd_replay(config, dataset, *transcript);
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(ErrorKind::data);
  }
  return 0;
}
