// Serial reference vs OpenMP kernels on synthetic data.

#include <benchmark/benchmark.h>

#include <random>

#include "dialeval/sampler.hpp"
#include "dialeval/stats.hpp"

using namespace dialeval;

namespace {

std::vector<Dialogue> synthetic_dialogues(std::size_t n) {
  static const std::vector<std::string> words = {
      "the",   "a",     "train", "late",  "garden", "music", "friend", "coffee", "weekend", "movie", "city",
      "rain",  "book",  "cook",  "dinner", "walk",  "park",  "bike",   "office", "holiday", "beach", "phone",
      "tired", "happy", "new",   "old",   "really", "maybe", "today",  "yesterday", "and",  "but"};
  std::mt19937_64 gen(7);
  std::vector<Dialogue> out;
  for (std::size_t d = 0; d < n; ++d) {
    Dialogue dlg;
    dlg.dialogue_id = "syn-" + std::to_string(d);
    dlg.language = "en";
    for (std::size_t t = 0; t < 8; ++t) {
      std::string text;
      const std::size_t len = 4 + gen() % 8;
      for (std::size_t w = 0; w < len; ++w) text += (w ? " " : "") + words[gen() % words.size()];
      dlg.turns.push_back({t % 2 ? "B" : "A", text + ".", t});
    }
    out.push_back(std::move(dlg));
  }
  return out;
}

std::vector<CorrelationCell> synthetic_cells(std::size_t cells, std::size_t n) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> normal;
  std::vector<CorrelationCell> out(cells);
  for (auto& c : out)
    for (std::size_t i = 0; i < n; ++i) {
      c.x.push_back(normal(gen));
      c.y.push_back(0.5 * c.x.back() + normal(gen));
    }
  return out;
}

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::parallel : Exec::serial; }

void BM_NspPairs(benchmark::State& state) {
  const auto dialogues = synthetic_dialogues(static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(make_nsp_pairs(dialogues, 42, {}, Stopwords::builtin(), exec_of(state)));
  state.SetLabel(state.range(0) ? "openmp" : "serial");
}

void BM_VspSamples(benchmark::State& state) {
  const auto dialogues = synthetic_dialogues(static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(make_vsp_samples(dialogues, {}, 42, Stopwords::builtin(), exec_of(state)));
  state.SetLabel(state.range(0) ? "openmp" : "serial");
}

void BM_CorrelateCells(benchmark::State& state) {
  const auto cells = synthetic_cells(static_cast<std::size_t>(state.range(1)), 500);
  for (auto _ : state) benchmark::DoNotOptimize(correlate_cells(cells, CorrelationKind::spearman, exec_of(state)));
  state.SetLabel(state.range(0) ? "openmp" : "serial");
}

}  // namespace

BENCHMARK(BM_NspPairs)->ArgsProduct({{0, 1}, {100, 400}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VspSamples)->ArgsProduct({{0, 1}, {100, 400}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CorrelateCells)->ArgsProduct({{0, 1}, {64, 512}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
