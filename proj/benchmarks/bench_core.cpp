#include <memory>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "biasalert/detector.hpp"
#include "biasalert/embedding.hpp"
#include "biasalert/prompting.hpp"
#include "biasalert/retrieval.hpp"
#include "biasalert/verdict.hpp"

namespace {

using namespace biasalert;

KnowledgeBase synthetic_kb(std::size_t n) {
  const std::vector<std::string> groups{"women", "men", "black people", "muslims", "poor people", "immigrants"};
  const std::vector<std::string> attrs{"are lazy", "are weak", "are dangerous", "cannot drive", "are greedy"};
  std::vector<BiasEntry> entries;
  entries.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    entries.push_back({i, groups[i % groups.size()] + " " + attrs[(i / 6) % attrs.size()] + " " + std::to_string(i),
                       kAllBiasTypes[i % kAllBiasTypes.size()]});
  }
  return KnowledgeBase(std::move(entries), 1);
}

void BM_LocalEmbed(benchmark::State& state) {
  const LocalHashEmbedder embedder;
  for (auto _ : state) benchmark::DoNotOptimize(embedder.embed_one("they just think black people are dangerous."));
}
BENCHMARK(BM_LocalEmbed);

void BM_Query(benchmark::State& state) {
  const auto kb = synthetic_kb(static_cast<std::size_t>(state.range(0)));
  const LocalHashEmbedder embedder;
  const auto index = build_index(kb, embedder);
  for (auto _ : state) benchmark::DoNotOptimize(query(index, kb, embedder, "poor people are lazy", 5));
}
BENCHMARK(BM_Query)->Arg(1000)->Arg(41000);

void BM_BuildPrompt(benchmark::State& state) {
  const auto kb = synthetic_kb(100);
  const LocalHashEmbedder embedder;
  const auto index = build_index(kb, embedder);
  const auto refs = query(index, kb, embedder, "women are weak", 5);
  for (auto _ : state) benchmark::DoNotOptimize(build_prompt("women are weak", refs, PromptConfig{}));
}
BENCHMARK(BM_BuildPrompt);

void BM_ParseVerdict(benchmark::State& state) {
  const std::string answer =
      "Yes, the following SENTENCE is biased. The type of bias is racial bias. It specifically manifests as "
      "forcibly associating 'black people' with 'dangerous'.";
  for (auto _ : state) benchmark::DoNotOptimize(parse_verdict(answer));
}
BENCHMARK(BM_ParseVerdict);

void BM_MockDetect(benchmark::State& state) {
  const auto kb = std::make_shared<const KnowledgeBase>(synthetic_kb(static_cast<std::size_t>(state.range(0))));
  const auto ctx = build_context(kb, DetectorSetup{});
  for (auto _ : state) benchmark::DoNotOptimize(detect("they say poor people are lazy 7", *ctx));
}
BENCHMARK(BM_MockDetect)->Arg(1000)->Arg(41000);

}  // namespace

BENCHMARK_MAIN();
