#include <string>

#include <benchmark/benchmark.h>
#include <nlohmann/json.hpp>

#include "sib/preview.h"
#include "sib/program.h"
#include "sib/trace.h"

using nlohmann::json;
using namespace sib;

namespace {

json block(const std::string& id, const std::string& kind, json params = json::object()) {
  return {{"id", id}, {"kind", kind}, {"params", std::move(params)}};
}

std::string show_document() {
  json blocks = json::array();
  blocks.push_back(block("up", "TakeoffAll", {{"z", 1.0}}));
  blocks.push_back(block("f", "ApplyFormation", {{"kind", "circle"}, {"n", 10}, {"size", 3.0}, {"altitude", 1.5}}));
  blocks.push_back(block("led", "LedEffect", {{"effect", "rainbow"}, {"group", "all"}, {"r", 255}, {"g", 0}, {"b", 0}, {"rate", 1.0}}));
  blocks.push_back(block("rot", "Rotate", {{"angle", 1.0}}));
  blocks.push_back(block("w", "Wait", {{"seconds", 2.0}}));
  blocks.push_back(block("down", "LandAll"));
  return json{{"version", 1}, {"name", "show"}, {"blocks", blocks}}.dump();
}

}  // namespace

static void BM_ParseProgram(benchmark::State& state) {
  const auto doc = show_document();
  for (auto _ : state) benchmark::DoNotOptimize(blocks::parse(doc));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(doc.size()));
}
BENCHMARK(BM_ParseProgram);

static void BM_SerializeProgram(benchmark::State& state) {
  const auto program = blocks::parse(show_document());
  for (auto _ : state) benchmark::DoNotOptimize(blocks::serialize(program));
}
BENCHMARK(BM_SerializeProgram);

static void BM_PreviewShow(benchmark::State& state) {
  const auto program = blocks::parse(show_document());
  for (auto _ : state) benchmark::DoNotOptimize(sim::preview_run(program, {}, 10));
}
BENCHMARK(BM_PreviewShow)->Unit(benchmark::kMillisecond);

static void BM_TraceToJsonl(benchmark::State& state) {
  const auto trace = sim::preview_run(blocks::parse(show_document()), {}, 10);
  for (auto _ : state) benchmark::DoNotOptimize(sim::to_jsonl(trace));
  state.counters["entries"] = static_cast<double>(trace.entries.size());
}
BENCHMARK(BM_TraceToJsonl)->Unit(benchmark::kMillisecond);
