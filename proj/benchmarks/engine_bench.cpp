#include <benchmark/benchmark.h>

#include "fpclean/engine.hpp"
#include "fpclean/eval.hpp"
#include "standard_fixture.hpp"

namespace {

using namespace fpclean;

void BM_EvaluateComponents(benchmark::State& state) {
  const auto& f = testing::standard_fixture();
  SimulatedMatcher m(testing::standard_matcher_spec(f, 1));
  const auto c = testing::standard_config(1);
  Oracle oracle(std::make_unique<GroundTruthSource>(f.truth.assignment),
                BudgetLedger::with_defaults(c.lb_total, c.n_iterations, c.safety_factor));
  CleanupEngine engine(testing::standard_graph(f, m), m, oracle, c);
  for (auto _ : state) benchmark::DoNotOptimize(engine.evaluate_components());
}
BENCHMARK(BM_EvaluateComponents)->Unit(benchmark::kMicrosecond);

void BM_FullCleanup(benchmark::State& state) {
  const auto& f = testing::standard_fixture();
  for (auto _ : state) {
    SimulatedMatcher m(testing::standard_matcher_spec(f, 1));
    const auto c = testing::standard_config(1);
    Oracle oracle(std::make_unique<GroundTruthSource>(f.truth.assignment),
                  BudgetLedger::with_defaults(c.lb_total, c.n_iterations, c.safety_factor));
    CleanupEngine engine(testing::standard_graph(f, m), m, oracle, c);
    engine.run();
    benchmark::DoNotOptimize(engine.graph().live_edges().size());
  }
}
BENCHMARK(BM_FullCleanup)->Unit(benchmark::kMillisecond);

void BM_ScoreWithTransitive(benchmark::State& state) {
  const auto& f = testing::standard_fixture();
  SimulatedMatcher m(testing::standard_matcher_spec(f, 1));
  const auto g = testing::standard_graph(f, m);
  for (auto _ : state) benchmark::DoNotOptimize(score(g, f.truth, Scope::WithTransitive));
}
BENCHMARK(BM_ScoreWithTransitive)->Unit(benchmark::kMicrosecond);

}  // namespace
