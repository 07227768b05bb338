// Colored OpenMP kernels against their single-thread reference.
#include "pcaopt/assembly.hpp"
#include "pcaopt/forward.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <memory>

using namespace pcaopt;

namespace {

struct Fixture {
  SplineSpace space;
  ModelParams params;
  Vec Y, Ydot;
  explicit Fixture(int ne) : space(SplineSpace::build(ne, 3000.0)) {
    Y = make_initial_conditions(space, InitialConditionSpec{});
    Ydot = Vec::Zero(Y.size());
  }
};

Fixture& fixture(int ne) {
  static std::map<int, std::unique_ptr<Fixture>> cache;
  auto& f = cache[ne];
  if (!f) f = std::make_unique<Fixture>(ne);
  return *f;
}

AssemblyMode mode_of(const benchmark::State& st) {
  return st.range(1) ? AssemblyMode::Colored : AssemblyMode::Serial;
}

void BM_Residual(benchmark::State& st) {
  auto& f = fixture(static_cast<int>(st.range(0)));
  Vec R;
  for (auto _ : st) {
    forward_residual(f.space, f.params, f.Y, f.Ydot, 0.006, 0.4, R, mode_of(st));
    benchmark::DoNotOptimize(R.data());
  }
  st.SetLabel(st.range(1) ? "colored" : "serial");
}

void BM_Jacobian(benchmark::State& st) {
  auto& f = fixture(static_cast<int>(st.range(0)));
  BlockMatrix J(f.space.pattern());
  for (auto _ : st) {
    forward_jacobian(f.space, f.params, f.Y, 0.006, 0.4, J, mode_of(st));
    benchmark::DoNotOptimize(J.block(0, 0).data());
  }
  st.SetLabel(st.range(1) ? "colored" : "serial");
}

void BM_Matvec(benchmark::State& st) {
  auto& f = fixture(static_cast<int>(st.range(0)));
  BlockMatrix J(f.space.pattern());
  forward_jacobian(f.space, f.params, f.Y, 0.006, 0.4, J);
  Vec y;
  for (auto _ : st) {
    J.apply(f.Y, y, st.range(1) != 0);
    benchmark::DoNotOptimize(y.data());
  }
  st.SetLabel(st.range(1) ? "parallel" : "serial");
}

}  // namespace

BENCHMARK(BM_Residual)->ArgsProduct({{32, 64, 128}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Jacobian)->ArgsProduct({{32, 64, 128}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Matvec)->ArgsProduct({{32, 64, 128}, {0, 1}})->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
