#include <benchmark/benchmark.h>

#include <vector>

#include "flowdrift/evaluation.hpp"
#include "flowdrift/features.hpp"
#include "flowdrift/flow.hpp"
#include "flowdrift/model.hpp"
#include "flowdrift/preprocess.hpp"
#include "flowdrift/rng.hpp"
#include "flowdrift/synthetic.hpp"

using namespace flowdrift;

namespace {

std::vector<PacketRecord> bench_trace(std::size_t n) {
  static const char* ips[] = {"10.0.0.1", "10.0.0.2", "10.0.0.3",
                              "10.0.0.4", "10.0.0.5", "10.0.0.6"};
  Rng rng(1);
  std::vector<PacketRecord> trace;
  trace.reserve(n);
  double ts = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ts += static_cast<double>(rng.bounded(2048)) / 1024.0;
    PacketRecord p;
    p.ts = ts;
    p.src_ip = ips[rng.bounded(6)];
    p.dst_ip = ips[rng.bounded(6)];
    if (p.dst_ip == p.src_ip) p.dst_ip = ips[(rng.bounded(5) + 1) % 6];
    p.src_port = 1000 + static_cast<int>(rng.bounded(16));
    p.dst_port = 80;
    p.proto = kProtoTcp;
    p.payload_len = static_cast<std::int64_t>(rng.bounded(1200));
    p.ip_len = 40 + p.payload_len;
    p.ttl = 64;
    p.tcp_flags = kTcpAck;
    p.tcp_window = 65535;
    p.tcp_seq = static_cast<std::uint32_t>(rng.bounded(1 << 30));
    trace.push_back(std::move(p));
  }
  return trace;
}

}  // namespace

static void BM_assemble(benchmark::State& state) {
  auto trace = bench_trace(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(assemble(trace, 64.0));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_assemble)->Arg(1000)->Arg(10000)->Arg(100000);

static void BM_extract(benchmark::State& state) {
  auto trace = bench_trace(static_cast<std::size_t>(state.range(0)));
  auto sessions = assemble(trace, 64.0);
  for (auto _ : state) {
    for (const FlowSession& flow : sessions) {
      benchmark::DoNotOptimize(extract(flow));
    }
  }
  state.SetItemsProcessed(state.iterations() * sessions.size());
}
BENCHMARK(BM_extract)->Arg(10000);

static void BM_minmax_transform(benchmark::State& state) {
  DriftGenerator gen(3);
  auto samples = gen.make(DriftGenerator::Population::kOffline, 10000);
  MinMaxScaler scaler = MinMaxScaler::fit(samples);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        scaler.transform(std::span<const LabeledSample>(samples)));
  }
  state.SetItemsProcessed(state.iterations() * samples.size());
}
BENCHMARK(BM_minmax_transform);

static void BM_partial_fit_linear(benchmark::State& state) {
  DriftGenerator gen(4);
  auto batch = gen.make(DriftGenerator::Population::kIncoming, 10000);
  LinearKind kind = static_cast<LinearKind>(state.range(0));
  for (auto _ : state) {
    Model model = LinearModel::make(kind, kFeatureCount, 0.01, 1e-4, 7);
    partial_fit(model, batch, ClassWeights{});
    benchmark::DoNotOptimize(model);
  }
  state.SetItemsProcessed(state.iterations() * batch.size());
}
BENCHMARK(BM_partial_fit_linear)->Arg(0)->Arg(1)->Arg(2);

static void BM_partial_fit_mlp(benchmark::State& state) {
  DriftGenerator gen(5);
  auto batch = gen.make(DriftGenerator::Population::kIncoming, 1000);
  for (auto _ : state) {
    Model model = MlpModel::glorot({kFeatureCount, 64, 64, 2}, 0.005, 7);
    partial_fit(model, batch, ClassWeights{});
    benchmark::DoNotOptimize(model);
  }
  state.SetItemsProcessed(state.iterations() * batch.size());
}
BENCHMARK(BM_partial_fit_mlp);

static void BM_auroc(benchmark::State& state) {
  Rng rng(6);
  std::size_t n = static_cast<std::size_t>(state.range(0));
  std::vector<double> scores(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = rng.uniform(-1.0, 1.0);
    labels[i] = static_cast<int>(rng.bounded(2));
  }
  labels[0] = 0;
  labels[1] = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(auroc(scores, labels));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_auroc)->Arg(10000)->Arg(100000);

BENCHMARK_MAIN();
