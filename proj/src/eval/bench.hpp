#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/tensor.hpp"
#include "nn/model.hpp"

namespace d3fcnn {

struct BenchReport {
  std::string stage;          // what was timed, e.g. "forward"
  double mean_s = 0;          // seconds per 30-frame clip
  double p50_s = 0;
  double p95_s = 0;
  std::int64_t clips = 0;     // distinct clips cycled through
  std::int64_t repetitions = 0;
  std::int64_t warmup = 0;
  std::string hardware;       // cpu model and thread count
  std::vector<double> samples_s;  // every timed repetition, in order
};

/// Reads the cpu model name and logical core count from the host.
std::string hardware_string();

/// Nearest-rank percentile of an unsorted sample set, q in (0, 100].
double percentile(std::vector<double> samples, double q);

/// Times infer-mode forward passes at batch size 1, cycling through the
/// given clips. Warm-up repetitions run first and are discarded.
BenchReport benchmark_latency(Model<float>& model,
                              const std::vector<Tensor<float>>& clips,
                              std::int64_t repetitions, std::int64_t warmup = 5);

/// One row per report: stage,clips,repetitions,warmup,mean_s,p50_s,p95_s,hardware.
void write_bench_csv(const std::vector<BenchReport>& reports,
                     const std::string& path);

}  // namespace d3fcnn
