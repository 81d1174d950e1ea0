#include "eval/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "core/errors.hpp"

namespace d3fcnn {

std::string hardware_string() {
  std::string model = "unknown cpu";
  std::ifstream cpuinfo("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpuinfo, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        auto start = line.find_first_not_of(" \t", colon + 1);
        if (start != std::string::npos) model = line.substr(start);
      }
      break;
    }
  }
  return model + ", " + std::to_string(std::thread::hardware_concurrency()) +
         " threads";
}

double percentile(std::vector<double> samples, double q) {
  if (samples.empty()) throw ConfigError("percentile: no samples");
  if (q <= 0 || q > 100) throw ConfigError("percentile: q out of (0,100]");
  std::sort(samples.begin(), samples.end());
  const auto rank = std::size_t(
      std::ceil(q / 100.0 * double(samples.size())));
  return samples[std::max<std::size_t>(rank, 1) - 1];
}

BenchReport benchmark_latency(Model<float>& model,
                              const std::vector<Tensor<float>>& clips,
                              std::int64_t repetitions, std::int64_t warmup) {
  if (repetitions < 1) throw ConfigError("bench: need at least one repetition");
  if (warmup < 0) throw ConfigError("bench: negative warmup");
  if (clips.empty()) throw DataError("bench: no clips to time");
  for (const auto& c : clips)
    if (c.shape() != Shape{64, 64, 30, 1})
      throw ShapeError("bench: clips must be [64,64,30,1]");

  // batch-of-one copies reused across repetitions
  std::vector<TensorPtr<float>> batched;
  batched.reserve(clips.size());
  for (const auto& c : clips) {
    Tensor<float> b(Shape{1, 64, 64, 30, 1});
    std::copy(c.flat().begin(), c.flat().end(), b.flat().begin());
    batched.push_back(share(std::move(b)));
  }

  ForwardCtx ctx;  // inference defaults
  using clock = std::chrono::steady_clock;

  BenchReport rep;
  rep.stage = "forward";
  rep.clips = std::int64_t(clips.size());
  rep.repetitions = repetitions;
  rep.warmup = warmup;
  rep.hardware = hardware_string();
  rep.samples_s.reserve(std::size_t(repetitions));

  for (std::int64_t i = 0; i < warmup + repetitions; ++i) {
    const TensorPtr<float>& x = batched[std::size_t(i) % batched.size()];
    const auto t0 = clock::now();
    auto logits = model.forward(x, ctx);
    const auto t1 = clock::now();
    (void)logits;
    if (i >= warmup)
      rep.samples_s.push_back(std::chrono::duration<double>(t1 - t0).count());
  }

  double sum = 0;
  for (double s : rep.samples_s) sum += s;
  rep.mean_s = sum / double(rep.samples_s.size());
  rep.p50_s = percentile(rep.samples_s, 50);
  rep.p95_s = percentile(rep.samples_s, 95);
  return rep;
}

void write_bench_csv(const std::vector<BenchReport>& reports,
                     const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << "stage,clips,repetitions,warmup,mean_s,p50_s,p95_s,hardware\n";
  for (const auto& r : reports) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s,%lld,%lld,%lld,%.10g,%.10g,%.10g,",
                  r.stage.c_str(), (long long)r.clips, (long long)r.repetitions,
                  (long long)r.warmup, r.mean_s, r.p50_s, r.p95_s);
    f << buf << '"' << r.hardware << '"' << "\n";
  }
  if (!f) throw IoError("cannot write " + path);
}

}  // namespace d3fcnn
