// Go/no-go gate over the whole engine: ten checks, one [PASS]/[FAIL] line
// each, exit code equal to the number of failures. Each line carries the
// wall time and a short measurement so a red row explains itself. The slow
// rows (finite differences, the toy-set training run) enforce their own
// runtime ceilings.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "core/conv.hpp"
#include "core/pointwise.hpp"
#include "core/pool.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "data/batcher.hpp"
#include "data/clip.hpp"
#include "data/dataset.hpp"
#include "data/image_io.hpp"
#include "eval/bench.hpp"
#include "eval/metrics.hpp"
#include "fdcheck.hpp"
#include "nn/checkpoint.hpp"
#include "nn/model.hpp"
#include "opt/schedule.hpp"
#include "opt/trainer.hpp"
#include "oracles.hpp"

using namespace d3fcnn;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  std::vector<std::string> failures;
  std::string note;

  void fail(std::string what) {
    if (failures.size() < 8) failures.push_back(std::move(what));
  }
  void require(bool ok, const std::string& what) {
    if (!ok) fail(what);
  }
};

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

std::string num(double v, const char* f = "%.3g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

template <typename T>
bool bitwise_equal(const Tensor<T>& a, const Tensor<T>& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data(), b.data(), std::size_t(a.size()) * sizeof(T)) == 0;
}

// ---------------------------------------------------------------- 1: shapes

void crit_shapes(Criterion& c) {
  Rng rng(4201);
  Model<float> model(ModelConfig{}, rng);
  Tensor<float> x(Shape{1, 64, 64, 30, 1});
  Rng data = rng.stream("data");
  for (auto& v : x.flat()) v = float(data.uniform());

  std::vector<Model<float>::TraceEntry> trace;
  auto logits = model.forward(share(std::move(x)), ForwardCtx{}, &trace);

  const std::vector<std::pair<std::string, Shape>> want = {
      {"conv3d_1", {1, 64, 64, 30, 32}}, {"bn_1", {1, 64, 64, 30, 32}},
      {"lrelu_1", {1, 64, 64, 30, 32}},  {"conv3d_2", {1, 64, 64, 30, 32}},
      {"bn_2", {1, 64, 64, 30, 32}},     {"lrelu_2", {1, 64, 64, 30, 32}},
      {"maxpool", {1, 22, 22, 10, 32}},  {"dropout_1", {1, 22, 22, 10, 32}},
      {"conv3d_3", {1, 20, 20, 8, 64}},  {"bn_3", {1, 20, 20, 8, 64}},
      {"lrelu_3", {1, 20, 20, 8, 64}},   {"conv3d_4", {1, 18, 18, 6, 64}},
      {"bn_4", {1, 18, 18, 6, 64}},      {"lrelu_4", {1, 18, 18, 6, 64}},
      {"dropout_2", {1, 18, 18, 6, 64}}, {"conv3d_5", {1, 18, 18, 1, 128}},
      {"reshape", {1, 18, 18, 128}},     {"conv2d_1", {1, 8, 8, 128}},
      {"bn_5", {1, 8, 8, 128}},          {"lrelu_5", {1, 8, 8, 128}},
      {"conv2d_2", {1, 8, 8, 60}},       {"avgpool", {1, 60}},
  };
  c.require(trace.size() == want.size(),
            "trace has " + std::to_string(trace.size()) + " rows, want " +
                std::to_string(want.size()));
  for (std::size_t i = 0; i < want.size() && i < trace.size(); ++i) {
    if (trace[i].layer != want[i].first || trace[i].shape != want[i].second) {
      c.fail("stage " + std::to_string(i) + ": got " + trace[i].layer + " " +
             shape_str(trace[i].shape) + ", want " + want[i].first + " " +
             shape_str(want[i].second));
    }
  }
  c.require(logits->shape() == Shape{1, 60},
            "logits shape " + shape_str(logits->shape()));
  for (float v : logits->flat())
    if (!std::isfinite(v)) {
      c.fail("non-finite logit");
      break;
    }
  c.note = std::to_string(want.size()) + " stages, " +
           std::to_string(model.param_count()) + " params";
}

// --------------------------------------------------- 2: kernels vs oracles

template <typename T>
double conv3d_case(Rng& cs, std::int64_t B, std::int64_t H, std::int64_t W,
                   std::int64_t Tn, std::int64_t CI, std::int64_t CO,
                   std::array<std::int64_t, 3> k, std::array<std::int64_t, 3> s,
                   Pad pad) {
  Rng dr = cs.stream("data");
  Tensor<T> x(Shape{B, H, W, Tn, CI});
  for (auto& v : x.flat()) v = T(dr.uniform(-1.0, 1.0));
  Tensor<T> w(Shape{k[0], k[1], k[2], CI, CO});
  for (auto& v : w.flat()) v = T(dr.uniform(-0.5, 0.5));
  Tensor<T> b(Shape{CO});
  for (auto& v : b.flat()) v = T(dr.uniform(-0.5, 0.5));

  Tensor<T> fast = conv3d_forward(x, w, b, s, pad);
  Tensor<T> slow = oracle::conv3d(x, w, b, s, pad);
  if (fast.shape() != slow.shape()) return 1e9;
  return oracle::max_abs_diff(fast, slow);
}

template <typename T>
double conv2d_case(Rng& cs, std::int64_t B, std::int64_t H, std::int64_t W,
                   std::int64_t CI, std::int64_t CO, std::array<std::int64_t, 2> k,
                   std::array<std::int64_t, 2> s, Pad pad) {
  Rng dr = cs.stream("data");
  Tensor<T> x(Shape{B, H, W, CI});
  for (auto& v : x.flat()) v = T(dr.uniform(-1.0, 1.0));
  Tensor<T> w(Shape{k[0], k[1], CI, CO});
  for (auto& v : w.flat()) v = T(dr.uniform(-0.5, 0.5));
  Tensor<T> b(Shape{CO});
  for (auto& v : b.flat()) v = T(dr.uniform(-0.5, 0.5));

  Tensor<T> fast = conv2d_forward(x, w, b, s, pad);
  Tensor<T> slow = oracle::conv2d(x, w, b, s, pad);
  if (fast.shape() != slow.shape()) return 1e9;
  return oracle::max_abs_diff(fast, slow);
}

template <typename T>
double maxpool_case(Rng& cs, std::int64_t B, std::int64_t H, std::int64_t W,
                    std::int64_t Tn, std::int64_t C, std::array<std::int64_t, 3> k,
                    std::array<std::int64_t, 3> s, bool ceil_mode) {
  Rng dr = cs.stream("data");
  Tensor<T> x(Shape{B, H, W, Tn, C});
  for (auto& v : x.flat()) v = T(dr.uniform(-1.0, 1.0));

  PoolResult<T> fast = maxpool3d_forward(x, k, s, ceil_mode);
  Tensor<T> slow = oracle::maxpool3d(x, k, s, ceil_mode);
  if (fast.y.shape() != slow.shape()) return 1e9;
  return bitwise_equal(fast.y, slow) ? 0.0 : oracle::max_abs_diff(fast.y, slow);
}

void crit_oracles(Criterion& c) {
  Rng rng(4202);
  const int cases = 60;
  double worst3 = 0, worst2 = 0, worstp = 0;

  for (int i = 0; i < cases; ++i) {
    Rng cs = rng.stream("conv3d-" + std::to_string(i));
    const std::int64_t B = 1 + cs.uniform_int(2);
    const std::int64_t H = 3 + cs.uniform_int(6), W = 3 + cs.uniform_int(6);
    const std::int64_t T = 3 + cs.uniform_int(5);
    const std::int64_t CI = 1 + cs.uniform_int(3), CO = 1 + cs.uniform_int(4);
    const Pad pad = cs.uniform_int(2) ? Pad::same : Pad::valid;
    const std::int64_t ext[3] = {H, W, T};
    std::array<std::int64_t, 3> k{}, s{};
    for (int d = 0; d < 3; ++d) {
      k[d] = 1 + cs.uniform_int(3);
      if (pad == Pad::valid && k[d] > ext[d]) k[d] = ext[d];
      s[d] = 1 + cs.uniform_int(2);
    }
    const double diff = (i % 2 == 0)
                            ? conv3d_case<double>(cs, B, H, W, T, CI, CO, k, s, pad)
                            : conv3d_case<float>(cs, B, H, W, T, CI, CO, k, s, pad);
    worst3 = std::max(worst3, diff);
    if (diff > 1e-6) c.fail("conv3d case " + std::to_string(i) + ": diff " + num(diff));
  }

  for (int i = 0; i < cases; ++i) {
    Rng cs = rng.stream("conv2d-" + std::to_string(i));
    const std::int64_t B = 1 + cs.uniform_int(3);
    const std::int64_t H = 3 + cs.uniform_int(8), W = 3 + cs.uniform_int(8);
    const std::int64_t CI = 1 + cs.uniform_int(4), CO = 1 + cs.uniform_int(5);
    const Pad pad = cs.uniform_int(2) ? Pad::same : Pad::valid;
    const std::int64_t ext[2] = {H, W};
    std::array<std::int64_t, 2> k{}, s{};
    for (int d = 0; d < 2; ++d) {
      k[d] = 1 + cs.uniform_int(3);
      if (pad == Pad::valid && k[d] > ext[d]) k[d] = ext[d];
      s[d] = 1 + cs.uniform_int(2);
    }
    const double diff = (i % 2 == 0)
                            ? conv2d_case<double>(cs, B, H, W, CI, CO, k, s, pad)
                            : conv2d_case<float>(cs, B, H, W, CI, CO, k, s, pad);
    worst2 = std::max(worst2, diff);
    if (diff > 1e-6) c.fail("conv2d case " + std::to_string(i) + ": diff " + num(diff));
  }

  for (int i = 0; i < cases; ++i) {
    Rng cs = rng.stream("pool-" + std::to_string(i));
    const std::int64_t B = 1 + cs.uniform_int(2);
    const std::int64_t H = 2 + cs.uniform_int(8), W = 2 + cs.uniform_int(8);
    const std::int64_t T = 2 + cs.uniform_int(6);
    const std::int64_t C = 1 + cs.uniform_int(3);
    const bool ceil_mode = cs.uniform_int(2) != 0;
    const std::int64_t ext[3] = {H, W, T};
    std::array<std::int64_t, 3> k{}, s{};
    for (int d = 0; d < 3; ++d) {
      k[d] = 1 + cs.uniform_int(3);
      if (!ceil_mode && k[d] > ext[d]) k[d] = ext[d];
      s[d] = 1 + cs.uniform_int(3);
    }
    const double diff = (i % 2 == 0)
                            ? maxpool_case<double>(cs, B, H, W, T, C, k, s, ceil_mode)
                            : maxpool_case<float>(cs, B, H, W, T, C, k, s, ceil_mode);
    worstp = std::max(worstp, diff);
    if (diff != 0.0) c.fail("maxpool3d case " + std::to_string(i) + ": diff " + num(diff));
  }

  c.note = std::to_string(cases) + " cases/op; worst conv3d " + num(worst3) +
           ", conv2d " + num(worst2) + ", pool " + num(worstp);
}

// ------------------------------------------- 3: gradients vs finite diffs

void crit_gradients(Criterion& c) {
  using fdcheck::check_layer;
  using fdcheck::random_tensor;

  struct Case {
    const char* what;
    std::function<fdcheck::LayerCheckResult()> run;
  };
  const std::vector<Case> cases = {
      {"conv3d same", [] {
         Rng rng(101);
         Rng init = rng.stream("init");
         Conv3dLayer<double> l("conv", {3, 3, 3}, 3, 4, {1, 1, 1}, Pad::same, init);
         Rng data = rng.stream("data");
         return check_layer(l, random_tensor(Shape{2, 4, 4, 5, 3}, data), rng);
       }},
      {"conv3d strided valid", [] {
         Rng rng(102);
         Rng init = rng.stream("init");
         Conv3dLayer<double> l("conv", {2, 3, 2}, 2, 3, {2, 1, 2}, Pad::valid, init);
         Rng data = rng.stream("data");
         return check_layer(l, random_tensor(Shape{2, 5, 5, 4, 2}, data), rng);
       }},
      {"conv2d strided", [] {
         Rng rng(103);
         Rng init = rng.stream("init");
         Conv2dLayer<double> l("conv", {3, 3}, 3, 4, {2, 2}, Pad::valid, init);
         Rng data = rng.stream("data");
         return check_layer(l, random_tensor(Shape{2, 7, 7, 3}, data), rng);
       }},
      {"conv2d 1x1", [] {
         Rng rng(104);
         Rng init = rng.stream("init");
         Conv2dLayer<double> l("conv", {1, 1}, 5, 2, {1, 1}, Pad::valid, init);
         Rng data = rng.stream("data");
         return check_layer(l, random_tensor(Shape{3, 4, 4, 5}, data), rng);
       }},
      {"batch norm", [] {
         Rng rng(105);
         BatchNormLayer<double> l("bn", 4, 1e-5, 0.99);
         Rng data = rng.stream("data");
         return check_layer(l, random_tensor(Shape{3, 4, 4, 2, 4}, data), rng);
       }},
      {"leaky relu", [] {
         Rng rng(106);
         LeakyReluLayer<double> l("lrelu", 0.3);
         Rng data = rng.stream("data");
         Tensor<double> x = random_tensor(Shape{2, 5, 5, 3, 4}, data);
         for (auto& v : x.flat())
           if (std::abs(v) < 0.05) v += (v >= 0.0 ? 0.1 : -0.1);
         return check_layer(l, std::move(x), rng);
       }},
      {"dropout", [] {
         Rng rng(107);
         DropoutLayer<double> l("drop", 0.25);
         Rng data = rng.stream("data");
         return check_layer(l, random_tensor(Shape{2, 6, 6, 2, 3}, data), rng);
       }},
      {"max pool", [] {
         Rng rng(108);
         MaxPool3dLayer<double> l("pool", {3, 3, 3}, {3, 3, 3}, true);
         Tensor<double> x(Shape{2, 7, 7, 5, 2});
         std::vector<double> vals(std::size_t(x.size()));
         for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = 1e-3 * double(i);
         Rng shuffle_rng = rng.stream("shuffle");
         shuffle_rng.shuffle(vals);
         std::copy(vals.begin(), vals.end(), x.flat().begin());
         return check_layer(l, std::move(x), rng);
       }},
      {"squeeze", [] {
         Rng rng(109);
         SqueezeTimeLayer<double> l("squeeze");
         Rng data = rng.stream("data");
         return check_layer(l, random_tensor(Shape{2, 4, 4, 1, 6}, data), rng);
       }},
      {"global avg pool", [] {
         Rng rng(110);
         GlobalAvgPool2dLayer<double> l("gap");
         Rng data = rng.stream("data");
         return check_layer(l, random_tensor(Shape{3, 5, 5, 4}, data), rng);
       }},
  };

  double worst_layer = 0;
  for (const auto& k : cases) {
    fdcheck::LayerCheckResult res;
    try {
      res = k.run();
    } catch (const std::exception& e) {
      c.fail(std::string(k.what) + ": " + e.what());
      continue;
    }
    worst_layer = std::max(worst_layer, res.worst());
    if (res.worst_input >= 1e-4)
      c.fail(std::string(k.what) + ": input rel err " + num(res.worst_input));
    for (const auto& [name, worst] : res.worst_params)
      if (worst >= 1e-4)
        c.fail(std::string(k.what) + " " + name + ": rel err " + num(worst));
  }

  Rng w(888);
  const double net = fdcheck::whole_net_worst(w, 60);
  c.require(net < 1e-3, "whole-net rel err " + num(net));
  c.note = "worst layer rel " + num(worst_layer) + ", whole-net rel " + num(net) +
           " over 60 sampled params";
}

// ----------------------------------------------------- 4: softmax contract

void crit_softmax(Criterion& c) {
  const std::int64_t rows = 10000, cols = 60;
  Rng rng(4204);
  Tensor<double> logits(Shape{rows, cols});
  for (auto& v : logits.flat()) v = rng.uniform(-1000.0, 1000.0);
  // one saturated row on top of the random sweep
  for (std::int64_t j = 0; j < cols; ++j) logits.at(std::int64_t(0), j) = -1000.0;
  logits.at(std::int64_t(0), std::int64_t(7)) = 1000.0;

  Tensor<double> p = softmax(logits);
  double worst_sum = 0;
  for (std::int64_t r = 0; r < rows; ++r) {
    double sum = 0;
    for (std::int64_t j = 0; j < cols; ++j) {
      const double v = p.at(r, j);
      if (!(v >= 0.0 && v <= 1.0) || !std::isfinite(v)) {
        c.fail("row " + std::to_string(r) + ": probability " + num(v));
        break;
      }
      sum += v;
    }
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
  }
  c.require(worst_sum <= 1e-6, "worst |row sum - 1| = " + num(worst_sum));
  c.require(p.at(std::int64_t(0), std::int64_t(7)) > 0.999999, "saturated row not near one-hot");

  // shifting a row by a constant must not move the distribution
  Tensor<double> shifted = logits;
  Rng sr = rng.stream("shift");
  for (std::int64_t r = 0; r < rows; ++r) {
    const double s = sr.uniform(-1000.0, 1000.0);
    for (std::int64_t j = 0; j < cols; ++j) shifted.at(r, j) += s;
  }
  Tensor<double> q = softmax(shifted);
  const double drift = oracle::max_abs_diff(p, q);
  c.require(drift <= 1e-6, "shift drift " + num(drift));
  c.note = std::to_string(rows) + " rows, worst |sum-1| " + num(worst_sum) +
           ", shift drift " + num(drift);
}

// ------------------------------------------------- 5: frame selector sweep

void crit_selector(Criterion& c) {
  std::int64_t checked = 0;
  for (std::int64_t L = 1; L <= 300; ++L) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng rng(0xACCE5500u + std::uint64_t(L) * 1024 + seed);
      const std::vector<std::int64_t> idx = select_frames(L, rng);
      ++checked;
      if (idx.size() != 30) {
        c.fail("L=" + std::to_string(L) + ": " + std::to_string(idx.size()) + " indices");
        continue;
      }
      bool in_range = true;
      for (std::int64_t i : idx)
        if (i < 0 || i >= L) in_range = false;
      if (!in_range) {
        c.fail("L=" + std::to_string(L) + ": index out of range");
        continue;
      }
      if (L >= 60) {
        for (std::size_t i = 1; i < idx.size(); ++i)
          if (idx[i] - idx[i - 1] != 2) {
            c.fail("L=" + std::to_string(L) + ": gap " +
                   std::to_string(idx[i] - idx[i - 1]) + " in strided window");
            break;
          }
      } else if (L >= 30) {
        for (std::size_t i = 1; i < idx.size(); ++i)
          if (idx[i] - idx[i - 1] != 1) {
            c.fail("L=" + std::to_string(L) + ": contiguous window has gap");
            break;
          }
      }
      if (c.failures.size() >= 8) return;
    }
  }

  // L=45 leaves 16 legal window starts; over the same 100 draws each start
  // may appear at most floor(np + 3 sigma) = 13 times if the pick is uniform
  std::array<int, 16> bins{};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(0xACCE5500u + 45u * 1024 + seed);
    const std::vector<std::int64_t> idx = select_frames(45, rng);
    if (idx[0] >= 0 && idx[0] < 16) ++bins[std::size_t(idx[0])];
  }
  int peak = 0;
  for (int b : bins) peak = std::max(peak, b);
  c.require(peak <= 13, "start frequency peak " + std::to_string(peak) + " > 13 of 100");

  // the same bound at 16x the draws, where 3 sigma is [71, 129] per bin
  std::array<int, 16> wide{};
  for (std::uint64_t seed = 0; seed < 1600; ++seed) {
    Rng rng(0xFEED0000u + seed);
    const std::vector<std::int64_t> idx = select_frames(45, rng);
    if (idx[0] >= 0 && idx[0] < 16) ++wide[std::size_t(idx[0])];
  }
  for (std::size_t b = 0; b < wide.size(); ++b)
    if (wide[b] < 71 || wide[b] > 129)
      c.fail("start " + std::to_string(b) + " drawn " + std::to_string(wide[b]) +
             " of 1600, outside [71,129]");

  c.note = std::to_string(checked) + " (length, seed) draws; L=45 peak " +
           std::to_string(peak) + "/100";
}

// ------------------------------------------------------------- 6: schedule

void crit_schedule(Criterion& c) {
  const LrSchedule s = LrSchedule::default_for(50);
  const std::int64_t ipe = 10;
  const double slack = 1e-15;
  for (int e = 1; e <= 50; ++e)
    for (std::int64_t it = 0; it < ipe; ++it) {
      const double lr = s.lr_at(e, it, ipe);
      if (e <= 25) {
        if (lr < 5e-4 - slack || lr > 9.8e-4 + slack)
          c.fail("epoch " + std::to_string(e) + " it " + std::to_string(it) +
                 ": lr " + num(lr, "%.6e") + " outside [5e-4, 9.8e-4]");
      } else if (e <= 45) {
        if (lr < 1e-4 - slack || lr > 4e-4 + slack)
          c.fail("epoch " + std::to_string(e) + " it " + std::to_string(it) +
                 ": lr " + num(lr, "%.6e") + " outside [1e-4, 4e-4]");
      } else if (lr != 4e-5) {
        c.fail("epoch " + std::to_string(e) + ": lr " + num(lr, "%.6e") + " != 4e-5");
      }
      if (c.failures.size() >= 8) return;
    }

  const std::pair<std::array<int, 2>, double> vertices[] = {
      {{1, 0}, 5e-4}, {{3, 0}, 9.8e-4}, {{5, 0}, 5e-4},
      {{26, 0}, 1e-4}, {{28, 0}, 4e-4}, {{46, 0}, 4e-5}, {{50, 0}, 4e-5},
  };
  for (const auto& [at, want] : vertices) {
    const double lr = s.lr_at(at[0], at[1], ipe);
    c.require(lr == want, "vertex epoch " + std::to_string(at[0]) + ": lr " +
                              num(lr, "%.6e") + " != " + num(want, "%.6e"));
  }
  c.note = "500 (epoch, step) points in band, 7 exact vertices";
}

// ------------------------------------------------ toy data for 7 and 8

// Four classes, one per cardinal direction of a bright square drifting over
// a zero background. Real 16-bit PGM frames so the full ROI, resize and
// normalization path runs.
void write_blob_clip(const fs::path& dir, int frames, int direction,
                     std::int64_t r0, std::int64_t c0, std::uint16_t depth) {
  fs::create_directories(dir);
  const std::int64_t side = 56, blob = 10;
  for (int f = 0; f < frames; ++f) {
    DepthFrame fr;
    fr.width = side;
    fr.height = side;
    fr.depth.assign(std::size_t(side * side), 0);
    const std::int64_t step = f / 2;
    std::int64_t r = r0, col = c0;
    switch (direction) {
      case 0: col += step; break;
      case 1: col -= step; break;
      case 2: r += step; break;
      default: r -= step; break;
    }
    for (std::int64_t i = 0; i < blob; ++i)
      for (std::int64_t j = 0; j < blob; ++j) {
        const std::int64_t rr = r + i, cc = col + j;
        if (rr >= 0 && rr < side && cc >= 0 && cc < side)
          fr.at(rr, cc) = depth;
      }
    char name[16];
    std::snprintf(name, sizeof name, "f%04d.pgm", f);
    write_pgm16(fr, (dir / name).string());
  }
}

struct BlobFixture {
  std::string train_root;
  std::string val_root;
};

BlobFixture build_blob_fixture(const fs::path& base) {
  std::error_code ec;
  fs::remove_all(base, ec);
  BlobFixture fx{(base / "train").string(), (base / "val").string()};
  Rng rng(0xB10BF1C5u);
  const int lengths[5] = {30, 36, 45, 60, 66};
  int performer = 0;
  for (int split = 0; split < 2; ++split) {
    const int per_class = split == 0 ? 10 : 4;
    const fs::path root = split == 0 ? fx.train_root : fx.val_root;
    for (int cls = 0; cls < 4; ++cls)
      for (int i = 0; i < per_class; ++i) {
        ++performer;
        char name[32];
        std::snprintf(name, sizeof name, "S001C001P%03dR001A%03d", performer, cls + 1);
        // start so the 33-pixel worst-case drift stays inside the frame
        std::int64_t r0 = 8 + rng.uniform_int(30), c0 = 8 + rng.uniform_int(30);
        switch (cls) {
          case 0: c0 = 1 + rng.uniform_int(10); break;
          case 1: c0 = 34 + rng.uniform_int(10); break;
          case 2: r0 = 1 + rng.uniform_int(10); break;
          default: r0 = 34 + rng.uniform_int(10); break;
        }
        const auto depth = std::uint16_t(1800 + 100 * rng.uniform_int(9));
        write_blob_clip(root / name, lengths[(performer + i) % 5], cls, r0, c0, depth);
      }
  }
  return fx;
}

// --------------------------------------------- 7: overfit and determinism

void crit_overfit(Criterion& c, const BlobFixture& fx) {
  const DatasetIndex train = scan_dataset(fx.train_root, Naming::ntu);
  const DatasetIndex val = scan_dataset(fx.val_root, Naming::ntu);
  c.require(train.clips.size() == 40, "train scan found " + std::to_string(train.clips.size()));
  c.require(val.clips.size() == 16, "val scan found " + std::to_string(val.clips.size()));
  c.require(train.n_classes() == 4, "train classes " + std::to_string(train.n_classes()));
  if (!c.failures.empty()) return;

  ModelConfig mc;
  mc.n_classes = 4;
  TrainConfig tc;
  tc.epochs = 30;
  tc.seed = 4207;
  tc.schedule = LrSchedule::default_for(30);
  tc.write_history = false;
  tc.write_checkpoints = false;

  Rng init(tc.seed);
  Model<float> model(mc, init);
  DiskBatchSource tr(train.clips, 12);
  DiskBatchSource va(val.clips, 12);
  const History h = fit(model, tr, &va, tc);

  double best = 0;
  int reached = 0;
  for (const auto& e : h.epochs) {
    best = std::max(best, e.train_acc);
    if (reached == 0 && e.train_acc >= 0.95) reached = e.epoch;
  }
  c.require(best >= 0.95, "best train accuracy " + num(best, "%.4f") + " < 0.95");

  // same seed and schedule from scratch: the epoch records must reproduce
  TrainConfig tc2 = tc;
  tc2.epochs = 2;
  Rng init2(tc2.seed);
  Model<float> model2(mc, init2);
  DiskBatchSource tr2(train.clips, 12);
  DiskBatchSource va2(val.clips, 12);
  const History h2 = fit(model2, tr2, &va2, tc2);
  c.require(h2.epochs.size() == 2, "rerun produced " + std::to_string(h2.epochs.size()) + " epochs");
  for (std::size_t i = 0; i < h2.epochs.size() && i < h.epochs.size(); ++i) {
    const auto& a = h.epochs[i];
    const auto& b = h2.epochs[i];
    if (a.train_loss != b.train_loss || a.train_acc != b.train_acc ||
        a.val_loss != b.val_loss || a.val_acc != b.val_acc || a.lr != b.lr)
      c.fail("epoch " + std::to_string(i + 1) + " differs between identical runs");
  }
  c.require(h.lr_steps.size() >= h2.lr_steps.size() &&
                std::equal(h2.lr_steps.begin(), h2.lr_steps.end(), h.lr_steps.begin()),
            "per-step learning rates differ between identical runs");

  const double final_val = h.epochs.empty() ? 0.0 : h.epochs.back().val_acc;
  c.note = "best train acc " + num(best, "%.3f") +
           (reached ? " (hit 0.95 at epoch " + std::to_string(reached) + ")" : "") +
           ", final val acc " + num(final_val, "%.3f");
}

// ------------------------------------------------- 8: finetune freeze line

void crit_freeze(Criterion& c, const BlobFixture& fx, const fs::path& scratch) {
  const DatasetIndex val = scan_dataset(fx.val_root, Naming::ntu);
  ModelConfig mc;
  mc.n_classes = 4;
  Rng init(4208);
  Model<float> model(mc, init);

  // one ordinary epoch first so parameters and running statistics all move
  // off their initial values; "frozen stayed put" is then a real statement
  TrainConfig warm;
  warm.epochs = 1;
  warm.seed = 4218;
  warm.schedule.phases = {{1, 1, 5e-4, 5e-4, true}};
  warm.write_history = false;
  warm.write_checkpoints = false;
  {
    DiskBatchSource src(val.clips, 8);
    fit(model, src, nullptr, warm);
  }

  const std::string ckpt = (scratch / "freeze-base.bin").string();
  save_checkpoint(model, CheckpointMeta{4208, 1, 2}, ckpt);
  LoadedModel loaded = load_checkpoint(ckpt);
  Model<float>& tuned = loaded.model;
  tuned.freeze_for_finetune(3);

  struct Snap {
    std::string name;
    bool trainable = false;
    bool parameterized = false;
    std::vector<Tensor<float>> params;
    std::vector<Tensor<float>> buffers;
  };
  std::vector<Snap> before;
  for (Layer<float>* l : tuned.layers()) {
    Snap s{l->name(), l->trainable(), l->parameterized(), {}, {}};
    for (Param<float>* p : l->params()) s.params.push_back(p->value);
    for (auto& [bname, t] : l->buffers()) s.buffers.push_back(*t);
    before.push_back(std::move(s));
  }

  TrainConfig ft;
  ft.epochs = 3;
  ft.seed = 4228;
  ft.schedule.phases = {{1, 3, 1e-3, 1e-3, true}};
  ft.write_history = false;
  ft.write_checkpoints = false;
  {
    DiskBatchSource src(val.clips, 8);
    fit(tuned, src, nullptr, ft);
  }

  int updated_parameterized = 0;
  std::string updated_names;
  auto layers = tuned.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Layer<float>* l = layers[i];
    const Snap& s = before[i];
    bool param_changed = false;
    auto params = l->params();
    for (std::size_t p = 0; p < params.size(); ++p)
      if (!bitwise_equal(params[p]->value, s.params[p])) param_changed = true;
    bool buffer_changed = false;
    auto buffers = l->buffers();
    for (std::size_t b = 0; b < buffers.size(); ++b)
      if (!bitwise_equal(*buffers[b].second, s.buffers[b])) buffer_changed = true;

    if (!s.trainable) {
      if (param_changed) c.fail("frozen layer " + s.name + " parameters moved");
      if (buffer_changed) c.fail("frozen layer " + s.name + " running statistics moved");
    }
    if (param_changed && !s.trainable) continue;
    if (param_changed && s.parameterized) {
      ++updated_parameterized;
      updated_names += (updated_names.empty() ? "" : ", ") + s.name;
    }
  }
  c.require(updated_parameterized == 3,
            std::to_string(updated_parameterized) + " convolution layers updated, want 3 (" +
                updated_names + ")");
  c.note = "updated: " + updated_names;
}

// --------------------------------------------------- 9: checkpoint files

std::vector<char> slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return std::vector<char>(std::istreambuf_iterator<char>(f), {});
}

void spit(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(bytes.data(), std::streamsize(bytes.size()));
}

template <typename E>
bool fails_as(const std::string& path) {
  try {
    load_checkpoint(path);
  } catch (const E&) {
    return true;
  } catch (...) {
    return false;
  }
  return false;
}

void crit_checkpoint(Criterion& c, const fs::path& scratch) {
  ModelConfig mc;
  mc.n_classes = 7;
  Rng init(4209);
  Model<float> model(mc, init);

  // one training-mode pass so the running statistics are not all zeros/ones
  {
    Rng data = init.stream("data");
    Tensor<float> x(Shape{2, 64, 64, 30, 1});
    for (auto& v : x.flat()) v = float(data.uniform());
    Rng drop = init.stream("dropout");
    ForwardCtx ctx;
    ctx.training = true;
    ctx.rng = &drop;
    model.forward(share(std::move(x)), ctx);
  }

  Tensor<float> probe(Shape{1, 64, 64, 30, 1});
  Rng pr = init.stream("probe");
  for (auto& v : probe.flat()) v = float(pr.uniform());
  auto before = model.forward(share(Tensor<float>(probe)), ForwardCtx{});

  const std::string path = (scratch / "round-trip.bin").string();
  save_checkpoint(model, CheckpointMeta{4209, 3, 41}, path);
  LoadedModel loaded = load_checkpoint(path);
  c.require(loaded.meta.seed == 4209 && loaded.meta.epoch == 3 && loaded.meta.iteration == 41,
            "metadata did not round trip");

  auto orig_params = model.params();
  auto load_params = loaded.model.params();
  c.require(orig_params.size() == load_params.size(), "parameter count differs");
  for (std::size_t i = 0; i < orig_params.size() && i < load_params.size(); ++i)
    if (!bitwise_equal(orig_params[i]->value, load_params[i]->value)) {
      c.fail("parameter " + orig_params[i]->name + " not bitwise equal");
      break;
    }
  auto orig_layers = model.layers();
  auto load_layers = loaded.model.layers();
  for (std::size_t i = 0; i < orig_layers.size(); ++i) {
    auto ob = orig_layers[i]->buffers();
    auto lb = load_layers[i]->buffers();
    for (std::size_t b = 0; b < ob.size(); ++b)
      if (!bitwise_equal(*ob[b].second, *lb[b].second))
        c.fail("buffer " + orig_layers[i]->name() + "." + ob[b].first + " not bitwise equal");
  }

  auto after = loaded.model.forward(share(Tensor<float>(probe)), ForwardCtx{});
  c.require(bitwise_equal(*before, *after), "logits differ after reload");

  const std::vector<char> bytes = slurp(path);
  c.require(bytes.size() > 64, "checkpoint suspiciously small");

  auto mutated = bytes;
  mutated[0] ^= 0x40;
  const std::string bad_magic = (scratch / "bad-magic.bin").string();
  spit(bad_magic, mutated);
  c.require(fails_as<BadMagicError>(bad_magic), "corrupted magic not rejected as BadMagicError");

  mutated = bytes;
  mutated[8] = char(mutated[8] + 1);
  const std::string bad_version = (scratch / "bad-version.bin").string();
  spit(bad_version, mutated);
  c.require(fails_as<VersionError>(bad_version), "bumped version not rejected as VersionError");

  auto cut = bytes;
  cut.resize(bytes.size() / 2);
  const std::string truncated = (scratch / "truncated.bin").string();
  spit(truncated, cut);
  c.require(fails_as<TruncatedFileError>(truncated),
            "truncated file not rejected as TruncatedFileError");

  c.note = std::to_string(bytes.size()) + " bytes round-tripped bitwise";
}

// --------------------------------------- 10: report ranking and latency

void crit_reporting(Criterion& c) {
  ConfusionMatrix cm(3);
  cm.at(0, 0) = 4;
  cm.at(0, 1) = 5;
  cm.at(0, 2) = 1;
  cm.at(1, 1) = 9;
  cm.at(1, 2) = 1;
  cm.at(2, 2) = 10;
  const auto pairs = confused_pairs(cm, 10);
  c.require(pairs.size() == 2, "expected 2 ranked pairs, got " + std::to_string(pairs.size()));
  if (pairs.size() == 2) {
    c.require(pairs[0].formatted == "0 → 1 (40.00%)", "first pair: " + pairs[0].formatted);
    c.require(pairs[1].formatted == "1 → 2 (90.00%)", "second pair: " + pairs[1].formatted);
  }

  // tie on accuracy breaks toward the lower class index; k truncates
  ConfusionMatrix cm5(5);
  cm5.at(0, 0) = 2;
  cm5.at(0, 3) = 2;
  cm5.at(1, 1) = 1;
  cm5.at(1, 0) = 3;
  cm5.at(2, 2) = 1;
  cm5.at(2, 4) = 3;
  cm5.at(3, 3) = 4;
  cm5.at(4, 0) = 4;
  const auto top3 = confused_pairs(cm5, 3);
  const char* want5[3] = {"4 → 0 (0.00%)", "1 → 0 (25.00%)", "2 → 4 (25.00%)"};
  c.require(top3.size() == 3, "expected 3 ranked pairs, got " + std::to_string(top3.size()));
  for (std::size_t i = 0; i < top3.size() && i < 3; ++i)
    c.require(top3[i].formatted == want5[i],
              "rank " + std::to_string(i) + ": " + top3[i].formatted);

  Rng rng(4210);
  Model<float> model(ModelConfig{}, rng);
  Rng data = rng.stream("data");
  std::vector<Tensor<float>> clips;
  for (int i = 0; i < 2; ++i) {
    Tensor<float> clip(Shape{64, 64, 30, 1});
    for (auto& v : clip.flat()) v = float(data.uniform());
    clips.push_back(std::move(clip));
  }
  const BenchReport r = benchmark_latency(model, clips, 6, 2);
  c.require(r.stage == "forward", "stage " + r.stage);
  c.require(r.samples_s.size() == 6, "kept " + std::to_string(r.samples_s.size()) + " samples");
  for (double s : r.samples_s)
    if (s <= 0) c.fail("non-positive sample");
  c.require(r.mean_s > 0 && r.p50_s > 0 && r.p50_s <= r.p95_s, "percentile ordering broken");
  c.require(r.p50_s == percentile(r.samples_s, 50) && r.p95_s == percentile(r.samples_s, 95),
            "reported percentiles disagree with the samples");
  c.note = "forward mean " + num(r.mean_s, "%.3f") + " s, p50 " + num(r.p50_s, "%.3f") +
           " s, p95 " + num(r.p95_s, "%.3f") + " s per clip";
}

}  // namespace

int main() {
  std::printf("acceptance gate\n");
  std::fflush(stdout);

  const fs::path scratch = fs::temp_directory_path() / "d3fcnn-acceptance";
  std::error_code ec;
  fs::remove_all(scratch, ec);
  fs::create_directories(scratch);

  BlobFixture fx;
  try {
    fx = build_blob_fixture(scratch / "blobs");
  } catch (const std::exception& e) {
    std::printf("[FAIL] fixture build: %s\n", e.what());
    return 10;
  }

  int failed = 0;
  const auto run = [&failed](int id, const char* name, double limit_s,
                             const std::function<void(Criterion&)>& fn) {
    Criterion c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.fail(std::string("unexpected exception: ") + e.what());
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit_s > 0 && dt > limit_s)
      c.fail("ran " + num(dt, "%.1f") + " s, ceiling " + num(limit_s, "%.0f") + " s");
    const bool ok = c.failures.empty();
    std::printf("[%s] %2d %-32s %7.1f s%s%s\n", ok ? "PASS" : "FAIL", id, name, dt,
                c.note.empty() ? "" : "  ", c.note.c_str());
    for (const auto& f : c.failures) std::printf("        - %s\n", f.c_str());
    std::fflush(stdout);
    if (!ok) ++failed;
  };

  run(1, "forward shape trace", 30, crit_shapes);
  run(2, "kernels vs naive oracles", 120, crit_oracles);
  run(3, "gradients vs finite differences", 300, crit_gradients);
  run(4, "softmax contract", 0, crit_softmax);
  run(5, "frame selector sweep", 0, crit_selector);
  run(6, "learning-rate schedule", 0, crit_schedule);
  run(7, "toy-set overfit and determinism", 1200,
      [&fx](Criterion& c) { crit_overfit(c, fx); });
  run(8, "finetune freeze boundary", 0,
      [&fx, &scratch](Criterion& c) { crit_freeze(c, fx, scratch); });
  run(9, "checkpoint round trip", 0,
      [&scratch](Criterion& c) { crit_checkpoint(c, scratch); });
  run(10, "report ranking and latency", 0, crit_reporting);

  std::printf("%d/10 criteria passed\n", 10 - failed);
  return failed;
}
