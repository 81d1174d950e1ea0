#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "data/batcher.hpp"
#include "nn/model.hpp"

namespace d3fcnn {

/// Count grid with rows = true class, columns = predicted class.
struct ConfusionMatrix {
  std::int64_t n = 0;
  std::vector<std::int64_t> counts;  // row-major n*n

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::int64_t n_classes);

  std::int64_t& at(std::int64_t truth, std::int64_t pred);
  std::int64_t at(std::int64_t truth, std::int64_t pred) const;
  std::int64_t row_sum(std::int64_t truth) const;
  std::int64_t trace() const;
  std::int64_t total() const;
};

ConfusionMatrix tally_confusion(const std::vector<std::int64_t>& truth,
                                const std::vector<std::int64_t>& predicted,
                                std::int64_t n_classes);

struct EvalReport {
  double accuracy = 0;                // trace / total
  double loss = 0;                    // mean cross-entropy (NaN when unknown)
  std::vector<double> per_class;      // row accuracy; NaN for empty classes
  ConfusionMatrix cm;
};

/// Analytics over an already-tallied matrix (model-free, used by stubs too).
EvalReport report_from_confusion(ConfusionMatrix cm);

/// Full eval pass: midpoint-sampled batches in infer mode, argmax prediction.
EvalReport evaluate(Model<float>& model, BatchSource& test, std::uint64_t seed);

struct ConfusedPair {
  std::int64_t true_class = 0;
  std::int64_t predicted = 0;          // strongest wrong column of the row
  double true_class_accuracy = 0;
  std::string formatted;               // "A → B (acc%)"
};

/// The k weakest classes with at least one off-diagonal count, ascending by
/// their own accuracy, ties broken by class index. Fewer qualify -> shorter.
std::vector<ConfusedPair> confused_pairs(const ConfusionMatrix& cm, std::int64_t k);

void write_confusion_csv(const ConfusionMatrix& cm, const std::string& path);
void write_per_class_csv(const EvalReport& report, const std::string& path);
void write_summary_csv(const EvalReport& report, const std::string& path);

}  // namespace d3fcnn
