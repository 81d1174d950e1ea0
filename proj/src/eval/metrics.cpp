#include "eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "core/errors.hpp"
#include "core/pointwise.hpp"

namespace d3fcnn {

ConfusionMatrix::ConfusionMatrix(std::int64_t n_classes) : n(n_classes) {
  if (n_classes < 1) throw ConfigError("confusion: need at least one class");
  counts.assign(std::size_t(n * n), 0);
}

std::int64_t& ConfusionMatrix::at(std::int64_t truth, std::int64_t pred) {
  return counts[std::size_t(truth * n + pred)];
}

std::int64_t ConfusionMatrix::at(std::int64_t truth, std::int64_t pred) const {
  return counts[std::size_t(truth * n + pred)];
}

std::int64_t ConfusionMatrix::row_sum(std::int64_t truth) const {
  std::int64_t s = 0;
  for (std::int64_t p = 0; p < n; ++p) s += at(truth, p);
  return s;
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t s = 0;
  for (std::int64_t c = 0; c < n; ++c) s += at(c, c);
  return s;
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t s = 0;
  for (std::int64_t v : counts) s += v;
  return s;
}

ConfusionMatrix tally_confusion(const std::vector<std::int64_t>& truth,
                                const std::vector<std::int64_t>& predicted,
                                std::int64_t n_classes) {
  if (truth.size() != predicted.size())
    throw ShapeError("confusion: truth and prediction counts differ");
  ConfusionMatrix cm(n_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const std::int64_t t = truth[i], p = predicted[i];
    if (t < 0 || t >= n_classes || p < 0 || p >= n_classes)
      throw DataError("confusion: class out of range at sample " +
                      std::to_string(i));
    ++cm.at(t, p);
  }
  return cm;
}

EvalReport report_from_confusion(ConfusionMatrix cm) {
  EvalReport rep;
  const std::int64_t total = cm.total();
  if (total == 0) throw DataError("evaluate: empty test set");
  rep.accuracy = double(cm.trace()) / double(total);
  rep.loss = std::numeric_limits<double>::quiet_NaN();
  rep.per_class.resize(std::size_t(cm.n));
  for (std::int64_t c = 0; c < cm.n; ++c) {
    const std::int64_t row = cm.row_sum(c);
    rep.per_class[std::size_t(c)] =
        row == 0 ? std::numeric_limits<double>::quiet_NaN()
                 : double(cm.at(c, c)) / double(row);
  }
  rep.cm = std::move(cm);
  return rep;
}

EvalReport evaluate(Model<float>& model, BatchSource& test, std::uint64_t seed) {
  if (test.clip_count() == 0) throw DataError("evaluate: empty test set");
  const std::int64_t n_classes = model.config().n_classes;

  std::vector<std::int64_t> truth, pred;
  double loss_sum = 0;
  std::int64_t seen = 0;

  Rng root(seed);
  test.begin_epoch(root.stream("eval"), false);
  ForwardCtx ctx;  // inference defaults
  while (auto batch = test.next_batch()) {
    auto logits = model.forward(share(std::move(batch->x)), ctx);
    Tensor<float> probs = softmax(*logits);
    const std::int64_t b_count = batch->y.size();
    loss_sum += cross_entropy_loss(probs, batch->y) * double(b_count);
    Tensor<std::int64_t> top = argmax(probs, 1);
    for (std::int64_t b = 0; b < b_count; ++b) {
      truth.push_back(batch->y.flat()[std::size_t(b)]);
      pred.push_back(top.flat()[std::size_t(b)]);
    }
    seen += b_count;
  }

  EvalReport rep = report_from_confusion(tally_confusion(truth, pred, n_classes));
  rep.loss = loss_sum / double(seen);
  return rep;
}

std::vector<ConfusedPair> confused_pairs(const ConfusionMatrix& cm, std::int64_t k) {
  if (k < 0) throw ConfigError("confused_pairs: negative k");
  std::vector<ConfusedPair> pairs;
  for (std::int64_t t = 0; t < cm.n; ++t) {
    const std::int64_t row = cm.row_sum(t);
    if (row == 0) continue;
    std::int64_t best_p = -1, best_count = 0;
    for (std::int64_t p = 0; p < cm.n; ++p) {
      if (p == t) continue;
      if (cm.at(t, p) > best_count) {
        best_count = cm.at(t, p);
        best_p = p;
      }
    }
    if (best_p < 0) continue;  // class never confused
    ConfusedPair pair;
    pair.true_class = t;
    pair.predicted = best_p;
    pair.true_class_accuracy = double(cm.at(t, t)) / double(row);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%lld → %lld (%.2f%%)",
                  (long long)t, (long long)best_p,
                  100.0 * pair.true_class_accuracy);
    pair.formatted = buf;
    pairs.push_back(std::move(pair));
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const ConfusedPair& a, const ConfusedPair& b) {
                     if (a.true_class_accuracy != b.true_class_accuracy)
                       return a.true_class_accuracy < b.true_class_accuracy;
                     return a.true_class < b.true_class;
                   });
  if (std::int64_t(pairs.size()) > k) pairs.resize(std::size_t(k));
  return pairs;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  return f;
}

}  // namespace

void write_confusion_csv(const ConfusionMatrix& cm, const std::string& path) {
  std::ofstream f = open_out(path);
  f << "true";
  for (std::int64_t p = 0; p < cm.n; ++p) f << "," << p;
  f << "\n";
  for (std::int64_t t = 0; t < cm.n; ++t) {
    f << t;
    for (std::int64_t p = 0; p < cm.n; ++p) f << "," << cm.at(t, p);
    f << "\n";
  }
  if (!f) throw IoError("cannot write " + path);
}

void write_per_class_csv(const EvalReport& report, const std::string& path) {
  std::ofstream f = open_out(path);
  f << "class,count,correct,accuracy\n";
  for (std::int64_t c = 0; c < report.cm.n; ++c) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%lld,%lld,%lld,%.10g\n", (long long)c,
                  (long long)report.cm.row_sum(c), (long long)report.cm.at(c, c),
                  report.per_class[std::size_t(c)]);
    f << buf;
  }
  if (!f) throw IoError("cannot write " + path);
}

void write_summary_csv(const EvalReport& report, const std::string& path) {
  std::ofstream f = open_out(path);
  f << "clips,n_classes,accuracy,loss\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "%lld,%lld,%.10g,%.10g\n",
                (long long)report.cm.total(), (long long)report.cm.n,
                report.accuracy, report.loss);
  f << buf;
  if (!f) throw IoError("cannot write " + path);
}

}  // namespace d3fcnn
