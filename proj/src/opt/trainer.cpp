#include "opt/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <thread>

#include "core/errors.hpp"
#include "core/pointwise.hpp"
#include "core/queue.hpp"
#include "nn/checkpoint.hpp"

namespace d3fcnn {

namespace {

struct BatchStats {
  double loss_sum = 0;  // sum over clips, not batches
  std::int64_t correct = 0;
  std::int64_t seen = 0;
};

void tally(BatchStats& s, const Tensor<float>& probs, const Tensor<std::int64_t>& labels,
           double batch_mean_loss) {
  const std::int64_t n = labels.size();
  s.loss_sum += batch_mean_loss * double(n);
  Tensor<std::int64_t> pred = argmax(probs, 1);
  for (std::int64_t i = 0; i < n; ++i) s.correct += pred[i] == labels[i];
  s.seen += n;
}

std::string checkpoint_name(const std::string& dir, int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "checkpoint-epoch-%02d.bin", epoch);
  return dir + "/" + buf;
}

}  // namespace

void History::write_csv(const std::string& path) const {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("history: cannot open " + path + " for writing");
  f << "epoch,phase,lr,train_loss,train_acc,val_loss,val_acc\n";
  char row[256];
  for (const EpochRecord& r : epochs) {
    std::snprintf(row, sizeof row, "%d,%d,%.10g,%.10g,%.10g,%.10g,%.10g\n", r.epoch, r.phase,
                  r.lr, r.train_loss, r.train_acc, r.val_loss, r.val_acc);
    f << row;
  }
  if (!f) throw IoError("history: short write to " + path);
}

EvalStats run_eval(Model<float>& model, BatchSource& data, std::uint64_t seed) {
  data.begin_epoch(Rng(seed).stream("eval"), false);
  BatchStats stats;
  ForwardCtx ctx;  // inference defaults
  while (auto b = data.next_batch()) {
    auto logits = model.forward(share(std::move(b->x)), ctx);
    Tensor<float> probs = softmax(*logits);
    const double loss = cross_entropy_loss(probs, b->y);
    tally(stats, probs, b->y, loss);
  }
  if (stats.seen == 0) throw DataError("eval: no clips produced");
  return {stats.loss_sum / double(stats.seen), double(stats.correct) / double(stats.seen),
          stats.seen};
}

History fit(Model<float>& model, BatchSource& train, BatchSource* val,
            const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw ConfigError("fit: need at least one epoch");
  LrSchedule sched =
      cfg.schedule.phases.empty() ? LrSchedule::default_for(cfg.epochs) : cfg.schedule;
  sched.validate();
  if (sched.last_epoch() < cfg.epochs)
    throw ConfigError("fit: schedule covers fewer epochs than requested");

  const bool writing = !cfg.out_dir.empty() && (cfg.write_history || cfg.write_checkpoints);
  if (writing) std::filesystem::create_directories(cfg.out_dir);

  Adam<float> opt(model.trainable_params(), cfg.adam);
  Rng root(cfg.seed);
  const std::int64_t ipe = train.batches_per_epoch();

  History hist;
  std::int64_t steps = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng erng = root.stream("epoch-" + std::to_string(epoch));
    Rng dropout_rng = erng.stream("dropout");
    train.begin_epoch(erng.stream("sampler"), true);

    // the loader runs ahead on its own thread; order is preserved by the
    // queue so training remains deterministic
    BoundedQueue<Batch> queue(cfg.queue_capacity);
    std::exception_ptr loader_error = nullptr;
    std::thread loader([&] {
      try {
        while (auto b = train.next_batch()) {
          if (!queue.push(std::move(*b))) return;  // trainer bailed out early
        }
      } catch (...) {
        loader_error = std::current_exception();
      }
      queue.close();
    });

    BatchStats stats;
    std::int64_t it = 0;
    try {
      while (auto b = queue.pop()) {
        const double lr = sched.lr_at(epoch, it, ipe);
        ForwardCtx ctx;
        ctx.training = true;
        ctx.rng = &dropout_rng;
        auto logits = model.forward(share(std::move(b->x)), ctx);
        Tensor<float> probs = softmax(*logits);
        const double loss = cross_entropy_loss(probs, b->y);
        if (!std::isfinite(loss)) {
          throw NumericError("fit: non-finite loss at epoch " + std::to_string(epoch) +
                             " iteration " + std::to_string(it) +
                             ", aborting with the last finished checkpoint on disk");
        }
        model.backward(share(cross_entropy_grad_logits(probs, b->y)));
        opt.step(lr);
        hist.lr_steps.push_back(lr);
        ++steps;
        tally(stats, probs, b->y, loss);
        ++it;
      }
    } catch (...) {
      queue.close();
      loader.join();
      throw;
    }
    loader.join();
    if (loader_error) std::rethrow_exception(loader_error);
    if (stats.seen == 0) throw DataError("fit: training pass produced no clips");

    EpochRecord rec;
    rec.epoch = epoch;
    rec.phase = sched.phase_of(epoch);
    rec.lr = sched.lr_at(epoch, 0, ipe);
    rec.train_loss = stats.loss_sum / double(stats.seen);
    rec.train_acc = double(stats.correct) / double(stats.seen);
    if (val) {
      EvalStats vs = run_eval(model, *val, cfg.seed);
      rec.val_loss = vs.loss;
      rec.val_acc = vs.accuracy;
    }
    hist.epochs.push_back(rec);

    if (!cfg.out_dir.empty() && cfg.write_checkpoints) {
      save_checkpoint(model, CheckpointMeta{cfg.seed, epoch, steps},
                      checkpoint_name(cfg.out_dir, epoch));
    }
    if (!cfg.out_dir.empty() && cfg.write_history) {
      hist.write_csv(cfg.out_dir + "/history.csv");  // rewritten as epochs finish
    }
  }
  return hist;
}

}  // namespace d3fcnn
