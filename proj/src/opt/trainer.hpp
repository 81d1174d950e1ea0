#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "data/batcher.hpp"
#include "nn/model.hpp"
#include "opt/adam.hpp"
#include "opt/schedule.hpp"

namespace d3fcnn {

struct TrainConfig {
  int epochs = 50;
  std::uint64_t seed = 0;
  LrSchedule schedule;       // empty phases -> default_for(epochs)
  AdamConfig adam;
  std::string out_dir;       // when set: history.csv + checkpoint-epoch-NN.bin
  bool write_history = true;
  bool write_checkpoints = true;
  std::size_t queue_capacity = 4;  // batches in flight between loader and trainer
};

struct EpochRecord {
  int epoch = 0;
  int phase = 0;
  double lr = 0;  // learning rate at the first iteration of the epoch
  double train_loss = 0;
  double train_acc = 0;
  double val_loss = 0;
  double val_acc = 0;
};

struct History {
  std::vector<EpochRecord> epochs;
  std::vector<double> lr_steps;  // lr of every optimizer step, in order

  void write_csv(const std::string& path) const;
};

/// Runs the epoch loop: shuffled training batches from a loader thread
/// through a bounded queue, Adam updates under the cyclical schedule, one
/// eval pass per epoch, per-epoch checkpoints. Deterministic given the seed.
/// A non-finite loss aborts with NumericError; checkpoints already written
/// stay on disk, so the last good epoch survives.
History fit(Model<float>& model, BatchSource& train, BatchSource* val,
            const TrainConfig& cfg);

/// Forward-only pass over a source in eval mode: mean loss and accuracy.
struct EvalStats {
  double loss = 0;
  double accuracy = 0;
  std::int64_t clips = 0;
};
EvalStats run_eval(Model<float>& model, BatchSource& data, std::uint64_t seed);

}  // namespace d3fcnn
