#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "data/clip.hpp"
#include "data/dataset.hpp"

namespace d3fcnn {

struct Batch {
  Tensor<float> x;           // [B, 64, 64, 30, 1]
  Tensor<std::int64_t> y;    // [B]
  bool short_final = false;  // true when fewer clips remained than batch_size
};

/// Sequential batch producer. begin_epoch fixes the clip order and the frame
/// starts for one pass; next_batch then yields batches until exhausted. The
/// whole sequence is a pure function of the epoch rng, so training runs are
/// reproducible.
class BatchSource {
public:
  virtual ~BatchSource() = default;

  virtual std::int64_t clip_count() const = 0;
  virtual std::int64_t batch_size() const = 0;

  std::int64_t batches_per_epoch() const {
    return (clip_count() + batch_size() - 1) / batch_size();
  }

  virtual void begin_epoch(const Rng& epoch_rng, bool training) = 0;
  virtual std::optional<Batch> next_batch() = 0;
};

/// Shared order/cursor plumbing: training mode shuffles clips and draws
/// random frame starts, eval mode keeps scan order and midpoint starts.
class IndexedBatchSource : public BatchSource {
public:
  IndexedBatchSource(std::int64_t clip_count, std::int64_t batch_size);

  std::int64_t clip_count() const override { return std::int64_t(order_.size()); }
  std::int64_t batch_size() const override { return batch_size_; }

  void begin_epoch(const Rng& epoch_rng, bool training) override;
  std::optional<Batch> next_batch() override;

protected:
  virtual Tensor<float> load_clip(std::int64_t clip_index, Rng& frame_rng,
                                  bool training) = 0;
  virtual std::int64_t label_of(std::int64_t clip_index) const = 0;

private:
  std::vector<std::int64_t> order_;
  std::int64_t batch_size_;
  std::int64_t cursor_ = 0;
  Rng frame_rng_;
  bool training_ = false;
};

/// Batches straight from a scanned dataset directory tree.
class DiskBatchSource final : public IndexedBatchSource {
public:
  DiskBatchSource(std::vector<ClipMeta> clips, std::int64_t batch_size,
                  PadShortClips pad = PadShortClips::reflect);

  const std::vector<ClipMeta>& clips() const { return clips_; }

protected:
  Tensor<float> load_clip(std::int64_t clip_index, Rng& frame_rng, bool training) override;
  std::int64_t label_of(std::int64_t clip_index) const override;

private:
  std::vector<ClipMeta> clips_;
  PadShortClips pad_;
};

/// Batches over pre-assembled clip tensors; used by tests and benchmarks.
class MemoryBatchSource final : public IndexedBatchSource {
public:
  MemoryBatchSource(std::vector<Tensor<float>> clips, std::vector<std::int64_t> labels,
                    std::int64_t batch_size);

protected:
  Tensor<float> load_clip(std::int64_t clip_index, Rng& frame_rng, bool training) override;
  std::int64_t label_of(std::int64_t clip_index) const override;

private:
  std::vector<Tensor<float>> clips_;
  std::vector<std::int64_t> labels_;
};

}  // namespace d3fcnn
