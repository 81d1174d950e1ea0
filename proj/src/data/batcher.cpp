#include "data/batcher.hpp"

#include <cstring>
#include <numeric>
#include <utility>

#include "core/errors.hpp"

namespace d3fcnn {

IndexedBatchSource::IndexedBatchSource(std::int64_t clip_count, std::int64_t batch_size)
    : batch_size_(batch_size), frame_rng_(0) {
  if (clip_count < 1) throw DataError("batcher: dataset is empty");
  if (batch_size < 1) throw ConfigError("batcher: batch size must be >= 1");
  order_.resize(std::size_t(clip_count));
  std::iota(order_.begin(), order_.end(), std::int64_t(0));
}

void IndexedBatchSource::begin_epoch(const Rng& epoch_rng, bool training) {
  std::iota(order_.begin(), order_.end(), std::int64_t(0));
  training_ = training;
  cursor_ = 0;
  frame_rng_ = epoch_rng.stream("frame-starts");
  if (training) {
    Rng shuffle_rng = epoch_rng.stream("clip-order");
    shuffle_rng.shuffle(order_);
  }
}

std::optional<Batch> IndexedBatchSource::next_batch() {
  const std::int64_t total = clip_count();
  if (cursor_ >= total) return std::nullopt;
  const std::int64_t take = std::min(batch_size_, total - cursor_);

  Batch batch;
  batch.x = Tensor<float>(Shape{take, kFrameSize, kFrameSize, kClipFrames, 1});
  batch.y = Tensor<std::int64_t>(Shape{take});
  batch.short_final = take < batch_size_;

  const std::int64_t clip_len = kFrameSize * kFrameSize * kClipFrames;
  for (std::int64_t b = 0; b < take; ++b) {
    const std::int64_t ci = order_[std::size_t(cursor_ + b)];
    Tensor<float> clip = load_clip(ci, frame_rng_, training_);
    if (clip.shape() != Shape{kFrameSize, kFrameSize, kClipFrames, 1})
      throw DataError("batcher: loaded clip has the wrong shape");
    std::memcpy(batch.x.data() + b * clip_len, clip.data(),
                sizeof(float) * std::size_t(clip_len));
    batch.y[b] = label_of(ci);
  }
  cursor_ += take;
  return batch;
}

DiskBatchSource::DiskBatchSource(std::vector<ClipMeta> clips, std::int64_t batch_size,
                                 PadShortClips pad)
    : IndexedBatchSource(std::int64_t(clips.size()), batch_size),
      clips_(std::move(clips)),
      pad_(pad) {}

Tensor<float> DiskBatchSource::load_clip(std::int64_t clip_index, Rng& frame_rng,
                                         bool training) {
  const ClipMeta& meta = clips_[std::size_t(clip_index)];
  FrameSelectOptions opts;
  opts.eval = !training;
  opts.pad = pad_;
  return assemble_clip(load_clip_frames(meta.path), frame_rng, opts);
}

std::int64_t DiskBatchSource::label_of(std::int64_t clip_index) const {
  return clips_[std::size_t(clip_index)].label;
}

MemoryBatchSource::MemoryBatchSource(std::vector<Tensor<float>> clips,
                                     std::vector<std::int64_t> labels,
                                     std::int64_t batch_size)
    : IndexedBatchSource(std::int64_t(clips.size()), batch_size),
      clips_(std::move(clips)),
      labels_(std::move(labels)) {
  if (clips_.size() != labels_.size())
    throw DataError("batcher: clip and label counts differ");
}

Tensor<float> MemoryBatchSource::load_clip(std::int64_t clip_index, Rng&, bool) {
  return clips_[std::size_t(clip_index)];
}

std::int64_t MemoryBatchSource::label_of(std::int64_t clip_index) const {
  return labels_[std::size_t(clip_index)];
}

}  // namespace d3fcnn
