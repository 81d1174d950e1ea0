#include "data/clip.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace d3fcnn {

namespace {

/// Center an extent of `side` on [lo_in, hi_in) inside [0, bound), shrinking
/// only when the frame itself is too small.
std::pair<std::int64_t, std::int64_t> center_clamped(std::int64_t lo_in, std::int64_t hi_in,
                                                     std::int64_t side, std::int64_t bound) {
  if (side >= bound) return {0, bound};
  std::int64_t lo = lo_in - (side - (hi_in - lo_in)) / 2;
  lo = std::clamp<std::int64_t>(lo, 0, bound - side);
  return {lo, lo + side};
}

}  // namespace

RoiBox compute_roi(const std::vector<DepthFrame>& frames) {
  if (frames.empty()) throw DataError("roi: clip has no frames");
  const std::int64_t h = frames[0].height;
  const std::int64_t w = frames[0].width;
  std::int64_t top = h, left = w, bottom = -1, right = -1;
  for (const DepthFrame& f : frames) {
    if (f.height != h || f.width != w)
      throw DataError("roi: frames in one clip must share dimensions");
    for (std::int64_t r = 0; r < h; ++r) {
      const std::uint16_t* row = f.depth.data() + r * w;
      for (std::int64_t c = 0; c < w; ++c) {
        if (row[c] == 0) continue;
        top = std::min(top, r);
        bottom = std::max(bottom, r);
        left = std::min(left, c);
        right = std::max(right, c);
      }
    }
  }
  if (bottom < 0) throw DataError("roi: empty foreground, every pixel is masked");

  RoiBox box{top, left, bottom + 1, right + 1};
  const std::int64_t pad_r = std::lround(0.05 * double(box.height()));
  const std::int64_t pad_c = std::lround(0.05 * double(box.width()));
  box.top = std::max<std::int64_t>(0, box.top - pad_r);
  box.bottom = std::min(h, box.bottom + pad_r);
  box.left = std::max<std::int64_t>(0, box.left - pad_c);
  box.right = std::min(w, box.right + pad_c);

  const std::int64_t side = std::max(box.height(), box.width());
  auto [t, b] = center_clamped(box.top, box.bottom, side, h);
  auto [l, r] = center_clamped(box.left, box.right, side, w);
  return RoiBox{t, l, b, r};
}

DepthFrame crop_resize(const DepthFrame& frame, const RoiBox& roi) {
  if (roi.height() <= 0 || roi.width() <= 0 || roi.top < 0 || roi.left < 0 ||
      roi.bottom > frame.height || roi.right > frame.width) {
    throw DataError("crop: box out of frame bounds");
  }
  DepthFrame out;
  out.width = kFrameSize;
  out.height = kFrameSize;
  out.depth.resize(std::size_t(kFrameSize * kFrameSize));
  for (std::int64_t r = 0; r < kFrameSize; ++r) {
    const std::int64_t sr = roi.top + r * roi.height() / kFrameSize;
    for (std::int64_t c = 0; c < kFrameSize; ++c) {
      const std::int64_t sc = roi.left + c * roi.width() / kFrameSize;
      out.at(r, c) = frame.at(sr, sc);
    }
  }
  return out;
}

float normalize_depth(std::uint16_t depth_mm) {
  const double capped = std::min(double(depth_mm), kDepthCapMm);
  return float(capped / kDepthCapMm);
}

std::vector<std::int64_t> select_frames(std::int64_t length, Rng& rng,
                                        const FrameSelectOptions& opts) {
  if (length < 1) throw DataError("select_frames: clip length must be >= 1");
  std::vector<std::int64_t> idx(static_cast<std::size_t>(kClipFrames));

  if (length < kClipFrames) {
    if (opts.pad == PadShortClips::repeat_last || length == 1) {
      for (std::int64_t k = 0; k < kClipFrames; ++k) idx[std::size_t(k)] = std::min(k, length - 1);
    } else {
      // ping-pong walk: 0..L-1, L-2..0, 1..  (period 2L-2)
      const std::int64_t period = 2 * length - 2;
      for (std::int64_t k = 0; k < kClipFrames; ++k) {
        const std::int64_t m = k % period;
        idx[std::size_t(k)] = m < length ? m : period - m;
      }
    }
    return idx;
  }

  if (length < 2 * kClipFrames) {
    const std::int64_t span = length - kClipFrames;  // start range [0, span]
    const std::int64_t s = opts.eval ? span / 2 : rng.uniform_int(span + 1);
    for (std::int64_t k = 0; k < kClipFrames; ++k) idx[std::size_t(k)] = s + k;
    return idx;
  }

  const std::int64_t span = length - (2 * kClipFrames - 1);  // last start with s+58 in range
  const std::int64_t s = opts.eval ? span / 2 : rng.uniform_int(span + 1);
  for (std::int64_t k = 0; k < kClipFrames; ++k) idx[std::size_t(k)] = s + 2 * k;
  return idx;
}

Tensor<float> assemble_clip(const std::vector<DepthFrame>& frames, Rng& rng,
                            const FrameSelectOptions& opts) {
  const RoiBox roi = compute_roi(frames);
  const auto picks = select_frames(std::int64_t(frames.size()), rng, opts);

  Tensor<float> clip(Shape{kFrameSize, kFrameSize, kClipFrames, 1});
  float* out = clip.data();
  for (std::int64_t t = 0; t < kClipFrames; ++t) {
    const DepthFrame small = crop_resize(frames[std::size_t(picks[std::size_t(t)])], roi);
    for (std::int64_t r = 0; r < kFrameSize; ++r) {
      for (std::int64_t c = 0; c < kFrameSize; ++c) {
        // layout [H, W, T, C] with C == 1
        out[(r * kFrameSize + c) * kClipFrames + t] = normalize_depth(small.at(r, c));
      }
    }
  }
  return clip;
}

}  // namespace d3fcnn
