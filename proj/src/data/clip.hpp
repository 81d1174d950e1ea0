#pragma once

#include <cstdint>
#include <vector>

#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "data/image_io.hpp"

namespace d3fcnn {

inline constexpr std::int64_t kClipFrames = 30;
inline constexpr std::int64_t kFrameSize = 64;
inline constexpr double kDepthCapMm = 4500.0;

/// Pixel box with half-open extents: rows [top, bottom), columns
/// [left, right).
struct RoiBox {
  std::int64_t top = 0;
  std::int64_t left = 0;
  std::int64_t bottom = 0;
  std::int64_t right = 0;

  std::int64_t height() const { return bottom - top; }
  std::int64_t width() const { return right - left; }
};

/// Union bounding box of nonzero pixels across every frame of the clip (one
/// box per clip so the subject never jitters inside the crop), padded 5% per
/// side, grown to a square and clamped to the frame bounds. Throws DataError
/// on an all-zero clip.
RoiBox compute_roi(const std::vector<DepthFrame>& frames);

/// Nearest-neighbor resample of the box to 64x64. Output values are always
/// drawn from source pixels, so masked zeros never blend into depths.
DepthFrame crop_resize(const DepthFrame& frame, const RoiBox& roi);

/// min(depth, 4500)/4500 into [0,1]; the mask value 0 stays exactly 0.
float normalize_depth(std::uint16_t depth_mm);

enum class PadShortClips {
  reflect,      // bounce back through earlier frames: ..., L-1, L-2, L-3, ...
  repeat_last,  // hold the final frame
};

struct FrameSelectOptions {
  bool eval = false;  // eval pins the start to the midpoint of its range
  PadShortClips pad = PadShortClips::reflect;
};

/// The 30 source indices to sample from a video of length L: short clips are
/// padded, 30..59-frame clips use a random contiguous window, longer ones a
/// random stride-2 window.
std::vector<std::int64_t> select_frames(std::int64_t length, Rng& rng,
                                        const FrameSelectOptions& opts = {});

/// Full per-clip transform: one shared ROI, then crop+resize+normalize of
/// the selected frames into a [64,64,30,1] tensor.
Tensor<float> assemble_clip(const std::vector<DepthFrame>& frames, Rng& rng,
                            const FrameSelectOptions& opts = {});

}  // namespace d3fcnn
