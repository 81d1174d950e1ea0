#pragma once

#include <cstdint>
#include <string>

#include "nn/model.hpp"

namespace d3fcnn {

/// Training-state fields carried alongside the parameters so a run can be
/// resumed or audited: the seed that built the model and the schedule
/// position reached when the file was written.
struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::int64_t epoch = 0;      // epochs completed
  std::int64_t iteration = 0;  // optimizer steps taken
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Little-endian binary file: 8-byte magic, u32 version, length-prefixed
/// header (hyperparameters, metadata, named buffer descriptors), then the
/// raw float32 buffers in header order. Layout table lives in the README.
void save_checkpoint(Model<float>& model, const CheckpointMeta& meta,
                     const std::string& path);

struct LoadedModel {
  Model<float> model;
  CheckpointMeta meta;
};

/// Rebuilds the model described by the header and restores every buffer
/// bitwise. Throws BadMagicError, VersionError or TruncatedFileError for the
/// matching corruptions and CheckpointError when the file describes a
/// different network than its hyperparameters produce.
LoadedModel load_checkpoint(const std::string& path);

}  // namespace d3fcnn
