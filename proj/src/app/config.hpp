#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace d3fcnn {

/// One flat bag of settings for every workflow. Defaults here, overridden by
/// a key=value config file, overridden again by command-line flags.
struct RunConfig {
  // dataset
  std::string root;
  std::string naming = "ntu";       // ntu | generic
  std::string protocol;             // split protocol file, optional
  std::string pad = "reflect";      // reflect | repeat-last

  // model
  std::string checkpoint;           // input checkpoint, where required
  std::int64_t n_classes = 60;
  int tail = 3;                     // finetune trainable tail
  bool swap_head = false;           // permit class-count change on finetune

  // training
  std::int64_t batch_size = 12;
  int epochs = 50;
  std::uint64_t seed = 0;

  // bench
  std::int64_t repetitions = 20;
  std::int64_t warmup = 5;
  std::int64_t bench_clips = 10;

  // predict
  std::string clip;                 // one clip directory
  std::int64_t top_k = 5;

  // outputs
  std::string out_dir = "out";
};

/// Applies one key=value setting; unknown keys and unparsable values throw.
void apply_setting(RunConfig& cfg, const std::string& key,
                   const std::string& value);

/// Reads a flat key=value file (# comments, blank lines allowed).
void apply_config_file(RunConfig& cfg, const std::string& path);

/// File first, then overrides, so flags win over the file.
RunConfig build_config(const std::string& config_path,
                       const std::vector<std::pair<std::string, std::string>>&
                           overrides);

/// Cross-field checks shared by the workflows (ranges, enum strings).
void validate_config(const RunConfig& cfg);

}  // namespace d3fcnn
