#pragma once

#include <cstdint>
#include <vector>

namespace d3fcnn {

struct LrPhase {
  int start_epoch;  // 1-based, inclusive
  int end_epoch;    // inclusive
  double lr_min;
  double lr_max;
  bool constant;  // constant phases always emit lr_min
};

/// Piecewise learning-rate policy: triangular cycles inside each phase,
/// ramping lr_min -> lr_max -> lr_min over 2*half_cycle_epochs, or a flat
/// value. Phases must tile the epoch range with no gaps.
struct LrSchedule {
  std::vector<LrPhase> phases;
  int half_cycle_epochs = 2;

  /// The run shape used throughout: first half of the epochs cycling in
  /// [5e-4, 9.8e-4], the next 40% in [1e-4, 4e-4], the last 10% constant
  /// 4e-5. For 50 epochs that is 1-25 / 26-45 / 46-50.
  static LrSchedule default_for(int total_epochs);

  /// Learning rate for a 0-based iteration inside a 1-based epoch.
  double lr_at(int epoch, std::int64_t iteration_in_epoch,
               std::int64_t iterations_per_epoch) const;

  /// 1-based phase number covering this epoch.
  int phase_of(int epoch) const;

  int last_epoch() const;

  /// Throws ConfigError unless phases are contiguous, ordered and non-empty.
  void validate() const;
};

}  // namespace d3fcnn
