#include "opt/schedule.hpp"

#include <string>

#include "core/errors.hpp"

namespace d3fcnn {

LrSchedule LrSchedule::default_for(int total_epochs) {
  if (total_epochs < 1) throw ConfigError("schedule: need at least one epoch");
  LrSchedule s;
  if (total_epochs <= 2) {
    s.phases.push_back({1, total_epochs, 5e-4, 9.8e-4, false});
    return s;
  }
  const int tail = std::max(1, total_epochs / 10);
  const int head = std::max(1, total_epochs / 2);
  const int mid_end = total_epochs - tail;
  s.phases.push_back({1, head, 5e-4, 9.8e-4, false});
  s.phases.push_back({head + 1, mid_end, 1e-4, 4e-4, false});
  s.phases.push_back({mid_end + 1, total_epochs, 4e-5, 4e-5, true});
  s.validate();
  return s;
}

void LrSchedule::validate() const {
  if (phases.empty()) throw ConfigError("schedule: no phases");
  if (half_cycle_epochs < 1) throw ConfigError("schedule: half cycle must be >= 1 epoch");
  int expect = 1;
  for (const LrPhase& p : phases) {
    if (p.start_epoch != expect)
      throw ConfigError("schedule: phases must tile epochs, got a gap at epoch " +
                        std::to_string(expect));
    if (p.end_epoch < p.start_epoch)
      throw ConfigError("schedule: phase ends before it starts");
    if (p.lr_min <= 0 || p.lr_max < p.lr_min)
      throw ConfigError("schedule: phase bounds must satisfy 0 < lr_min <= lr_max");
    expect = p.end_epoch + 1;
  }
}

int LrSchedule::last_epoch() const { return phases.empty() ? 0 : phases.back().end_epoch; }

int LrSchedule::phase_of(int epoch) const {
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (epoch >= phases[i].start_epoch && epoch <= phases[i].end_epoch) return int(i) + 1;
  }
  throw ConfigError("schedule: epoch " + std::to_string(epoch) + " outside all phases");
}

double LrSchedule::lr_at(int epoch, std::int64_t iteration_in_epoch,
                         std::int64_t iterations_per_epoch) const {
  if (iterations_per_epoch < 1) throw ConfigError("schedule: iterations per epoch must be >= 1");
  if (iteration_in_epoch < 0 || iteration_in_epoch >= iterations_per_epoch)
    throw ConfigError("schedule: iteration index outside the epoch");
  const LrPhase& p = phases[std::size_t(phase_of(epoch)) - 1];
  if (p.constant) return p.lr_min;

  const std::int64_t pos =
      std::int64_t(epoch - p.start_epoch) * iterations_per_epoch + iteration_in_epoch;
  const std::int64_t half = std::int64_t(half_cycle_epochs) * iterations_per_epoch;
  const std::int64_t in_cycle = pos % (2 * half);
  // vertices returned exactly, interpolation only strictly inside a ramp
  if (in_cycle == 0) return p.lr_min;
  if (in_cycle == half) return p.lr_max;
  const double frac = in_cycle < half ? double(in_cycle) / double(half)
                                      : double(2 * half - in_cycle) / double(half);
  return p.lr_min + (p.lr_max - p.lr_min) * frac;
}

}  // namespace d3fcnn
