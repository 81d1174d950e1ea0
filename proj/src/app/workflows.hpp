#pragma once

#include <string>

#include "app/config.hpp"

namespace d3fcnn {

/// Each workflow validates its inputs, writes its artifacts under
/// cfg.out_dir, and returns a human-readable summary for the caller to
/// print. Failures surface as the usual error hierarchy.

std::string run_scan(const RunConfig& cfg);      // rejects.txt
std::string run_train(const RunConfig& cfg);     // history.csv, checkpoints
std::string run_finetune(const RunConfig& cfg);  // same, from a base checkpoint
std::string run_eval(const RunConfig& cfg);      // confusion/per_class/summary
std::string run_predict(const RunConfig& cfg);   // top-k class probabilities
std::string run_bench(const RunConfig& cfg);     // bench.csv

}  // namespace d3fcnn
