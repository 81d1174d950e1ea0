// Command-line front end. Talks to the engine exclusively through the
// public C interface, the same way any other embedding would.
#include <cstdio>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "d3fcnn/d3fcnn.h"

namespace {

struct OptionsDeleter {
  void operator()(d3f_options* o) const { d3f_options_free(o); }
};
using Options = std::unique_ptr<d3f_options, OptionsDeleter>;

/// One flag per config key; only flags the user actually passed are turned
/// into overrides so the config file keeps its say on the rest.
struct Flags {
  std::string config;
  std::vector<std::pair<std::string, std::string>> overrides;

  void add_string(CLI::App* cmd, const std::string& flag, const std::string& key,
                  const std::string& help) {
    cmd->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { overrides.emplace_back(key, v); },
        help);
  }
  void add_int(CLI::App* cmd, const std::string& flag, const std::string& key,
               const std::string& help) {
    cmd->add_option_function<std::int64_t>(
        flag,
        [this, key](std::int64_t v) {
          overrides.emplace_back(key, std::to_string(v));
        },
        help);
  }
  void add_bool(CLI::App* cmd, const std::string& flag, const std::string& key,
                const std::string& help) {
    cmd->add_flag_callback(
        flag, [this, key] { overrides.emplace_back(key, "1"); }, help);
  }
};

int fail(const char* what, d3f_status status) {
  std::fprintf(stderr, "%s: %s\n", what, d3f_last_error());
  return int(status);
}

int run(d3f_status (*runner)(const d3f_options*, char**), const Flags& flags,
        const char* what) {
  d3f_options* raw = nullptr;
  if (d3f_status s = d3f_options_new(&raw); s != D3F_OK) return fail(what, s);
  Options opts(raw);

  if (!flags.config.empty())
    if (d3f_status s = d3f_options_load_file(opts.get(), flags.config.c_str());
        s != D3F_OK)
      return fail(what, s);
  for (const auto& [key, value] : flags.overrides)
    if (d3f_status s = d3f_options_set(opts.get(), key.c_str(), value.c_str());
        s != D3F_OK)
      return fail(what, s);

  char* report = nullptr;
  const d3f_status s = runner(opts.get(), &report);
  if (report) {
    std::fputs(report, stdout);
    d3f_string_free(report);
  }
  if (s != D3F_OK) return fail(what, s);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3-d convolutional action recognition on depth clips"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(d3f_version()));

  Flags flags;
  d3f_status (*runner)(const d3f_options*, char**) = nullptr;
  const char* what = nullptr;

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config, "key=value config file");
    flags.add_string(cmd, "--out-dir", "out_dir", "artifact directory");
    flags.add_int(cmd, "--seed", "seed", "master random seed");
  };
  auto dataset = [&](CLI::App* cmd) {
    flags.add_string(cmd, "--root", "root", "dataset root directory");
    flags.add_string(cmd, "--naming", "naming", "ntu or generic");
    flags.add_string(cmd, "--protocol", "protocol", "split protocol file");
    flags.add_string(cmd, "--pad", "pad", "short clips: reflect or repeat-last");
    flags.add_int(cmd, "--batch-size", "batch_size", "clips per batch");
  };

  CLI::App* scan = app.add_subcommand("scan", "index a dataset and report it");
  common(scan);
  dataset(scan);
  scan->callback([&] { runner = d3f_run_scan; what = "scan"; });

  CLI::App* train = app.add_subcommand("train", "train from scratch");
  common(train);
  dataset(train);
  flags.add_int(train, "--n-classes", "n_classes", "action classes");
  flags.add_int(train, "--epochs", "epochs", "training epochs");
  train->callback([&] { runner = d3f_run_train; what = "train"; });

  CLI::App* finetune =
      app.add_subcommand("finetune", "adapt a checkpoint, last layers only");
  common(finetune);
  dataset(finetune);
  flags.add_string(finetune, "--checkpoint", "checkpoint", "base checkpoint");
  flags.add_int(finetune, "--n-classes", "n_classes", "target classes");
  flags.add_int(finetune, "--epochs", "epochs", "training epochs");
  flags.add_int(finetune, "--tail", "tail", "trainable parameterized layers");
  flags.add_bool(finetune, "--swap-head", "swap_head",
                 "replace the classifier head on class-count mismatch");
  finetune->callback([&] { runner = d3f_run_finetune; what = "finetune"; });

  CLI::App* evalc = app.add_subcommand("eval", "score a checkpoint on a dataset");
  common(evalc);
  dataset(evalc);
  flags.add_string(evalc, "--checkpoint", "checkpoint", "checkpoint to score");
  flags.add_int(evalc, "--top-k", "top_k", "confused pairs to list");
  evalc->callback([&] { runner = d3f_run_eval; what = "eval"; });

  CLI::App* predict = app.add_subcommand("predict", "classify one clip directory");
  common(predict);
  flags.add_string(predict, "--checkpoint", "checkpoint", "checkpoint to use");
  flags.add_string(predict, "--clip", "clip", "directory of depth frames");
  flags.add_string(predict, "--pad", "pad", "short clips: reflect or repeat-last");
  flags.add_int(predict, "--top-k", "top_k", "classes to print");
  predict->callback([&] { runner = d3f_run_predict; what = "predict"; });

  CLI::App* bench = app.add_subcommand("bench", "measure per-clip latency");
  common(bench);
  flags.add_string(bench, "--root", "root", "real clips (synthetic if omitted)");
  flags.add_string(bench, "--naming", "naming", "ntu or generic");
  flags.add_string(bench, "--checkpoint", "checkpoint", "checkpoint (fresh if omitted)");
  flags.add_int(bench, "--n-classes", "n_classes", "classes for a fresh model");
  flags.add_int(bench, "--repetitions", "repetitions", "timed repetitions");
  flags.add_int(bench, "--warmup", "warmup", "untimed warm-up repetitions");
  flags.add_int(bench, "--clips", "bench_clips", "clips to cycle through");
  bench->callback([&] { runner = d3f_run_bench; what = "bench"; });

  CLI11_PARSE(app, argc, argv);
  return run(runner, flags, what);
}
