#include "app/workflows.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "core/errors.hpp"
#include "core/pointwise.hpp"
#include "data/batcher.hpp"
#include "data/clip.hpp"
#include "data/dataset.hpp"
#include "eval/bench.hpp"
#include "eval/metrics.hpp"
#include "eval/split.hpp"
#include "nn/checkpoint.hpp"
#include "opt/trainer.hpp"

namespace d3fcnn {

namespace fs = std::filesystem;

namespace {

PadShortClips pad_from_config(const RunConfig& cfg) {
  return cfg.pad == "repeat-last" ? PadShortClips::repeat_last
                                  : PadShortClips::reflect;
}

DatasetIndex scan_or_throw(const RunConfig& cfg) {
  if (cfg.root.empty()) throw ConfigError("workflow: root is required");
  return scan_dataset(cfg.root, naming_from_string(cfg.naming));
}

void ensure_out_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("workflow: cannot create " + cfg.out_dir);
}

void write_rejects(const DatasetIndex& index, const RunConfig& cfg) {
  ensure_out_dir(cfg);
  const std::string path = (fs::path(cfg.out_dir) / "rejects.txt").string();
  std::ofstream f(path);
  if (!f) throw IoError("workflow: cannot write " + path);
  for (const auto& r : index.rejects) f << r << "\n";
}

void check_labels(const DatasetIndex& index, std::int64_t n_classes) {
  for (const auto& c : index.clips)
    if (c.label < 0 || c.label >= n_classes)
      throw DataError("workflow: clip " + c.path + " has label " +
                      std::to_string(c.label) + " outside n_classes=" +
                      std::to_string(n_classes));
}

/// Train/val clip lists: protocol file when given, everything/nothing else.
SplitResult resolve_split(const DatasetIndex& index, const RunConfig& cfg) {
  if (!cfg.protocol.empty())
    return apply_split(index, parse_protocol_file(cfg.protocol));
  SplitResult all;
  all.train = index.clips;
  return all;
}

Model<float> load_model_file(const std::string& path, CheckpointMeta* meta_out) {
  if (path.empty()) throw ConfigError("workflow: checkpoint is required");
  LoadedModel loaded = load_checkpoint(path);
  if (meta_out) *meta_out = loaded.meta;
  return std::move(loaded.model);
}

std::string format_eval_report(const EvalReport& rep, std::int64_t top_k) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "clips: %lld\naccuracy: %.4f\nloss: %.6f\n",
                (long long)rep.cm.total(), rep.accuracy, rep.loss);
  out << line;
  const auto pairs = confused_pairs(rep.cm, top_k);
  if (!pairs.empty()) {
    out << "most confused:\n";
    for (const auto& p : pairs) out << "  " << p.formatted << "\n";
  }
  return out.str();
}

History fit_and_report(Model<float>& model, const SplitResult& split,
                       const RunConfig& cfg, std::ostringstream& out) {
  DiskBatchSource train(split.train, cfg.batch_size, pad_from_config(cfg));
  std::unique_ptr<DiskBatchSource> val;
  if (!split.test.empty())
    val = std::make_unique<DiskBatchSource>(split.test, cfg.batch_size,
                                            pad_from_config(cfg));

  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.seed = cfg.seed;
  tc.out_dir = cfg.out_dir;
  History hist = fit(model, train, val.get(), tc);

  const EpochRecord& last = hist.epochs.back();
  char line[160];
  std::snprintf(line, sizeof line,
                "epochs: %d\nfinal train_loss: %.6f\nfinal train_acc: %.4f\n",
                cfg.epochs, last.train_loss, last.train_acc);
  out << line;
  if (val) {
    std::snprintf(line, sizeof line, "final val_loss: %.6f\nfinal val_acc: %.4f\n",
                  last.val_loss, last.val_acc);
    out << line;
  }
  out << "artifacts: " << cfg.out_dir << "/history.csv, checkpoint-epoch-NN.bin\n";
  return hist;
}

}  // namespace

std::string run_scan(const RunConfig& cfg) {
  DatasetIndex index = scan_or_throw(cfg);
  write_rejects(index, cfg);

  std::map<std::int64_t, std::int64_t> per_class;
  std::map<int, std::int64_t> per_subject, per_camera;
  // frame-count histogram over the bands the selector distinguishes
  std::int64_t bands[5] = {0, 0, 0, 0, 0};  // <26, 26..59, 60..119, 120..300, >300
  std::int64_t min_len = -1, max_len = -1;

  for (const auto& clip : index.clips) {
    ++per_class[clip.label];
    if (clip.performer >= 0) ++per_subject[clip.performer];
    if (clip.camera >= 0) ++per_camera[clip.camera];
    std::int64_t frames = 0;
    for (const auto& e : fs::directory_iterator(clip.path)) {
      const auto ext = e.path().extension().string();
      if (e.is_regular_file() && (ext == ".png" || ext == ".pgm")) ++frames;
    }
    if (min_len < 0 || frames < min_len) min_len = frames;
    if (frames > max_len) max_len = frames;
    if (frames < 26) ++bands[0];
    else if (frames < 60) ++bands[1];
    else if (frames < 120) ++bands[2];
    else if (frames <= 300) ++bands[3];
    else ++bands[4];
  }

  std::ostringstream out;
  out << "clips: " << index.clips.size() << "\n";
  out << "classes: " << index.n_classes() << "\n";
  out << "rejects: " << index.rejects.size() << " (see " << cfg.out_dir
      << "/rejects.txt)\n";
  if (!index.clips.empty()) {
    out << "frames per clip: min " << min_len << ", max " << max_len << "\n";
    out << "length bands: <26: " << bands[0] << ", 26-59: " << bands[1]
        << ", 60-119: " << bands[2] << ", 120-300: " << bands[3]
        << ", >300: " << bands[4] << "\n";
  }
  if (!per_class.empty()) {
    out << "per class:";
    for (const auto& [label, count] : per_class)
      out << " " << label << ":" << count;
    out << "\n";
  }
  if (!per_subject.empty()) {
    out << "per subject:";
    for (const auto& [id, count] : per_subject) out << " " << id << ":" << count;
    out << "\n";
  }
  if (!per_camera.empty()) {
    out << "per camera:";
    for (const auto& [id, count] : per_camera) out << " " << id << ":" << count;
    out << "\n";
  }
  return out.str();
}

std::string run_train(const RunConfig& cfg) {
  DatasetIndex index = scan_or_throw(cfg);
  check_labels(index, cfg.n_classes);
  SplitResult split = resolve_split(index, cfg);
  if (split.train.empty()) throw DataError("workflow: no training clips");

  ModelConfig mc;
  mc.n_classes = cfg.n_classes;
  Model<float> model(mc, Rng(cfg.seed));

  std::ostringstream out;
  out << "train clips: " << split.train.size()
      << ", val clips: " << split.test.size() << "\n";
  fit_and_report(model, split, cfg, out);
  return out.str();
}

std::string run_finetune(const RunConfig& cfg) {
  CheckpointMeta meta;
  Model<float> model = load_model_file(cfg.checkpoint, &meta);

  if (model.config().n_classes != cfg.n_classes) {
    if (!cfg.swap_head)
      throw ConfigError(
          "workflow: checkpoint has " +
          std::to_string(model.config().n_classes) + " classes, config wants " +
          std::to_string(cfg.n_classes) + "; pass swap_head=1 to replace the head");
    model.swap_head(cfg.n_classes, Rng(cfg.seed));
  }
  model.freeze_for_finetune(cfg.tail);

  DatasetIndex index = scan_or_throw(cfg);
  check_labels(index, cfg.n_classes);
  SplitResult split = resolve_split(index, cfg);
  if (split.train.empty()) throw DataError("workflow: no training clips");

  std::ostringstream out;
  out << "base checkpoint: " << cfg.checkpoint << " (epoch " << meta.epoch
      << ")\n";
  out << "trainable tail: " << cfg.tail << " parameterized layers\n";
  out << "train clips: " << split.train.size()
      << ", val clips: " << split.test.size() << "\n";
  fit_and_report(model, split, cfg, out);
  return out.str();
}

std::string run_eval(const RunConfig& cfg) {
  Model<float> model = load_model_file(cfg.checkpoint, nullptr);

  DatasetIndex index = scan_or_throw(cfg);
  check_labels(index, model.config().n_classes);
  std::vector<ClipMeta> clips =
      cfg.protocol.empty() ? index.clips
                           : apply_split(index, parse_protocol_file(cfg.protocol)).test;
  if (clips.empty()) throw DataError("workflow: no clips to evaluate");

  DiskBatchSource data(clips, cfg.batch_size, pad_from_config(cfg));
  EvalReport rep = evaluate(model, data, cfg.seed);

  ensure_out_dir(cfg);
  const fs::path dir(cfg.out_dir);
  write_confusion_csv(rep.cm, (dir / "confusion.csv").string());
  write_per_class_csv(rep, (dir / "per_class.csv").string());
  write_summary_csv(rep, (dir / "summary.csv").string());

  std::ostringstream out;
  out << format_eval_report(rep, cfg.top_k);
  out << "artifacts: " << cfg.out_dir
      << "/confusion.csv, per_class.csv, summary.csv\n";
  return out.str();
}

std::string run_predict(const RunConfig& cfg) {
  Model<float> model = load_model_file(cfg.checkpoint, nullptr);
  if (cfg.clip.empty()) throw ConfigError("workflow: clip is required");

  Rng rng(cfg.seed);
  FrameSelectOptions opts;
  opts.eval = true;
  opts.pad = pad_from_config(cfg);
  Tensor<float> clip = assemble_clip(load_clip_frames(cfg.clip), rng, opts);

  Tensor<float> x(Shape{1, 64, 64, 30, 1});
  std::copy(clip.flat().begin(), clip.flat().end(), x.flat().begin());
  ForwardCtx ctx;  // inference defaults
  auto logits = model.forward(share(std::move(x)), ctx);
  Tensor<float> probs = softmax(*logits);

  const std::int64_t n = model.config().n_classes;
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  for (std::int64_t c = 0; c < n; ++c) order[std::size_t(c)] = c;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::int64_t a, std::int64_t b) {
                     return probs.flat()[std::size_t(a)] >
                            probs.flat()[std::size_t(b)];
                   });

  std::ostringstream out;
  const std::int64_t k = std::min(cfg.top_k, n);
  for (std::int64_t i = 0; i < k; ++i) {
    char line[64];
    std::snprintf(line, sizeof line, "class %lld: %.6f\n",
                  (long long)order[std::size_t(i)],
                  double(probs.flat()[std::size_t(order[std::size_t(i)])]));
    out << line;
  }
  return out.str();
}

std::string run_bench(const RunConfig& cfg) {
  ModelConfig mc;
  mc.n_classes = cfg.n_classes;
  Model<float> model = cfg.checkpoint.empty()
                           ? Model<float>(mc, Rng(cfg.seed))
                           : load_model_file(cfg.checkpoint, nullptr);

  // clips through the real pipeline when a root is given, synthetic otherwise
  std::vector<Tensor<float>> clips;
  std::vector<std::vector<DepthFrame>> raw;
  if (!cfg.root.empty()) {
    DatasetIndex index = scan_or_throw(cfg);
    if (index.clips.empty()) throw DataError("workflow: no clips to bench");
    Rng rng(cfg.seed);
    FrameSelectOptions opts;
    opts.eval = true;
    opts.pad = pad_from_config(cfg);
    const std::int64_t take =
        std::min<std::int64_t>(cfg.bench_clips, std::int64_t(index.clips.size()));
    for (std::int64_t i = 0; i < take; ++i) {
      raw.push_back(load_clip_frames(index.clips[std::size_t(i)].path));
      clips.push_back(assemble_clip(raw.back(), rng, opts));
    }
  } else {
    Rng rng(cfg.seed);
    for (std::int64_t i = 0; i < cfg.bench_clips; ++i) {
      Tensor<float> c(Shape{64, 64, 30, 1});
      for (auto& v : c.flat()) v = float(rng.uniform());
      clips.push_back(std::move(c));
    }
  }

  std::vector<BenchReport> reports;
  reports.push_back(
      benchmark_latency(model, clips, cfg.repetitions, cfg.warmup));

  // preprocessing plus forward, decode excluded, when real frames exist
  if (!raw.empty()) {
    BenchReport pipe;
    pipe.stage = "pipeline_forward";
    pipe.clips = std::int64_t(raw.size());
    pipe.repetitions = cfg.repetitions;
    pipe.warmup = cfg.warmup;
    pipe.hardware = reports[0].hardware;
    Rng rng(cfg.seed);
    FrameSelectOptions opts;
    opts.eval = true;
    opts.pad = pad_from_config(cfg);
    ForwardCtx ctx;
    using clock = std::chrono::steady_clock;
    for (std::int64_t i = 0; i < cfg.warmup + cfg.repetitions; ++i) {
      const auto& frames = raw[std::size_t(i) % raw.size()];
      const auto t0 = clock::now();
      Tensor<float> clip = assemble_clip(frames, rng, opts);
      Tensor<float> x(Shape{1, 64, 64, 30, 1});
      std::copy(clip.flat().begin(), clip.flat().end(), x.flat().begin());
      auto logits = model.forward(share(std::move(x)), ctx);
      const auto t1 = clock::now();
      (void)logits;
      if (i >= cfg.warmup)
        pipe.samples_s.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    double sum = 0;
    for (double s : pipe.samples_s) sum += s;
    pipe.mean_s = sum / double(pipe.samples_s.size());
    pipe.p50_s = percentile(pipe.samples_s, 50);
    pipe.p95_s = percentile(pipe.samples_s, 95);
    reports.push_back(std::move(pipe));
  }

  ensure_out_dir(cfg);
  write_bench_csv(reports, (fs::path(cfg.out_dir) / "bench.csv").string());

  std::ostringstream out;
  for (const auto& r : reports) {
    char line[160];
    std::snprintf(line, sizeof line,
                  "%s: mean %.4f s, p50 %.4f s, p95 %.4f s per clip\n",
                  r.stage.c_str(), r.mean_s, r.p50_s, r.p95_s);
    out << line;
  }
  out << "hardware: " << reports[0].hardware << "\n";
  out << "artifacts: " << cfg.out_dir << "/bench.csv\n";
  return out.str();
}

}  // namespace d3fcnn
