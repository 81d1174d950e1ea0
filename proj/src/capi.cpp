#include "d3fcnn/d3fcnn.h"

#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include "app/config.hpp"
#include "app/workflows.hpp"
#include "core/errors.hpp"
#include "core/pointwise.hpp"
#include "data/clip.hpp"
#include "data/dataset.hpp"
#include "nn/checkpoint.hpp"
#include "nn/model.hpp"

using namespace d3fcnn;

namespace {

thread_local std::string g_last_error = "no error";

void set_error(const std::string& msg) { g_last_error = msg; }

/// Runs a callable, translating the error hierarchy into status codes.
template <typename Fn>
d3f_status guarded(Fn&& fn) {
  try {
    fn();
    return D3F_OK;
  } catch (const ShapeError& e) {
    set_error(e.what());
    return D3F_ERR_ARGUMENT;
  } catch (const ConfigError& e) {
    set_error(e.what());
    return D3F_ERR_CONFIG;
  } catch (const CheckpointError& e) {
    set_error(e.what());
    return D3F_ERR_CHECKPOINT;
  } catch (const DataError& e) {
    set_error(e.what());
    return D3F_ERR_DATA;
  } catch (const IoError& e) {
    set_error(e.what());
    return D3F_ERR_IO;
  } catch (const NumericError& e) {
    set_error(e.what());
    return D3F_ERR_NUMERIC;
  } catch (const std::exception& e) {
    set_error(e.what());
    return D3F_ERR_INTERNAL;
  } catch (...) {
    set_error("unknown failure");
    return D3F_ERR_INTERNAL;
  }
}

d3f_status bad_argument(const char* msg) {
  set_error(msg);
  return D3F_ERR_ARGUMENT;
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

constexpr std::int64_t kClipFloats = 64 * 64 * 30;

}  // namespace

struct d3f_options {
  std::string config_file;
  std::vector<std::pair<std::string, std::string>> overrides;

  RunConfig resolve() const { return build_config(config_file, overrides); }
};

struct d3f_model {
  Model<float> model;
  std::uint64_t seed;
};

namespace {

using WorkflowFn = std::string (*)(const RunConfig&);

d3f_status run_workflow(const d3f_options* opts, char** report_out,
                        WorkflowFn workflow) {
  if (!opts) return bad_argument("run: options are NULL");
  if (report_out) *report_out = nullptr;
  return guarded([&] {
    const std::string report = workflow(opts->resolve());
    if (report_out) *report_out = dup_string(report);
  });
}

}  // namespace

extern "C" {

const char* d3f_last_error(void) { return g_last_error.c_str(); }

const char* d3f_version(void) { return "1.0.0"; }

void d3f_string_free(char* s) { delete[] s; }

d3f_status d3f_options_new(d3f_options** out) {
  if (!out) return bad_argument("options_new: out is NULL");
  return guarded([&] { *out = new d3f_options(); });
}

void d3f_options_free(d3f_options* opts) { delete opts; }

d3f_status d3f_options_load_file(d3f_options* opts, const char* path) {
  if (!opts || !path) return bad_argument("options_load_file: NULL argument");
  return guarded([&] {
    RunConfig probe;  // parse now so errors surface at the call site
    apply_config_file(probe, path);
    opts->config_file = path;
  });
}

d3f_status d3f_options_set(d3f_options* opts, const char* key,
                           const char* value) {
  if (!opts || !key || !value) return bad_argument("options_set: NULL argument");
  return guarded([&] {
    RunConfig probe;  // validate the key and value shape immediately
    apply_setting(probe, key, value);
    opts->overrides.emplace_back(key, value);
  });
}

d3f_status d3f_run_scan(const d3f_options* opts, char** report_out) {
  return run_workflow(opts, report_out, [](const RunConfig& c) { return run_scan(c); });
}

d3f_status d3f_run_train(const d3f_options* opts, char** report_out) {
  return run_workflow(opts, report_out, [](const RunConfig& c) { return run_train(c); });
}

d3f_status d3f_run_finetune(const d3f_options* opts, char** report_out) {
  return run_workflow(opts, report_out,
                      [](const RunConfig& c) { return run_finetune(c); });
}

d3f_status d3f_run_eval(const d3f_options* opts, char** report_out) {
  return run_workflow(opts, report_out, [](const RunConfig& c) { return run_eval(c); });
}

d3f_status d3f_run_predict(const d3f_options* opts, char** report_out) {
  return run_workflow(opts, report_out,
                      [](const RunConfig& c) { return run_predict(c); });
}

d3f_status d3f_run_bench(const d3f_options* opts, char** report_out) {
  return run_workflow(opts, report_out, [](const RunConfig& c) { return run_bench(c); });
}

d3f_status d3f_model_create(int64_t n_classes, uint64_t seed, d3f_model** out) {
  if (!out) return bad_argument("model_create: out is NULL");
  *out = nullptr;
  return guarded([&] {
    ModelConfig cfg;
    cfg.n_classes = n_classes;
    *out = new d3f_model{Model<float>(cfg, Rng(seed)), seed};
  });
}

d3f_status d3f_model_load(const char* path, d3f_model** out) {
  if (!out) return bad_argument("model_load: out is NULL");
  *out = nullptr;
  if (!path) return bad_argument("model_load: path is NULL");
  return guarded([&] {
    LoadedModel loaded = load_checkpoint(path);
    *out = new d3f_model{std::move(loaded.model), loaded.meta.seed};
  });
}

void d3f_model_free(d3f_model* model) { delete model; }

d3f_status d3f_model_n_classes(const d3f_model* model, int64_t* out) {
  if (!model || !out) return bad_argument("model_n_classes: NULL argument");
  *out = model->model.config().n_classes;
  return D3F_OK;
}

d3f_status d3f_model_param_count(d3f_model* model, int64_t* out) {
  if (!model || !out) return bad_argument("model_param_count: NULL argument");
  return guarded([&] { *out = model->model.param_count(); });
}

d3f_status d3f_model_save(d3f_model* model, const char* path) {
  if (!model || !path) return bad_argument("model_save: NULL argument");
  return guarded([&] {
    CheckpointMeta meta;
    meta.seed = model->seed;
    save_checkpoint(model->model, meta, path);
  });
}

d3f_status d3f_predict_clip(d3f_model* model, const float* clip,
                            int64_t clip_len, float* probs_out,
                            int64_t probs_len) {
  if (!model || !clip || !probs_out)
    return bad_argument("predict_clip: NULL argument");
  if (clip_len != kClipFloats)
    return bad_argument("predict_clip: clip must hold 64*64*30 floats");
  const std::int64_t n = model->model.config().n_classes;
  if (probs_len != n)
    return bad_argument("predict_clip: probs_out must hold n_classes floats");
  return guarded([&] {
    Tensor<float> x(Shape{1, 64, 64, 30, 1});
    std::memcpy(x.data(), clip, sizeof(float) * std::size_t(kClipFloats));
    ForwardCtx ctx;  // inference defaults
    auto logits = model->model.forward(share(std::move(x)), ctx);
    Tensor<float> probs = softmax(*logits);
    std::memcpy(probs_out, probs.data(), sizeof(float) * std::size_t(n));
  });
}

d3f_status d3f_load_clip_dir(const char* dir, float* clip_out,
                             int64_t clip_len) {
  if (!dir || !clip_out) return bad_argument("load_clip_dir: NULL argument");
  if (clip_len != kClipFloats)
    return bad_argument("load_clip_dir: clip_out must hold 64*64*30 floats");
  return guarded([&] {
    Rng rng(0);  // unused: midpoint selection draws nothing
    FrameSelectOptions opts;
    opts.eval = true;
    Tensor<float> clip = assemble_clip(load_clip_frames(dir), rng, opts);
    std::memcpy(clip_out, clip.data(), sizeof(float) * std::size_t(kClipFloats));
  });
}

}  // extern "C"
