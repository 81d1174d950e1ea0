// Exercises the public C interface through the shared library, the same
// surface the command-line tool uses. No internal headers.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "d3fcnn/d3fcnn.h"

namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

/// Minimal 16-bit big-endian PGM writer; the test may not use library code.
void write_pgm(const fs::path& path, int w, int h,
               const std::vector<std::uint16_t>& px) {
  std::ofstream f(path, std::ios::binary);
  f << "P5\n" << w << " " << h << "\n65535\n";
  for (std::uint16_t v : px) {
    f.put(char(v >> 8));
    f.put(char(v & 0xff));
  }
}

void write_clip(const fs::path& dir, int frames, int action) {
  fs::create_directories(dir);
  for (int t = 0; t < frames; ++t) {
    std::vector<std::uint16_t> px(48 * 48, 0);
    const int r0 = action == 1 ? 20 : 4 + t / 2;
    const int c0 = action == 1 ? 4 + t / 2 : 20;
    for (int dr = 0; dr < 6; ++dr)
      for (int dc = 0; dc < 6; ++dc) px[(r0 + dr) * 48 + (c0 + dc)] = 1800;
    char name[16];
    std::snprintf(name, sizeof name, "f%03d.pgm", t);
    write_pgm(dir / name, 48, 48, px);
  }
}

struct ModelGuard {
  d3f_model* m = nullptr;
  ~ModelGuard() { d3f_model_free(m); }
};

struct OptionsGuard {
  d3f_options* o = nullptr;
  ~OptionsGuard() { d3f_options_free(o); }
};

}  // namespace

TEST_CASE("version and error strings are always present") {
  CHECK(d3f_version() != nullptr);
  CHECK(std::string(d3f_version()) == "1.0.0");
  CHECK(d3f_last_error() != nullptr);
  d3f_string_free(nullptr);  // must be a safe no-op
}

TEST_CASE("option sets validate keys and files at the call site") {
  OptionsGuard opts;
  REQUIRE(d3f_options_new(&opts.o) == D3F_OK);

  CHECK(d3f_options_set(opts.o, "n_classes", "10") == D3F_OK);
  CHECK(d3f_options_set(opts.o, "bogus_key", "1") == D3F_ERR_CONFIG);
  CHECK(std::string(d3f_last_error()).find("bogus_key") != std::string::npos);
  CHECK(d3f_options_set(opts.o, "epochs", "three") == D3F_ERR_CONFIG);
  CHECK(d3f_options_set(nullptr, "epochs", "3") == D3F_ERR_ARGUMENT);
  CHECK(d3f_options_load_file(opts.o, "/no/such/config") == D3F_ERR_IO);
}

TEST_CASE("models create, describe, and free through handles") {
  ModelGuard m;
  REQUIRE(d3f_model_create(60, 7, &m.m) == D3F_OK);
  std::int64_t n = 0;
  CHECK(d3f_model_n_classes(m.m, &n) == D3F_OK);
  CHECK(n == 60);
  std::int64_t params = 0;
  CHECK(d3f_model_param_count(m.m, &params) == D3F_OK);
  CHECK(params == 399836);

  CHECK(d3f_model_create(1, 0, &m.m) == D3F_ERR_CONFIG);  // one class is no task
  CHECK(d3f_model_n_classes(nullptr, &n) == D3F_ERR_ARGUMENT);
}

TEST_CASE("an all-zero clip still yields a probability row summing to one") {
  ModelGuard m;
  REQUIRE(d3f_model_create(60, 3, &m.m) == D3F_OK);

  std::vector<float> clip(64 * 64 * 30, 0.0f);
  std::vector<float> probs(60, -1.0f);
  REQUIRE(d3f_predict_clip(m.m, clip.data(), std::int64_t(clip.size()),
                           probs.data(), 60) == D3F_OK);
  double sum = 0;
  for (float p : probs) {
    CHECK(p >= 0.0f);
    CHECK(p <= 1.0f);
    sum += p;
  }
  CHECK(std::abs(sum - 1.0) < 1e-6);

  CHECK(d3f_predict_clip(m.m, clip.data(), 5, probs.data(), 60) ==
        D3F_ERR_ARGUMENT);
  CHECK(d3f_predict_clip(m.m, clip.data(), std::int64_t(clip.size()),
                         probs.data(), 59) == D3F_ERR_ARGUMENT);
}

TEST_CASE("checkpoints round trip through the handle api") {
  fs::path dir = fresh_dir("d3f_capi_ckpt");
  const std::string path = (dir / "model.bin").string();

  ModelGuard a;
  REQUIRE(d3f_model_create(10, 5, &a.m) == D3F_OK);
  REQUIRE(d3f_model_save(a.m, path.c_str()) == D3F_OK);

  ModelGuard b;
  REQUIRE(d3f_model_load(path.c_str(), &b.m) == D3F_OK);
  std::int64_t n = 0;
  CHECK(d3f_model_n_classes(b.m, &n) == D3F_OK);
  CHECK(n == 10);

  // identical predictions prove the weights travelled
  std::vector<float> clip(64 * 64 * 30);
  for (std::size_t i = 0; i < clip.size(); ++i)
    clip[i] = float((i * 2654435761u % 1000) / 1000.0);
  std::vector<float> pa(10), pb(10);
  REQUIRE(d3f_predict_clip(a.m, clip.data(), std::int64_t(clip.size()),
                           pa.data(), 10) == D3F_OK);
  REQUIRE(d3f_predict_clip(b.m, clip.data(), std::int64_t(clip.size()),
                           pb.data(), 10) == D3F_OK);
  for (int i = 0; i < 10; ++i) CHECK(pa[std::size_t(i)] == pb[std::size_t(i)]);

  // corruption and absence map to distinct statuses
  {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.put('X');
  }
  d3f_model* bad = nullptr;
  CHECK(d3f_model_load(path.c_str(), &bad) == D3F_ERR_CHECKPOINT);
  CHECK(bad == nullptr);
  CHECK(d3f_model_load((dir / "absent.bin").string().c_str(), &bad) ==
        D3F_ERR_IO);
}

TEST_CASE("clip directories load through the ingestion pipeline") {
  fs::path dir = fresh_dir("d3f_capi_clip");
  write_clip(dir / "clip", 40, 1);

  std::vector<float> clip(64 * 64 * 30, -1.0f);
  REQUIRE(d3f_load_clip_dir((dir / "clip").string().c_str(), clip.data(),
                            std::int64_t(clip.size())) == D3F_OK);
  float top = 0;
  for (float v : clip) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
    top = std::max(top, v);
  }
  CHECK(top > 0.0f);  // the blob survived ingestion

  CHECK(d3f_load_clip_dir((dir / "absent").string().c_str(), clip.data(),
                          std::int64_t(clip.size())) == D3F_ERR_DATA);
  CHECK(d3f_load_clip_dir((dir / "clip").string().c_str(), clip.data(), 7) ==
        D3F_ERR_ARGUMENT);
}

TEST_CASE("workflow runners execute against a fixture tree") {
  fs::path root = fresh_dir("d3f_capi_scan");
  write_clip(root / "S001C001P001R001A001", 32, 1);
  write_clip(root / "S001C002P002R001A002", 34, 2);
  fs::create_directories(root / "junk_name");
  fs::path out = fresh_dir("d3f_capi_out");

  OptionsGuard opts;
  REQUIRE(d3f_options_new(&opts.o) == D3F_OK);
  REQUIRE(d3f_options_set(opts.o, "root", root.string().c_str()) == D3F_OK);
  REQUIRE(d3f_options_set(opts.o, "out_dir", out.string().c_str()) == D3F_OK);

  char* report = nullptr;
  REQUIRE(d3f_run_scan(opts.o, &report) == D3F_OK);
  REQUIRE(report != nullptr);
  std::string text(report);
  d3f_string_free(report);
  CHECK(text.find("clips: 2") != std::string::npos);
  CHECK(text.find("rejects: 1") != std::string::npos);
  CHECK(fs::exists(out / "rejects.txt"));

  // a runner with a bad config reports it without running
  OptionsGuard empty;
  REQUIRE(d3f_options_new(&empty.o) == D3F_OK);
  CHECK(d3f_run_train(empty.o, nullptr) == D3F_ERR_CONFIG);
  CHECK(std::string(d3f_last_error()).find("root") != std::string::npos);
}
