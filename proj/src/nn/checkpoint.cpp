#include "nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <utility>
#include <vector>

#include "core/errors.hpp"

namespace d3fcnn {

namespace {

constexpr char kMagic[8] = {'D', '3', 'F', 'C', 'K', 'P', 'T', '\n'};

// Serialization goes through explicit little-endian byte packing so files
// written on any host read back identically.

void put_bytes(std::vector<std::uint8_t>& out, std::uint64_t v, int n) {
  for (int i = 0; i < n; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) { put_bytes(out, v, 2); }
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) { put_bytes(out, v, 4); }
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) { put_bytes(out, v, 8); }
void put_i64(std::vector<std::uint8_t>& out, std::int64_t v) {
  put_bytes(out, std::uint64_t(v), 8);
}
void put_f64(std::vector<std::uint8_t>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}
void put_f32(std::vector<std::uint8_t>& out, float v) {
  put_u32(out, std::bit_cast<std::uint32_t>(v));
}

struct ByteReader {
  const std::uint8_t* p;
  std::size_t left;

  std::uint64_t bytes(int n) {
    if (left < std::size_t(n)) throw TruncatedFileError("checkpoint: file ends mid-field");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t(p[i]) << (8 * i);
    p += n;
    left -= std::size_t(n);
    return v;
  }
  std::uint16_t u16() { return std::uint16_t(bytes(2)); }
  std::uint32_t u32() { return std::uint32_t(bytes(4)); }
  std::uint64_t u64() { return bytes(8); }
  std::int64_t i64() { return std::int64_t(bytes(8)); }
  double f64() { return std::bit_cast<double>(u64()); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    if (left < n) throw TruncatedFileError("checkpoint: file ends mid-name");
    std::string s(reinterpret_cast<const char*>(p), n);
    p += n;
    left -= n;
    return s;
  }
};

/// Every persistent tensor of the model, in a fixed walk order: per layer,
/// parameters first, then running-stat buffers.
std::vector<std::pair<std::string, Tensor<float>*>> named_tensors(Model<float>& model) {
  std::vector<std::pair<std::string, Tensor<float>*>> out;
  for (Layer<float>* l : model.layers()) {
    for (Param<float>* p : l->params()) out.emplace_back(p->name, &p->value);
    for (auto& [name, buf] : l->buffers()) out.emplace_back(l->name() + "." + name, buf);
  }
  return out;
}

}  // namespace

void save_checkpoint(Model<float>& model, const CheckpointMeta& meta,
                     const std::string& path) {
  auto tensors = named_tensors(model);
  const ModelConfig& cfg = model.config();

  std::vector<std::uint8_t> header;
  put_i64(header, cfg.n_classes);
  put_f64(header, cfg.lrelu_alpha);
  put_f64(header, cfg.dropout_rate);
  put_f64(header, cfg.bn_eps);
  put_f64(header, cfg.bn_momentum);
  put_u64(header, meta.seed);
  put_i64(header, meta.epoch);
  put_i64(header, meta.iteration);
  put_u32(header, std::uint32_t(tensors.size()));
  for (auto& [name, t] : tensors) {
    put_u16(header, std::uint16_t(name.size()));
    header.insert(header.end(), name.begin(), name.end());
    put_bytes(header, std::uint64_t(t->rank()), 1);
    for (int a = 0; a < t->rank(); ++a) put_i64(header, t->extent(a));
  }

  std::vector<std::uint8_t> body;
  std::size_t floats = 0;
  for (auto& [name, t] : tensors) floats += std::size_t(t->size());
  body.reserve(floats * 4);
  for (auto& [name, t] : tensors)
    for (float v : t->flat()) put_f32(body, v);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("checkpoint: cannot open " + path + " for writing");
  f.write(kMagic, sizeof kMagic);
  std::vector<std::uint8_t> len;
  put_u32(len, kCheckpointVersion);
  put_u32(len, std::uint32_t(header.size()));
  f.write(reinterpret_cast<const char*>(len.data()), std::streamsize(len.size()));
  f.write(reinterpret_cast<const char*>(header.data()), std::streamsize(header.size()));
  f.write(reinterpret_cast<const char*>(body.data()), std::streamsize(body.size()));
  if (!f) throw IoError("checkpoint: short write to " + path);
}

LoadedModel load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw IoError("checkpoint: cannot open " + path);
  const std::size_t file_size = std::size_t(f.tellg());
  f.seekg(0);
  std::vector<std::uint8_t> raw(file_size);
  f.read(reinterpret_cast<char*>(raw.data()), std::streamsize(file_size));
  if (!f) throw IoError("checkpoint: read failed on " + path);

  if (raw.size() < sizeof kMagic) throw TruncatedFileError("checkpoint: shorter than the magic");
  if (std::memcmp(raw.data(), kMagic, sizeof kMagic) != 0)
    throw BadMagicError("checkpoint: bad magic bytes, not a checkpoint file");

  ByteReader r{raw.data() + sizeof kMagic, raw.size() - sizeof kMagic};
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint: format version " + std::to_string(version) +
                       ", expected " + std::to_string(kCheckpointVersion));
  }
  const std::uint32_t header_size = r.u32();
  if (r.left < header_size) throw TruncatedFileError("checkpoint: header longer than the file");

  ByteReader h{r.p, header_size};
  r.p += header_size;
  r.left -= header_size;

  ModelConfig cfg;
  cfg.n_classes = h.i64();
  cfg.lrelu_alpha = h.f64();
  cfg.dropout_rate = h.f64();
  cfg.bn_eps = h.f64();
  cfg.bn_momentum = h.f64();
  CheckpointMeta meta;
  meta.seed = h.u64();
  meta.epoch = h.i64();
  meta.iteration = h.i64();
  const std::uint32_t n_entries = h.u32();

  struct Entry {
    std::string name;
    Shape shape;
  };
  std::vector<Entry> entries;
  entries.reserve(n_entries);
  for (std::uint32_t i = 0; i < n_entries; ++i) {
    Entry e;
    e.name = h.str(h.u16());
    const int rank = int(h.bytes(1));
    if (rank < 1 || rank > Tensor<float>::kMaxRank)
      throw CheckpointError("checkpoint: buffer " + e.name + " has impossible rank");
    for (int a = 0; a < rank; ++a) {
      const std::int64_t ext = h.i64();
      if (ext <= 0) throw CheckpointError("checkpoint: buffer " + e.name + " has extent <= 0");
      e.shape.push_back(ext);
    }
    entries.push_back(std::move(e));
  }

  LoadedModel out{Model<float>(cfg, Rng(meta.seed)), meta};
  auto tensors = named_tensors(out.model);
  if (tensors.size() != entries.size()) {
    throw CheckpointError("checkpoint: header lists " + std::to_string(entries.size()) +
                          " buffers, model has " + std::to_string(tensors.size()));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& [name, t] = tensors[i];
    if (entries[i].name != name || entries[i].shape != t->shape()) {
      throw CheckpointError("checkpoint: buffer " + entries[i].name +
                            " does not match the rebuilt model's " + name);
    }
    for (float& v : t->flat()) v = r.f32();
  }
  return out;
}

}  // namespace d3fcnn
