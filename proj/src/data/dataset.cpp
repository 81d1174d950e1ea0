#include "data/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <optional>

#include "core/errors.hpp"

namespace fs = std::filesystem;

namespace d3fcnn {

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = char(std::tolower((unsigned char)c));
  return s;
}

bool is_frame_file(const fs::path& p) {
  const std::string ext = lower(p.extension().string());
  return ext == ".png" || ext == ".pgm";
}

/// S017C003P020R002A060 -> fields; nullopt when the name does not fit.
std::optional<ClipMeta> parse_ntu_name(const std::string& name) {
  const char tags[5] = {'S', 'C', 'P', 'R', 'A'};
  if (name.size() != 20) return std::nullopt;
  int values[5];
  for (int i = 0; i < 5; ++i) {
    const std::size_t at = std::size_t(i) * 4;
    if (name[at] != tags[i]) return std::nullopt;
    int v = 0;
    for (int d = 1; d <= 3; ++d) {
      const char c = name[at + std::size_t(d)];
      if (c < '0' || c > '9') return std::nullopt;
      v = v * 10 + (c - '0');
    }
    values[i] = v;
  }
  if (values[4] < 1) return std::nullopt;  // action ids are 1-based
  ClipMeta m;
  m.setup = values[0];
  m.camera = values[1];
  m.performer = values[2];
  m.replication = values[3];
  m.action = values[4];
  m.label = values[4] - 1;
  return m;
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (std::string& f : out) {
    while (!f.empty() && std::isspace((unsigned char)f.front())) f.erase(f.begin());
    while (!f.empty() && std::isspace((unsigned char)f.back())) f.pop_back();
  }
  return out;
}

DatasetIndex scan_ntu(const std::string& root) {
  if (!fs::is_directory(root)) throw DataError("scan: " + root + " is not a directory");
  DatasetIndex index;
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const fs::path& dir : dirs) {
    const std::string name = dir.filename().string();
    auto meta = parse_ntu_name(name);
    if (!meta) {
      index.rejects.push_back(name + ": name does not match S###C###P###R###A###");
      continue;
    }
    bool has_frames = false;
    for (const auto& f : fs::directory_iterator(dir)) {
      if (f.is_regular_file() && is_frame_file(f.path())) {
        has_frames = true;
        break;
      }
    }
    if (!has_frames) {
      index.rejects.push_back(name + ": no frame images inside");
      continue;
    }
    meta->path = dir.string();
    index.clips.push_back(std::move(*meta));
  }
  return index;
}

DatasetIndex scan_manifest(const std::string& root) {
  fs::path manifest(root);
  if (fs::is_directory(manifest)) manifest /= "manifest.csv";
  std::ifstream f(manifest);
  if (!f) throw IoError("scan: cannot open manifest " + manifest.string());
  const fs::path base = manifest.parent_path();

  DatasetIndex index;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_csv_row(line);
    if (lineno == 1 && !fields.empty() && lower(fields[0]) == "path") continue;  // header
    if (fields.size() < 2 || fields.size() > 4) {
      throw DataError("manifest line " + std::to_string(lineno) +
                      ": want path,label[,subject,camera]");
    }
    ClipMeta m;
    fs::path p(fields[0]);
    m.path = (p.is_absolute() ? p : base / p).lexically_normal().string();
    try {
      m.label = std::stoll(fields[1]);
      if (fields.size() >= 3 && !fields[2].empty()) m.performer = std::stoi(fields[2]);
      if (fields.size() >= 4 && !fields[3].empty()) m.camera = std::stoi(fields[3]);
    } catch (const std::exception&) {
      throw DataError("manifest line " + std::to_string(lineno) + ": non-numeric field");
    }
    if (m.label < 0)
      throw DataError("manifest line " + std::to_string(lineno) + ": label must be >= 0");
    if (!fs::is_directory(m.path))
      throw DataError("manifest line " + std::to_string(lineno) + ": no clip directory " +
                      m.path);
    index.clips.push_back(std::move(m));
  }
  std::sort(index.clips.begin(), index.clips.end(),
            [](const ClipMeta& a, const ClipMeta& b) { return a.path < b.path; });
  return index;
}

}  // namespace

std::int64_t DatasetIndex::n_classes() const {
  std::int64_t top = -1;
  for (const ClipMeta& c : clips) top = std::max(top, c.label);
  return top + 1;
}

Naming naming_from_string(const std::string& s) {
  if (s == "ntu") return Naming::ntu;
  if (s == "generic") return Naming::generic;
  throw ConfigError("naming must be 'ntu' or 'generic', got '" + s + "'");
}

DatasetIndex scan_dataset(const std::string& root, Naming naming) {
  return naming == Naming::ntu ? scan_ntu(root) : scan_manifest(root);
}

std::vector<DepthFrame> load_clip_frames(const std::string& dir) {
  if (!fs::is_directory(dir)) throw DataError("clip: " + dir + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_frame_file(entry.path())) files.push_back(entry.path());
  }
  if (files.empty()) throw DataError("clip: no frame images in " + dir);
  std::sort(files.begin(), files.end());
  std::vector<DepthFrame> frames;
  frames.reserve(files.size());
  for (const fs::path& f : files) frames.push_back(decode_frame(f.string()));
  return frames;
}

}  // namespace d3fcnn
