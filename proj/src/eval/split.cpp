#include "eval/split.hpp"

#include <fstream>
#include <sstream>

#include "core/errors.hpp"

namespace d3fcnn {

SplitKind split_kind_from_string(const std::string& name) {
  if (name == "cross-subject") return SplitKind::cross_subject;
  if (name == "cross-view") return SplitKind::cross_view;
  if (name == "view-combination") return SplitKind::view_combination;
  if (name == "manifest") return SplitKind::manifest;
  throw ConfigError("split: unknown kind '" + name + "'");
}

std::string to_string(SplitKind kind) {
  switch (kind) {
    case SplitKind::cross_subject: return "cross-subject";
    case SplitKind::cross_view: return "cross-view";
    case SplitKind::view_combination: return "view-combination";
    case SplitKind::manifest: return "manifest";
  }
  return "?";
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::set<int> parse_id_list(const std::string& text, const std::string& key) {
  std::set<int> ids;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      ids.insert(v);
    } catch (const std::exception&) {
      throw ConfigError("split: bad integer '" + item + "' in " + key);
    }
  }
  return ids;
}

}  // namespace

SplitProtocol parse_protocol_text(const std::string& text) {
  SplitProtocol proto;
  bool have_kind = false, have_train = false;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("split: expected key=value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "kind") {
      proto.kind = split_kind_from_string(value);
      have_kind = true;
    } else if (key == "train_ids") {
      proto.train_ids = parse_id_list(value, key);
      have_train = true;
    } else if (key == "test_ids") {
      proto.test_ids = parse_id_list(value, key);
    } else {
      throw ConfigError("split: unknown key '" + key + "'");
    }
  }
  if (!have_kind) throw ConfigError("split: protocol needs a kind= line");
  if (!have_train || proto.train_ids.empty())
    throw ConfigError("split: protocol needs a non-empty train_ids= line");
  return proto;
}

SplitProtocol parse_protocol_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("split: cannot open protocol file " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_protocol_text(buf.str());
}

SplitResult apply_split(const DatasetIndex& index, const SplitProtocol& protocol) {
  for (int id : protocol.train_ids)
    if (protocol.test_ids.count(id))
      throw ConfigError("split: id " + std::to_string(id) +
                        " appears in both train_ids and test_ids");

  SplitResult out;
  for (std::size_t i = 0; i < index.clips.size(); ++i) {
    const ClipMeta& clip = index.clips[i];
    int id = -1;
    const char* field = "?";
    switch (protocol.kind) {
      case SplitKind::cross_subject:
        id = clip.performer;
        field = "subject";
        break;
      case SplitKind::cross_view:
      case SplitKind::view_combination:
        id = clip.camera;
        field = "camera";
        break;
      case SplitKind::manifest:
        id = int(i);
        field = "index";
        break;
    }
    if (id < 0)
      throw DataError("split: clip " + clip.path + " has no " +
                      std::string(field) + " id");
    if (protocol.train_ids.count(id)) {
      out.train.push_back(clip);
    } else if (protocol.test_ids.empty() || protocol.test_ids.count(id)) {
      out.test.push_back(clip);
    } else {
      throw ConfigError("split: " + std::string(field) + " id " +
                        std::to_string(id) + " of " + clip.path +
                        " is in neither train_ids nor test_ids");
    }
  }
  return out;
}

}  // namespace d3fcnn
