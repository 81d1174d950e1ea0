#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "data/image_io.hpp"

namespace d3fcnn {

/// One video on disk: a directory of 16-bit depth frames plus everything the
/// split protocols need. Unknown id fields are -1.
struct ClipMeta {
  std::string path;
  std::int64_t label = -1;  // 0-based class index
  int setup = -1;
  int camera = -1;
  int performer = -1;
  int replication = -1;
  int action = -1;  // 1-based action id as encoded in the name
};

struct DatasetIndex {
  std::vector<ClipMeta> clips;        // ordered by path
  std::vector<std::string> rejects;   // "<name>: <reason>" per skipped entry

  std::int64_t n_classes() const;  // max label + 1
};

enum class Naming {
  ntu,      // directory names S###C###P###R###A###
  generic,  // manifest CSV rows: path,label[,subject,camera]
};

Naming naming_from_string(const std::string& s);

/// Indexes every clip under `root`. In ntu mode each subdirectory is one
/// clip and its name carries the metadata; unparsable names go to `rejects`.
/// In generic mode `root` is a manifest CSV (or a directory holding
/// `manifest.csv`) with paths resolved relative to the manifest.
DatasetIndex scan_dataset(const std::string& root, Naming naming);

/// Decodes every frame image (*.png / *.pgm, name-sorted) of one clip.
std::vector<DepthFrame> load_clip_frames(const std::string& dir);

}  // namespace d3fcnn
