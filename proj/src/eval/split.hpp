#pragma once

#include <set>
#include <string>
#include <vector>

#include "data/dataset.hpp"

namespace d3fcnn {

enum class SplitKind {
  cross_subject,    // id = performer; test defaults to the complement
  cross_view,       // id = camera; test defaults to the complement
  view_combination, // id = camera; both sides listed explicitly
  manifest,         // id = position in the scanned index (0-based)
};

SplitKind split_kind_from_string(const std::string& name);
std::string to_string(SplitKind kind);

struct SplitProtocol {
  SplitKind kind = SplitKind::cross_subject;
  std::set<int> train_ids;
  std::set<int> test_ids;  // empty: everything not in train_ids
};

/// Plain-text protocol: one `key=value` per line, `#` comments allowed.
/// Keys: kind (required), train_ids (required, comma-separated integers),
/// test_ids (optional).
SplitProtocol parse_protocol_file(const std::string& path);
SplitProtocol parse_protocol_text(const std::string& text);

struct SplitResult {
  std::vector<ClipMeta> train;
  std::vector<ClipMeta> test;
};

/// Partitions the index by the protocol's id field. The partition is always
/// disjoint and exhaustive: a clip whose id lands in neither side, or a clip
/// missing the id field entirely, stops the split instead of being dropped.
SplitResult apply_split(const DatasetIndex& index, const SplitProtocol& protocol);

}  // namespace d3fcnn
