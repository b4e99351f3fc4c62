#pragma once

#include <Eigen/Core>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace pitchlab {

struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

// Parameter checkpoints: one flat binary blob of doubles plus a plain-text
// manifest listing shapes, the tag, and a content hash of the blob.
// Files written: <prefix>.bin and <prefix>.manifest.txt
struct NamedTensors {
  std::vector<std::pair<std::string, Eigen::MatrixXd>> items;

  void add(const std::string& name, const Eigen::MatrixXd& m) { items.emplace_back(name, m); }
  const Eigen::MatrixXd& get(const std::string& name) const;
  bool has(const std::string& name) const;
};

void save_checkpoint(const std::string& prefix, const std::string& tag,
                     const NamedTensors& tensors);
NamedTensors load_checkpoint(const std::string& prefix, std::string* tag_out = nullptr);

uint64_t tensors_content_hash(const NamedTensors& tensors);

}  // namespace pitchlab
