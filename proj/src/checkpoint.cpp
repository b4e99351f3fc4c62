#include "pitchlab/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "pitchlab/rng.hpp"

namespace pitchlab {

const Eigen::MatrixXd& NamedTensors::get(const std::string& name) const {
  for (const auto& [n, m] : items)
    if (n == name) return m;
  throw CheckpointError("tensor '" + name + "' not in checkpoint");
}

bool NamedTensors::has(const std::string& name) const {
  for (const auto& [n, m] : items)
    if (n == name) return true;
  return false;
}

uint64_t tensors_content_hash(const NamedTensors& tensors) {
  uint64_t h = 14695981039346656037ULL;
  for (const auto& [name, m] : tensors.items) {
    h = fnv1a64(name.data(), name.size(), h);
    h = fnv1a64(m.data(), sizeof(double) * m.size(), h);
  }
  return h;
}

void save_checkpoint(const std::string& prefix, const std::string& tag,
                     const NamedTensors& tensors) {
  std::ofstream bin(prefix + ".bin", std::ios::binary);
  if (!bin) throw CheckpointError("cannot write '" + prefix + ".bin'");
  size_t offset = 0;
  std::ostringstream man;
  man << "format_version 1\n";
  man << "tag " << tag << "\n";
  for (const auto& [name, m] : tensors.items) {
    bin.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * m.size()));
    man << "tensor " << name << " " << m.rows() << " " << m.cols() << " " << offset << "\n";
    offset += m.size();
  }
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(tensors_content_hash(tensors)));
  man << "hash " << hex << "\n";
  if (!bin) throw CheckpointError("short write to '" + prefix + ".bin'");
  std::ofstream mf(prefix + ".manifest.txt");
  if (!mf) throw CheckpointError("cannot write '" + prefix + ".manifest.txt'");
  mf << man.str();
}

NamedTensors load_checkpoint(const std::string& prefix, std::string* tag_out) {
  std::ifstream mf(prefix + ".manifest.txt");
  if (!mf) throw CheckpointError("cannot open '" + prefix + ".manifest.txt'");
  std::ifstream bin(prefix + ".bin", std::ios::binary);
  if (!bin) throw CheckpointError("cannot open '" + prefix + ".bin'");

  NamedTensors out;
  std::string line, expected_hash;
  while (std::getline(mf, line)) {
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "format_version") {
      int v = 0;
      ls >> v;
      if (v != 1) throw CheckpointError("unsupported checkpoint format_version");
    } else if (kind == "tag") {
      std::string tag;
      ls >> tag;
      if (tag_out) *tag_out = tag;
    } else if (kind == "tensor") {
      std::string name;
      long rows = 0, cols = 0, offset = 0;
      ls >> name >> rows >> cols >> offset;
      if (!ls || rows < 0 || cols < 0) throw CheckpointError("malformed tensor line: " + line);
      Eigen::MatrixXd m(rows, cols);
      bin.seekg(static_cast<std::streamoff>(offset * sizeof(double)));
      bin.read(reinterpret_cast<char*>(m.data()),
               static_cast<std::streamsize>(sizeof(double) * m.size()));
      if (!bin) throw CheckpointError("blob truncated while reading tensor '" + name + "'");
      out.add(name, std::move(m));
    } else if (kind == "hash") {
      ls >> expected_hash;
    }
  }
  if (!expected_hash.empty()) {
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(tensors_content_hash(out)));
    if (expected_hash != hex)
      throw CheckpointError("checkpoint content hash mismatch for '" + prefix + "'");
  }
  return out;
}

}  // namespace pitchlab
