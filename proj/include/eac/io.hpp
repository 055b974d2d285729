#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "eac/core.hpp"

namespace eac {

// Label file format: one integer per line, row order = item order. Arbitrary
// integers are accepted and compacted on load.
inline void save_labels(const std::filesystem::path& path, const Partitioning& pi) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (Label l : pi.labels()) out << l << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline Partitioning load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<long long> raw;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    long long v = 0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc{} || ptr != line.data() + line.size())
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": not an integer label: '" + line + "'");
    raw.push_back(v);
  }
  if (raw.empty()) throw std::runtime_error(path.string() + ": no labels");
  return partition_from_labels(raw);
}

// Ensemble directory: manifest.json naming the member label files in order.
inline void save_ensemble(const std::filesystem::path& dir, const ClusterEnsemble& ensemble) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["items"] = ensemble.items();
  auto& names = manifest["partitionings"] = nlohmann::json::array();
  for (std::size_t j = 0; j < ensemble.size(); ++j) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "p%03zu.labels", j);
    save_labels(dir / buf, ensemble.partitioning(j));
    names.push_back(buf);
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

inline ClusterEnsemble load_ensemble(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("cannot read " + (dir / "manifest.json").string());
  nlohmann::json manifest = nlohmann::json::parse(in);
  std::vector<Partitioning> parts;
  for (const auto& name : manifest.at("partitionings"))
    parts.push_back(load_labels(dir / name.get<std::string>()));
  if (parts.empty()) throw std::runtime_error(dir.string() + ": empty ensemble");
  ClusterEnsemble ensemble(std::move(parts));
  if (manifest.contains("items") &&
      manifest["items"].get<std::size_t>() != ensemble.items())
    throw std::runtime_error(dir.string() + ": manifest item count mismatch");
  return ensemble;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace eac
