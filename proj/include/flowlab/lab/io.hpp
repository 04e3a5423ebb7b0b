// Output files and their manifests.
#pragma once

#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "flowlab/lab/config.hpp"
#include "json.hpp"

namespace flowlab::lab {

inline constexpr const char* kToolVersion = "flowlab 0.1.0";

/// Everything needed to reproduce one run. Written next to every output file
/// as <file>.manifest.json; only the "timings" member varies between reruns.
struct RunManifest {
  std::string command;
  nlohmann::json config;  // effective configuration
  nlohmann::json derived = nlohmann::json::object();
  std::vector<std::pair<std::string, double>> timings;
  std::vector<std::string> warnings;

  void warn(const std::string& message);
  nlohmann::json to_json(const std::string& file) const;
};

/// CSV rows with fixed columns; doubles are written with 17 significant digits.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);

  CsvTable& cell(double v);
  CsvTable& cell(long long v);
  CsvTable& cell(int v) { return cell(static_cast<long long>(v)); }
  CsvTable& cell(std::size_t v) { return cell(static_cast<long long>(v)); }
  CsvTable& cell(bool v);
  CsvTable& cell(const std::string& v);
  CsvTable& cell(const char* v) { return cell(std::string(v)); }
  /// Ends the current row; throws if it has the wrong number of cells.
  void end_row();

  std::string str() const;

 private:
  void put(std::string text);

  std::vector<std::string> columns_;
  std::vector<std::string> rows_;
  std::string current_;
  std::size_t filled_ = 0;
};

/// Serialises writes into one output directory. Each file is written whole
/// and followed by its manifest.
class OutputDir {
 public:
  OutputDir(std::string path, RunManifest& manifest);

  void write(const std::string& name, const std::string& content);
  void write_json(const std::string& name, const nlohmann::json& value);
  /// Rewrites every manifest with the final timings and warnings.
  void finalize();

  const std::string& path() const { return path_; }
  const std::vector<std::string>& files() const { return files_; }

 private:
  void write_manifest(const std::string& name);

  std::string path_;
  RunManifest& manifest_;
  std::vector<std::string> files_;
  std::mutex mutex_;
};

/// JSON text with a trailing newline; non-finite doubles become null.
std::string dump_json(const nlohmann::json& value);

}  // namespace flowlab::lab
