#include "flowlab/lab/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "flowlab/errors.hpp"
#include "flowlab/format.hpp"
#include "flowlab/sampling.hpp"

namespace flowlab::lab {

namespace fs = std::filesystem;
using nlohmann::json;

void RunManifest::warn(const std::string& message) {
  for (const auto& w : warnings) {
    if (w == message) return;
  }
  warnings.push_back(message);
}

json RunManifest::to_json(const std::string& file) const {
  json j;
  j["file"] = file;
  j["command"] = command;
  j["tool_version"] = kToolVersion;
  j["rng_algorithm"] = CounterRng::kAlgorithm;
  j["config"] = config;
  j["derived"] = derived;
  j["warnings"] = warnings;
  json t = json::object();
  for (const auto& [name, seconds] : timings) t[name] = seconds;
  j["timings"] = t;
  return j;
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvTable::put(std::string text) {
  if (filled_ == columns_.size()) throw Error(ErrorCode::InvalidArgument, "CSV row has too many cells");
  if (filled_ > 0) current_ += ',';
  current_ += text;
  ++filled_;
}

CsvTable& CsvTable::cell(double v) {
  put(fmt17(v));
  return *this;
}

CsvTable& CsvTable::cell(long long v) {
  put(std::to_string(v));
  return *this;
}

CsvTable& CsvTable::cell(bool v) {
  put(v ? "true" : "false");
  return *this;
}

CsvTable& CsvTable::cell(const std::string& v) {
  if (v.find_first_of(",\"\n") == std::string::npos) {
    put(v);
    return *this;
  }
  std::string quoted = "\"";
  for (char c : v) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  put(quoted + "\"");
  return *this;
}

void CsvTable::end_row() {
  if (filled_ != columns_.size()) throw Error(ErrorCode::InvalidArgument, "CSV row has too few cells");
  rows_.push_back(std::move(current_));
  current_.clear();
  filled_ = 0;
}

std::string CsvTable::str() const {
  std::string out;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i > 0) out += ',';
    out += columns_[i];
  }
  out += '\n';
  for (const auto& r : rows_) {
    out += r;
    out += '\n';
  }
  return out;
}

namespace {

json scrub(const json& v) {
  if (v.is_number_float()) {
    const double d = v.get<double>();
    return std::isfinite(d) ? v : json(nullptr);
  }
  if (v.is_array()) {
    json out = json::array();
    for (const auto& e : v) out.push_back(scrub(e));
    return out;
  }
  if (v.is_object()) {
    json out = json::object();
    for (auto it = v.begin(); it != v.end(); ++it) out[it.key()] = scrub(it.value());
    return out;
  }
  return v;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + p.string());
  out << content;
  if (!out) throw Error(ErrorCode::InvalidArgument, "write failed for " + p.string());
}

}  // namespace

std::string dump_json(const json& value) { return scrub(value).dump(2) + "\n"; }

OutputDir::OutputDir(std::string path, RunManifest& manifest) : path_(std::move(path)), manifest_(manifest) {
  std::error_code ec;
  fs::create_directories(path_, ec);
  if (ec) throw Error(ErrorCode::InvalidArgument, "cannot create output directory " + path_ + ": " + ec.message());
}

void OutputDir::write(const std::string& name, const std::string& content) {
  std::lock_guard<std::mutex> lock(mutex_);
  write_file(fs::path(path_) / name, content);
  bool known = false;
  for (const auto& f : files_) known = known || f == name;
  if (!known) files_.push_back(name);
  write_manifest(name);
}

void OutputDir::write_json(const std::string& name, const json& value) { write(name, dump_json(value)); }

void OutputDir::write_manifest(const std::string& name) {
  write_file(fs::path(path_) / (name + ".manifest.json"), dump_json(manifest_.to_json(name)));
}

void OutputDir::finalize() {
  std::lock_guard<std::mutex> lock(mutex_);
  for (const auto& f : files_) write_manifest(f);
}

}  // namespace flowlab::lab
