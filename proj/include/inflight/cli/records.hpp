#pragma once

#include "inflight/core/serialize.hpp"
#include "inflight/pipeline/pipeline.hpp"

#include <fstream>
#include <mutex>
#include <string>
#include <vector>

namespace inflight {

inline constexpr int kRecordVersion = 1;
inline constexpr const char* kTrajectorySchema = "inflight.trajectory";
inline constexpr const char* kSampleSchema = "inflight.sample";

struct RecordError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline json header_record(const std::string& schema, bool gating, std::uint64_t seed) {
  return json{{"kind", "header"}, {"schema", schema}, {"version", kRecordVersion}, {"gating", gating},
              {"seed", seed}};
}

/// Append-only writer: one record per line, each written in a single call
/// under a lock, with a per-file sequence number in "ts".
class JsonlWriter {
 public:
  JsonlWriter(const std::string& path, const json& header) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw RecordError("cannot open '" + path + "' for writing");
    write_line(header);
  }

  void write(json record) {
    std::lock_guard lock(mu_);
    record["ts"] = ts_++;
    write_line(record);
  }

  void close() {
    std::lock_guard lock(mu_);
    out_.flush();
    if (!out_) throw RecordError("write to '" + path_ + "' failed");
    out_.close();
  }

 private:
  void write_line(const json& j) {
    const std::string line = j.dump() + "\n";
    out_.write(line.data(), static_cast<std::streamsize>(line.size()));
    if (!out_) throw RecordError("write to '" + path_ + "' failed");
  }

  std::string path_;
  std::ofstream out_;
  std::mutex mu_;
  std::uint64_t ts_ = 0;
};

class JsonlSink final : public RecordSink {
 public:
  JsonlSink(const std::string& trajectories_path, const std::string& dataset_path, bool gating, std::uint64_t seed)
      : trajectories_(trajectories_path, header_record(kTrajectorySchema, gating, seed)),
        samples_(dataset_path, header_record(kSampleSchema, gating, seed)) {}

  void trajectory(const Trajectory& t) override { trajectories_.write(json(t)); }
  void sample(const SampleRecord& s) override { samples_.write(json(s)); }

  void close() {
    trajectories_.close();
    samples_.close();
  }

 private:
  JsonlWriter trajectories_;
  JsonlWriter samples_;
};

struct RecordFile {
  json header;
  std::vector<json> records;
};

/// Reads a record file. A final line without its newline, or one that does
/// not parse, is reported as truncated; malformed lines elsewhere are
/// schema errors.
inline RecordFile read_record_file(const std::string& path, const std::string& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RecordError("cannot open '" + path + "'");
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (content.empty()) throw RecordError("'" + path + "' is empty (missing header record)");
  const bool ends_clean = content.back() == '\n';

  RecordFile f;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    const auto nl = content.find('\n', pos);
    const bool last = nl == std::string::npos || nl + 1 == content.size();
    const std::string line = content.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? content.size() : nl + 1;
    ++line_no;
    if (last && !ends_clean)
      throw RecordError("'" + path + "' line " + std::to_string(line_no) + ": truncated final record");
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw RecordError("'" + path + "' line " + std::to_string(line_no) +
                        (last ? ": truncated final record" : ": malformed record"));
    }
    if (!j.is_object()) throw RecordError("'" + path + "' line " + std::to_string(line_no) + ": not an object");
    if (line_no == 1) {
      if (j.value("kind", "") != "header") throw RecordError("'" + path + "' has no header record");
      if (j.value("schema", "") != schema)
        throw RecordError("'" + path + "' has schema '" + j.value("schema", "") + "', expected '" + schema + "'");
      if (j.value("version", 0) != kRecordVersion)
        throw RecordError("'" + path + "' has unsupported version " + j.value("version", json(nullptr)).dump());
      f.header = std::move(j);
    } else {
      f.records.push_back(std::move(j));
    }
  }
  return f;
}

inline std::vector<Trajectory> read_trajectory_log(const std::string& path, bool* gating = nullptr) {
  const auto f = read_record_file(path, kTrajectorySchema);
  if (gating) *gating = f.header.value("gating", true);
  std::vector<Trajectory> out;
  out.reserve(f.records.size());
  for (std::size_t i = 0; i < f.records.size(); ++i) {
    try {
      out.push_back(f.records[i].get<Trajectory>());
    } catch (const std::exception& e) {
      throw RecordError("'" + path + "' record " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<SampleRecord> read_dataset(const std::string& path) {
  const auto f = read_record_file(path, kSampleSchema);
  std::vector<SampleRecord> out;
  out.reserve(f.records.size());
  for (std::size_t i = 0; i < f.records.size(); ++i) {
    try {
      out.push_back(f.records[i].get<SampleRecord>());
    } catch (const std::exception& e) {
      throw RecordError("'" + path + "' record " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

/// Prompt files hold one prompt per line, either plain text or an object
/// {"prompt": ..., "difficulty": ...}. Blank lines are skipped.
inline std::vector<PromptItem> parse_prompts(std::istream& in) {
  std::vector<PromptItem> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    if (line.front() == '{') {
      try {
        const auto j = json::parse(line);
        PromptItem p;
        p.text = j.at("prompt").get<std::string>();
        if (j.contains("difficulty") && !j["difficulty"].is_null()) {
          p.difficulty = j["difficulty"].get<double>();
          bin_difficulty(*p.difficulty);
        }
        for (const auto& [k, v] : j.items())
          if (k != "prompt" && k != "difficulty") throw std::invalid_argument("unknown key '" + k + "'");
        out.push_back(std::move(p));
      } catch (const std::exception& e) {
        throw RecordError("prompt line " + std::to_string(line_no) + ": " + e.what());
      }
    } else {
      out.push_back({line, std::nullopt});
    }
  }
  return out;
}

inline std::vector<PromptItem> load_prompts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RecordError("cannot open prompts file '" + path + "'");
  return parse_prompts(in);
}

inline std::vector<std::string> load_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RecordError("cannot open '" + path + "'");
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!text::trim(line).empty()) out.push_back(line);
  }
  return out;
}

}  // namespace inflight
