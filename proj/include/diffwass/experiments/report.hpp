#pragma once

// Report files: per-experiment JSON summaries and plot-data CSVs, plus the
// record files written by a run.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "diffwass/errors.hpp"
#include "diffwass/experiments/record.hpp"

namespace diffwass {

namespace detail {

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string() + (ec ? ": " + ec.message() : ""));
  }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::string plot_csv(const std::vector<const RunRecord*>& runs) {
  std::ostringstream os;
  os << "row,config_hash,quantity,t,r,value,stderr,target\n";
  for (const RunRecord* r : runs) {
    for (const auto& a : r->aggregates) {
      if (a.quantity != r->series) continue;
      os << "data," << r->config_hash << ',' << a.quantity << ',' << format_number(a.t) << ','
         << format_number(a.r) << ',' << format_number(a.value) << ',' << format_number(a.std_error) << ','
         << format_number(a.target) << '\n';
    }
    os << "target," << r->config_hash << ',' << r->headline << ",,," << format_number(r->target) << ",,"
       << format_number(r->target) << '\n';
  }
  return os.str();
}

}  // namespace detail

/// Writes <id>_summary.json and <id>_plot.csv into `dir` for every experiment
/// id present. Runs are ordered by config hash, so the output depends only on
/// the set of records. Returns the paths written.
inline std::vector<std::filesystem::path> emit_report(const std::vector<RunRecord>& records,
                                                      const std::filesystem::path& dir) {
  if (records.empty()) throw ArgumentError("emit_report: need at least one record");
  detail::ensure_directory(dir);
  std::map<std::string, std::vector<const RunRecord*>> groups;
  for (const auto& r : records) groups[r.experiment].push_back(&r);
  std::vector<std::filesystem::path> written;
  for (auto& [id, runs] : groups) {
    std::stable_sort(runs.begin(), runs.end(),
                     [](const RunRecord* a, const RunRecord* b) { return a->config_hash < b->config_hash; });
    nlohmann::json summary{{"experiment", id}, {"runs", nlohmann::json::array()}};
    for (const RunRecord* r : runs) summary["runs"].push_back(summary_json(*r));
    const auto js = dir / (id + "_summary.json");
    detail::write_text(js, summary.dump(2) + "\n");
    const auto csv = dir / (id + "_plot.csv");
    detail::write_text(csv, detail::plot_csv(runs));
    written.push_back(js);
    written.push_back(csv);
  }
  return written;
}

inline std::string record_stem(const RunRecord& r) { return r.experiment + "_" + r.config_hash; }

/// <id>_<hash>.record.json (full record) and <id>_<hash>_replicas.csv.
inline std::vector<std::filesystem::path> save_record(const RunRecord& r, const std::filesystem::path& dir) {
  detail::ensure_directory(dir);
  const auto js = dir / (record_stem(r) + ".record.json");
  detail::write_text(js, nlohmann::json(r).dump(1) + "\n");
  std::ostringstream os;
  write_rows_csv(os, r);
  const auto csv = dir / (record_stem(r) + "_replicas.csv");
  detail::write_text(csv, os.str());
  return {js, csv};
}

/// Every *.record.json in `dir`, in file-name order.
inline std::vector<RunRecord> load_records(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.size() > 12 && name.ends_with(".record.json")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<RunRecord> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) throw IoError("cannot read " + f.string());
    try {
      out.push_back(nlohmann::json::parse(in).get<RunRecord>());
    } catch (const nlohmann::json::exception& e) {
      throw IoError("malformed record " + f.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace diffwass
