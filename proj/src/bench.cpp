#include "deband/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "deband/error.hpp"
#include "deband/metrics.hpp"

namespace deband {

BenchResult time_method(const DebandBackend& backend, PipelineMode mode,
                        std::span<const BenchInput> images, int repeats,
                        const PipelineOptions& opts, std::string method) {
  if (repeats < 1) throw Error(ErrorCode::invalid_argument, "repeats must be >= 1");
  if (images.empty()) throw Error(ErrorCode::invalid_argument, "no images to time");
  if (method.empty()) method = backend.name() + "-" + mode_name(mode);

  BenchResult result;
  result.summary.method = method;
  result.summary.threads = std::max(1u, opts.threads);

  bool warm = false;
  for (const auto& input : images) {
    try {
      if (!warm) {
        (void)deband(backend, mode, input.image, opts);
        warm = true;
      }
      std::vector<TimingRecord> local;
      for (int r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        const ImageBuffer out = deband(backend, mode, input.image, opts);
        const auto t1 = std::chrono::steady_clock::now();
        // Clamp to one nanosecond so every record stays strictly positive.
        const double secs = std::max(std::chrono::duration<double>(t1 - t0).count(), 1e-9);
        local.push_back({method, input.image_id, secs, r});
      }
      result.records.insert(result.records.end(), local.begin(), local.end());
    } catch (const std::exception& e) {
      result.warnings.push_back(input.image_id + ": " + e.what());
    }
  }

  double sum = 0.0;
  for (const auto& r : result.records) sum += r.seconds;
  result.summary.n = result.records.size();
  result.summary.mean_seconds =
      result.records.empty() ? 0.0 : sum / static_cast<double>(result.records.size());
  return result;
}

std::vector<ReferenceTiming> read_timing_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::vector<ReferenceTiming> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    const auto f = split_csv_line(line);
    if (f.size() != 2) {
      throw Error(ErrorCode::format, path.string() + ":" + std::to_string(line_no) +
                                         ": expected method,seconds");
    }
    try {
      rows.push_back({f[0], std::stod(f[1])});
    } catch (const std::invalid_argument&) {
      if (line_no != 1) {
        throw Error(ErrorCode::format,
                    path.string() + ":" + std::to_string(line_no) + ": malformed number");
      }
    }
  }
  return rows;
}

std::string render_timing_table(std::span<const TimingSummary> local,
                                std::span<const ReferenceTiming> context) {
  std::vector<std::pair<std::string, std::string>> rows;
  char buf[64];
  for (const auto& s : local) {
    std::snprintf(buf, sizeof buf, "%.4f", s.mean_seconds);
    rows.emplace_back(s.method, buf);
  }
  for (const auto& c : context) {
    std::snprintf(buf, sizeof buf, "%.4f", c.seconds);
    rows.emplace_back(c.method + " *", buf);
  }
  std::size_t w0 = std::string("Model").size();
  std::size_t w1 = std::string("Time (seconds)").size();
  for (const auto& [a, b] : rows) {
    w0 = std::max(w0, a.size());
    w1 = std::max(w1, b.size());
  }
  auto line = [&](const std::string& a, const std::string& b) {
    return " " + a + std::string(w0 - a.size() + 1, ' ') + "| " + b + "\n";
  };
  std::string out = line("Model", "Time (seconds)");
  out += std::string(w0 + 2, '-') + "+" + std::string(w1 + 2, '-') + "\n";
  for (const auto& [a, b] : rows) out += line(a, b);
  if (!context.empty()) out += "(* externally reported values)\n";
  return out;
}

std::string timing_report_json(const BenchResult& result,
                               std::span<const ReferenceTiming> context) {
  nlohmann::json j;
  j["method"] = result.summary.method;
  j["threads"] = result.summary.threads;
  j["summary"] = {{"mean_seconds", result.summary.mean_seconds}, {"n", result.summary.n}};
  j["records"] = nlohmann::json::array();
  for (const auto& r : result.records) {
    j["records"].push_back({{"method", r.method},
                            {"image_id", r.image_id},
                            {"seconds", r.seconds},
                            {"repeat_index", r.repeat_index}});
  }
  j["warnings"] = result.warnings;
  j["context"] = nlohmann::json::array();
  for (const auto& c : context) j["context"].push_back({{"method", c.method}, {"seconds", c.seconds}});
  j["timed_region"] = "pipeline call only; decode/encode excluded; one warm-up run excluded";
  return j.dump(2);
}

}  // namespace deband
