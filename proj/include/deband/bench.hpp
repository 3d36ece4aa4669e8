#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "deband/image.hpp"
#include "deband/pipeline.hpp"

namespace deband {

struct TimingRecord {
  std::string method;
  std::string image_id;
  double seconds = 0.0;  // wall clock, > 0
  int repeat_index = 0;
};

struct TimingSummary {
  std::string method;
  double mean_seconds = 0.0;
  std::size_t n = 0;
  unsigned threads = 1;
};

struct BenchInput {
  std::string image_id;
  ImageBuffer image;
};

struct BenchResult {
  std::vector<TimingRecord> records;
  TimingSummary summary;
  std::vector<std::string> warnings;  // failed images, excluded from the summary
};

/// Times `repeats` runs of the pipeline per image on decoded inputs, after
/// one untimed warm-up run on the first image. Only the pipeline call is
/// inside the timed region.
BenchResult time_method(const DebandBackend& backend, PipelineMode mode,
                        std::span<const BenchInput> images, int repeats,
                        const PipelineOptions& opts = {}, std::string method = {});

/// Externally measured per-method timing shown next to local results.
struct ReferenceTiming {
  std::string method;
  double seconds = 0.0;
};

/// "method,seconds" lines, header optional.
std::vector<ReferenceTiming> read_timing_csv(const std::filesystem::path& path);

/// Two-column Model | Time (seconds) table; local rows first, then context rows.
std::string render_timing_table(std::span<const TimingSummary> local,
                                std::span<const ReferenceTiming> context);

/// JSON report: records, summary, worker count and the context rows.
std::string timing_report_json(const BenchResult& result,
                               std::span<const ReferenceTiming> context);

}  // namespace deband
