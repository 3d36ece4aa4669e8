#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "deband/image.hpp"

namespace deband {

/// Integer BT.709 luma: (54 R + 183 G + 19 B + 128) >> 8. The weights sum to
/// 256, so a uniform offset on all channels shifts luma by the same amount.
std::vector<std::uint8_t> luma709(const ImageBuffer& img);

struct BandEdgeParams {
  int flat_window = 3;
  int step_max = 8;
};

/// No-reference banding proxy: fraction of pixels sitting on a small luma
/// step (1..step_max) between two flat runs. Along an axis, pixel i is a band
/// edge when d = Y[i+1] - Y[i] is such a step and the flat_window + 1 forward
/// differences on either side of it, d[i-flat_window-1 .. i-1] and
/// d[i+1 .. i+flat_window+1], are all zero. A pixel counts once even if both
/// axes flag it. Throws when the image is smaller than 2*flat_window+1.
double band_edge_density(const ImageBuffer& img, const BandEdgeParams& params = {});

/// Peak-255 PSNR over all channels; identical images give kPsnrIdentical.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();
double psnr(const ImageBuffer& a, const ImageBuffer& b);
inline bool is_identical(double psnr_db) { return psnr_db == kPsnrIdentical; }

struct Stat {
  double mean = 0.0;
  double sd = 0.0;  // population standard deviation
  std::size_t n = 0;
};

using ScoreMap = std::map<std::string, std::map<std::string, double>>;  // image -> metric -> score

struct DebandReport {
  ScoreMap per_image;
  std::map<std::string, Stat> aggregate;
};

/// Mean and population SD per metric. PSNR entries equal to kPsnrIdentical
/// are left out of the PSNR statistics; if every entry is identical the
/// aggregate mean is kPsnrIdentical. Throws on an empty map.
DebandReport aggregate(const ScoreMap& per_image);

/// A row of a method-comparison table (one method, several metrics).
/// Context rows carry externally reported values verbatim.
struct TableRow {
  std::string method;
  std::map<std::string, Stat> stats;
  bool context = false;
};

/// Reads "image_id,metric,score" lines (header optional).
ScoreMap read_score_csv(const std::filesystem::path& path);
/// Reads "method,metric,mean,sd,n" lines (header optional) into context rows,
/// preserving first-seen method order.
std::vector<TableRow> read_context_csv(const std::filesystem::path& path);

/// Aligned text table: one row per method, one "mean (+-sd)" column per metric.
/// Missing cells print as "-".
std::string render_table(const std::vector<TableRow>& rows,
                         const std::vector<std::string>& metric_order);

/// Splits one CSV line on commas, trimming surrounding whitespace.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace deband

namespace deband {

/// Scores every PNG in `in_dir` (band_edge_density as "band_edge_density";
/// with `ref_dir`, also "psnr" against the same-named reference image).
ScoreMap score_directory(const std::filesystem::path& in_dir,
                         const std::filesystem::path* ref_dir = nullptr,
                         const BandEdgeParams& params = {}, unsigned threads = 1);

/// JSON report; identical PSNR values are written as the string "identical".
std::string report_json(const DebandReport& report, const std::string& method,
                        const std::vector<TableRow>& context);

}  // namespace deband
