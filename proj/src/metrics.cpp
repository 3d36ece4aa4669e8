#include "deband/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "deband/error.hpp"
#include "deband/parallel.hpp"
#include "deband/png_io.hpp"

namespace deband {

std::vector<std::uint8_t> luma709(const ImageBuffer& img) {
  std::vector<std::uint8_t> y(static_cast<std::size_t>(img.width()) * img.height());
  const auto src = img.data();
  for (std::size_t i = 0; i < y.size(); ++i) {
    const int r = src[i * 3], g = src[i * 3 + 1], b = src[i * 3 + 2];
    y[i] = static_cast<std::uint8_t>((54 * r + 183 * g + 19 * b + 128) >> 8);
  }
  return y;
}

namespace {

// Marks band-edge positions along one line of `n` samples spaced by `step`.
void mark_line(const std::uint8_t* line, std::ptrdiff_t step, int n, const BandEdgeParams& p,
               std::uint8_t* marks, std::ptrdiff_t mark_step) {
  const int flank = p.flat_window + 1;
  auto diff = [&](int i) { return int(line[(i + 1) * step]) - int(line[i * step]); };
  for (int i = flank; i + flank + 1 < n; ++i) {
    const int d = std::abs(diff(i));
    if (d < 1 || d > p.step_max) continue;
    bool flat = true;
    for (int k = 1; k <= flank && flat; ++k) flat = diff(i - k) == 0 && diff(i + k) == 0;
    if (flat) marks[i * mark_step] = 1;
  }
}

std::string format_number(double v) {
  if (std::isinf(v)) return "identical";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

double band_edge_density(const ImageBuffer& img, const BandEdgeParams& params) {
  if (params.flat_window < 0 || params.step_max < 1) {
    throw Error(ErrorCode::invalid_argument, "band-edge parameters out of range");
  }
  const int min_side = 2 * params.flat_window + 1;
  if (img.width() < min_side || img.height() < min_side) {
    throw Error(ErrorCode::invalid_argument,
                "image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                    " is too small for flat_window " + std::to_string(params.flat_window));
  }
  const int w = img.width();
  const int h = img.height();
  const auto luma = luma709(img);
  std::vector<std::uint8_t> marks(luma.size(), 0);
  for (int y = 0; y < h; ++y) {
    mark_line(luma.data() + static_cast<std::size_t>(y) * w, 1, w, params,
              marks.data() + static_cast<std::size_t>(y) * w, 1);
  }
  for (int x = 0; x < w; ++x) {
    mark_line(luma.data() + x, w, h, params, marks.data() + x, w);
  }
  const auto edges = std::count(marks.begin(), marks.end(), 1);
  return static_cast<double>(edges) / static_cast<double>(marks.size());
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorCode::invalid_argument, "psnr needs images of equal size");
  }
  const auto da = a.data();
  const auto db = b.data();
  double sse = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = static_cast<double>(da[i]) - db[i];
    sse += d * d;
  }
  if (sse == 0.0) return kPsnrIdentical;
  const double mse = sse / static_cast<double>(da.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

DebandReport aggregate(const ScoreMap& per_image) {
  if (per_image.empty()) throw Error(ErrorCode::invalid_argument, "no scores to aggregate");
  std::map<std::string, std::vector<double>> by_metric;
  std::map<std::string, std::size_t> identical;
  for (const auto& [image, scores] : per_image) {
    for (const auto& [metric, value] : scores) {
      if (std::isinf(value) && value > 0) {
        ++identical[metric];
        by_metric[metric];
        continue;
      }
      by_metric[metric].push_back(value);
    }
  }

  DebandReport report;
  report.per_image = per_image;
  for (const auto& [metric, values] : by_metric) {
    Stat s;
    s.n = values.size();
    if (values.empty()) {
      s.mean = kPsnrIdentical;
      s.n = identical[metric];
    } else {
      double sum = 0.0;
      for (double v : values) sum += v;
      s.mean = sum / static_cast<double>(values.size());
      double sq = 0.0;
      for (double v : values) sq += (v - s.mean) * (v - s.mean);
      s.sd = std::sqrt(sq / static_cast<double>(values.size()));
    }
    report.aggregate[metric] = s;
  }
  return report;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  return fields;
}

namespace {

template <typename RowFn>
void for_each_csv_row(const std::filesystem::path& path, std::size_t columns, RowFn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    auto fields = split_csv_line(line);
    if (fields.size() != columns) {
      throw Error(ErrorCode::format, path.string() + ":" + std::to_string(line_no) +
                                         ": expected " + std::to_string(columns) + " fields");
    }
    try {
      fn(fields);
    } catch (const std::invalid_argument&) {
      if (line_no == 1) continue;  // header
      throw Error(ErrorCode::format,
                  path.string() + ":" + std::to_string(line_no) + ": malformed number");
    }
  }
}

}  // namespace

ScoreMap read_score_csv(const std::filesystem::path& path) {
  ScoreMap scores;
  for_each_csv_row(path, 3, [&](const std::vector<std::string>& f) {
    const double v = std::stod(f[2]);
    scores[f[0]][f[1]] = v;
  });
  return scores;
}

std::vector<TableRow> read_context_csv(const std::filesystem::path& path) {
  std::vector<TableRow> rows;
  for_each_csv_row(path, 5, [&](const std::vector<std::string>& f) {
    Stat s;
    s.mean = std::stod(f[2]);
    s.sd = std::stod(f[3]);
    s.n = static_cast<std::size_t>(std::stoull(f[4]));
    auto it = std::find_if(rows.begin(), rows.end(),
                           [&](const TableRow& r) { return r.method == f[0]; });
    if (it == rows.end()) {
      rows.push_back({f[0], {}, true});
      it = rows.end() - 1;
    }
    it->stats[f[1]] = s;
  });
  return rows;
}

std::string render_table(const std::vector<TableRow>& rows,
                         const std::vector<std::string>& metric_order) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"Method"};
  header.insert(header.end(), metric_order.begin(), metric_order.end());
  cells.push_back(header);
  for (const auto& row : rows) {
    std::vector<std::string> line{row.method + (row.context ? " *" : "")};
    for (const auto& metric : metric_order) {
      auto it = row.stats.find(metric);
      if (it == row.stats.end()) {
        line.push_back("-");
      } else if (std::isinf(it->second.mean)) {
        line.push_back("identical");
      } else {
        line.push_back(format_number(it->second.mean) + " (+-" + format_number(it->second.sd) +
                       ")");
      }
    }
    cells.push_back(std::move(line));
  }

  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) widths[i] = std::max(widths[i], line[i].size());
  }
  std::string out;
  auto rule = [&] {
    for (std::size_t i = 0; i < widths.size(); ++i) {
      out += std::string(widths[i] + 2, '-');
      out += i + 1 < widths.size() ? "+" : "\n";
    }
  };
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t i = 0; i < cells[r].size(); ++i) {
      out += " " + cells[r][i] + std::string(widths[i] - cells[r][i].size() + 1, ' ');
      out += i + 1 < cells[r].size() ? "|" : "\n";
    }
    if (r == 0) rule();
  }
  if (std::any_of(rows.begin(), rows.end(), [](const TableRow& r) { return r.context; })) {
    out += "(* externally reported values)\n";
  }
  return out;
}

ScoreMap score_directory(const std::filesystem::path& in_dir,
                         const std::filesystem::path* ref_dir, const BandEdgeParams& params,
                         unsigned threads) {
  const auto files = list_png_files(in_dir);
  if (files.empty()) throw Error(ErrorCode::io, in_dir.string() + ": no PNG images");
  std::vector<std::map<std::string, double>> scores(files.size());
  parallel_for(files.size(), threads, [&](std::size_t i) {
    const ImageBuffer img = read_png(files[i]);
    scores[i]["band_edge_density"] = band_edge_density(img, params);
    if (ref_dir != nullptr) {
      const ImageBuffer ref = read_png(*ref_dir / files[i].filename());
      scores[i]["psnr"] = psnr(img, ref);
    }
  });
  ScoreMap out;
  for (std::size_t i = 0; i < files.size(); ++i) out[files[i].stem().string()] = scores[i];
  return out;
}

namespace {

nlohmann::json score_value(double v) {
  if (std::isinf(v) && v > 0) return "identical";
  return v;
}

nlohmann::json stat_json(const Stat& s) {
  return {{"mean", score_value(s.mean)}, {"sd", s.sd}, {"n", s.n}};
}

}  // namespace

std::string report_json(const DebandReport& report, const std::string& method,
                        const std::vector<TableRow>& context) {
  nlohmann::json j;
  j["method"] = method;
  j["sd_kind"] = "population";
  j["per_image"] = nlohmann::json::object();
  for (const auto& [image, scores] : report.per_image) {
    for (const auto& [metric, v] : scores) j["per_image"][image][metric] = score_value(v);
  }
  j["aggregate"] = nlohmann::json::object();
  for (const auto& [metric, s] : report.aggregate) j["aggregate"][metric] = stat_json(s);
  j["context"] = nlohmann::json::array();
  for (const auto& row : context) {
    nlohmann::json r;
    r["method"] = row.method;
    for (const auto& [metric, s] : row.stats) r["stats"][metric] = stat_json(s);
    j["context"].push_back(r);
  }
  return j.dump(2);
}

}  // namespace deband
