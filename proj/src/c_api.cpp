#include "deband/deband.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <set>
#include <string>

#include <json.hpp>

#include "deband/bench.hpp"
#include "deband/dataset.hpp"
#include "deband/error.hpp"
#include "deband/generator.hpp"
#include "deband/metrics.hpp"
#include "deband/pipeline.hpp"
#include "deband/png_io.hpp"

struct deband_image {
  deband::ImageBuffer img;
};

struct deband_backend {
  std::unique_ptr<deband::DebandBackend> impl;
  std::string name;
};

namespace {

namespace fs = std::filesystem;

thread_local std::string t_last_error;

deband_status fail(deband_status status, std::string message) {
  t_last_error = std::move(message);
  return status;
}

deband_status status_of(deband::ErrorCode code) {
  switch (code) {
    case deband::ErrorCode::invalid_argument:
      return DEBAND_ERR_INVALID_ARGUMENT;
    case deband::ErrorCode::io:
      return DEBAND_ERR_IO;
    case deband::ErrorCode::format:
      return DEBAND_ERR_FORMAT;
    case deband::ErrorCode::contract:
      return DEBAND_ERR_CONTRACT;
    case deband::ErrorCode::processing:
      return DEBAND_ERR_PROCESSING;
  }
  return DEBAND_ERR_INTERNAL;
}

template <typename Fn>
deband_status guarded(Fn&& fn) {
  try {
    fn();
    return DEBAND_OK;
  } catch (const deband::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(DEBAND_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(DEBAND_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(DEBAND_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(DEBAND_ERR_INTERNAL, "unknown failure");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw deband::Error(deband::ErrorCode::invalid_argument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw deband::Error(deband::ErrorCode::io, "cannot write " + path.string());
  out << text;
  if (!out) throw deband::Error(deband::ErrorCode::io, "failed writing " + path.string());
}

deband::PipelineMode to_mode(deband_mode mode) {
  switch (mode) {
    case DEBAND_MODE_FULL:
      return deband::PipelineMode::full;
    case DEBAND_MODE_WEIGHTED:
      return deband::PipelineMode::weighted;
  }
  throw deband::Error(deband::ErrorCode::invalid_argument, "unknown mode");
}

deband_backend* wrap_backend(std::unique_ptr<deband::DebandBackend> impl) {
  auto* b = new deband_backend{std::move(impl), {}};
  b->name = b->impl->name();
  return b;
}

}  // namespace

extern "C" {

const char* deband_version(void) { return "1.0.0"; }

const char* deband_status_string(deband_status status) {
  switch (status) {
    case DEBAND_OK:
      return "ok";
    case DEBAND_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case DEBAND_ERR_IO:
      return "i/o error";
    case DEBAND_ERR_FORMAT:
      return "format error";
    case DEBAND_ERR_CONTRACT:
      return "contract violation";
    case DEBAND_ERR_PROCESSING:
      return "processing error";
    case DEBAND_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

const char* deband_last_error(void) { return t_last_error.c_str(); }

void deband_string_free(char* str) { std::free(str); }

deband_status deband_image_create(uint32_t width, uint32_t height, const uint8_t* rgb,
                                  deband_image** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be NULL");
    require(width > 0 && height > 0 && width <= (1u << 20) && height <= (1u << 20),
            "image dimensions out of range");
    const std::size_t n = static_cast<std::size_t>(width) * height * 3;
    std::vector<std::uint8_t> data(n, 0);
    if (rgb != nullptr) std::memcpy(data.data(), rgb, n);
    *out = new deband_image{
        deband::ImageBuffer(static_cast<int>(width), static_cast<int>(height), std::move(data))};
  });
}

deband_status deband_image_load_png(const char* path, deband_image** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "path and out must not be NULL");
    *out = new deband_image{deband::read_png(path)};
  });
}

deband_status deband_image_save_png(const deband_image* img, const char* path) {
  return guarded([&] {
    require(img != nullptr && path != nullptr, "image and path must not be NULL");
    if (!deband::has_png_extension(path)) {
      throw deband::Error(deband::ErrorCode::format,
                          std::string(path) + ": only PNG output is supported");
    }
    deband::write_png(path, img->img);
  });
}

uint32_t deband_image_width(const deband_image* img) {
  return img ? static_cast<uint32_t>(img->img.width()) : 0;
}
uint32_t deband_image_height(const deband_image* img) {
  return img ? static_cast<uint32_t>(img->img.height()) : 0;
}
const uint8_t* deband_image_data(const deband_image* img) {
  return img ? img->img.data().data() : nullptr;
}
void deband_image_free(deband_image* img) { delete img; }

void deband_classic_params_default(deband_classic_params* params) {
  if (params == nullptr) return;
  const deband::ClassicDebandParams d;
  params->threshold = d.threshold;
  params->range = d.range;
  params->seed = d.seed;
}

deband_status deband_backend_identity(deband_backend** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be NULL");
    *out = wrap_backend(std::make_unique<deband::IdentityBackend>());
  });
}

deband_status deband_backend_classic(const deband_classic_params* params, deband_backend** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be NULL");
    deband::ClassicDebandParams p;
    if (params != nullptr) {
      p.threshold = params->threshold;
      p.range = params->range;
      p.seed = params->seed;
    }
    require(p.threshold >= 0, "threshold must be >= 0");
    require(p.range >= 1, "range must be >= 1");
    *out = wrap_backend(std::make_unique<deband::ClassicBackend>(p));
  });
}

deband_status deband_backend_unet(const char* weights_path, deband_backend** out) {
  return guarded([&] {
    require(weights_path != nullptr && out != nullptr, "path and out must not be NULL");
    *out = wrap_backend(std::make_unique<deband::UnetBackend>(deband::load_weights(weights_path)));
  });
}

const char* deband_backend_name(const deband_backend* backend) {
  return backend ? backend->name.c_str() : "";
}

void deband_backend_free(deband_backend* backend) { delete backend; }

deband_status deband_run(const deband_backend* backend, deband_mode mode, unsigned threads,
                         const deband_image* in, deband_image** out) {
  return guarded([&] {
    require(backend != nullptr && in != nullptr && out != nullptr, "NULL argument");
    deband::PipelineOptions opts;
    opts.threads = threads == 0 ? 1 : threads;
    *out = new deband_image{deband::deband(*backend->impl, to_mode(mode), in->img, opts)};
  });
}

deband_status deband_weights_write_synthetic(const char* path, int random, uint64_t seed) {
  return guarded([&] {
    require(path != nullptr, "path must not be NULL");
    deband::write_weight_file(
        path, deband::synthetic_weights(
                  random ? deband::SyntheticWeights::random : deband::SyntheticWeights::zero,
                  seed));
  });
}

deband_status deband_weights_validate(const char* path) {
  return guarded([&] {
    require(path != nullptr, "path must not be NULL");
    (void)deband::load_weights(path);
  });
}

deband_status deband_fixture_check(const char* fixture_json, unsigned threads,
                                   double* worst_error, int* passed) {
  return guarded([&] {
    require(fixture_json != nullptr, "fixture path must not be NULL");
    const auto result = deband::check_fixture(fixture_json, threads == 0 ? 1 : threads);
    double worst = 0.0;
    for (const auto& c : result.cases) worst = std::max(worst, c.mean_abs_error);
    if (worst_error) *worst_error = worst;
    if (passed) *passed = result.passed() ? 1 : 0;
  });
}

void deband_extract_params_default(deband_extract_params* params) {
  if (params == nullptr) return;
  const deband::ExtractParams d;
  params->patch = d.patch;
  params->stride = d.stride;
  params->tau = d.tau;
}

deband_status deband_dataset_extract(const char* banded_dir, const char* pristine_dir,
                                     const char* masks_dir, const char* out_dir,
                                     const deband_extract_params* params, unsigned threads,
                                     size_t* n_records) {
  return guarded([&] {
    require(banded_dir && pristine_dir && masks_dir && out_dir, "directories must not be NULL");
    deband::ExtractParams p;
    if (params != nullptr) {
      p.patch = params->patch;
      p.stride = params->stride;
      p.tau = params->tau;
    }
    const auto sources = deband::discover_sources(banded_dir, pristine_dir, masks_dir);
    const auto manifest = deband::build_dataset(sources, out_dir, p, threads == 0 ? 1 : threads);
    if (n_records) *n_records = manifest.records.size();
  });
}

deband_status deband_dataset_split(const char* manifest_in, const char* manifest_out,
                                   const double ratios[3], uint64_t seed,
                                   size_t split_counts[3]) {
  return guarded([&] {
    require(manifest_in && manifest_out && ratios, "NULL argument");
    auto in = deband::read_manifest(manifest_in);
    auto out = deband::split_by_content(std::move(in.records), {ratios[0], ratios[1], ratios[2]},
                                        seed);
    out.patch = in.patch;
    out.stride = in.stride;
    out.tau = in.tau;
    deband::write_manifest(manifest_out, out);
    if (split_counts) {
      split_counts[0] = split_counts[1] = split_counts[2] = 0;
      for (const auto& r : out.records) ++split_counts[static_cast<int>(*r.split)];
    }
  });
}

deband_status deband_dataset_verify(const char* manifest, double max_mean_abs_diff,
                                    size_t* n_violations, char** report_json) {
  return guarded([&] {
    require(manifest != nullptr, "manifest path must not be NULL");
    const auto m = deband::read_manifest(manifest);
    deband::VerifyOptions opts;
    if (max_mean_abs_diff > 0) opts.max_mean_abs_diff = max_mean_abs_diff;
    const auto violations = deband::verify_manifest(m, fs::path(manifest).parent_path(), opts);
    if (n_violations) *n_violations = violations.size();
    if (report_json) {
      nlohmann::json j;
      j["manifest"] = manifest;
      j["records"] = m.records.size();
      j["violations"] = nlohmann::json::array();
      for (const auto& v : violations) {
        j["violations"].push_back({{"kind", v.kind}, {"image_id", v.image_id}, {"detail", v.detail}});
      }
      *report_json = dup_string(j.dump(2));
    }
  });
}

deband_status deband_band_edge_density(const deband_image* img, int flat_window, int step_max,
                                       double* out) {
  return guarded([&] {
    require(img != nullptr && out != nullptr, "NULL argument");
    *out = deband::band_edge_density(img->img, {flat_window, step_max});
  });
}

deband_status deband_psnr(const deband_image* a, const deband_image* b, double* out) {
  return guarded([&] {
    require(a != nullptr && b != nullptr && out != nullptr, "NULL argument");
    *out = deband::psnr(a->img, b->img);
  });
}

deband_status deband_evaluate(const deband_evaluate_options* options, const char* report_path,
                              char** table_text) {
  return guarded([&] {
    require(options != nullptr && options->in_dir != nullptr && report_path != nullptr,
            "in_dir and report_path are required");
    const fs::path ref = options->ref_dir ? fs::path(options->ref_dir) : fs::path();
    auto scores = deband::score_directory(options->in_dir, options->ref_dir ? &ref : nullptr, {},
                                          options->threads == 0 ? 1 : options->threads);
    if (options->scores_csv) {
      for (const auto& [image, metrics] : deband::read_score_csv(options->scores_csv)) {
        for (const auto& [metric, v] : metrics) scores[image][metric] = v;
      }
    }
    const auto report = deband::aggregate(scores);
    const std::string label = options->label ? options->label : "evaluated";

    std::vector<deband::TableRow> rows{{label, report.aggregate, false}};
    std::vector<deband::TableRow> context;
    if (options->context_csv) context = deband::read_context_csv(options->context_csv);
    rows.insert(rows.end(), context.begin(), context.end());

    std::vector<std::string> order;
    std::set<std::string> seen;
    for (const char* m : {"band_edge_density", "psnr"}) {
      if (report.aggregate.count(m)) {
        order.push_back(m);
        seen.insert(m);
      }
    }
    for (const auto& row : rows) {
      for (const auto& [metric, s] : row.stats) {
        if (seen.insert(metric).second) order.push_back(metric);
      }
    }
    const std::string table = deband::render_table(rows, order);
    write_text(report_path, deband::report_json(report, label, context) + "\n");
    write_text(std::string(report_path) + ".txt", table);
    if (table_text) *table_text = dup_string(table);
  });
}

deband_status deband_bench(const deband_backend* backend, deband_mode mode,
                           const deband_bench_options* options, const char* report_path,
                           char** table_text) {
  return guarded([&] {
    require(backend != nullptr && options != nullptr && options->in_dir != nullptr &&
                report_path != nullptr,
            "backend, in_dir and report_path are required");
    std::vector<deband::BenchInput> inputs;
    for (const auto& f : deband::list_png_files(options->in_dir)) {
      inputs.push_back({f.stem().string(), deband::read_png(f)});
    }
    if (inputs.empty()) {
      throw deband::Error(deband::ErrorCode::io,
                          std::string(options->in_dir) + ": no PNG images");
    }
    deband::PipelineOptions opts;
    opts.threads = options->threads == 0 ? 1 : options->threads;
    const auto result = deband::time_method(*backend->impl, to_mode(mode), inputs,
                                            options->repeats, opts,
                                            options->label ? options->label : "");
    std::vector<deband::ReferenceTiming> context;
    if (options->context_csv) context = deband::read_timing_csv(options->context_csv);
    const deband::TimingSummary summaries[] = {result.summary};
    std::string table = deband::render_timing_table(summaries, context);
    for (const auto& w : result.warnings) table += "warning: " + w + "\n";
    write_text(report_path, deband::timing_report_json(result, context) + "\n");
    write_text(std::string(report_path) + ".txt", table);
    if (table_text) *table_text = dup_string(table);
  });
}

}  // extern "C"
