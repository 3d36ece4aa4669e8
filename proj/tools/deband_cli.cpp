// deband_cli: command-line front end over the deband C API.
//
// Exit codes: 0 success, 1 processing error (or verify found violations),
// 2 usage error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "deband/deband.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitProcessing = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  unsigned threads = 1;
  uint64_t seed = 0;
  bool verbose = false;
};

struct ImageDeleter {
  void operator()(deband_image* p) const { deband_image_free(p); }
};
struct BackendDeleter {
  void operator()(deband_backend* p) const { deband_backend_free(p); }
};
using ImagePtr = std::unique_ptr<deband_image, ImageDeleter>;
using BackendPtr = std::unique_ptr<deband_backend, BackendDeleter>;

struct CString {
  char* p = nullptr;
  ~CString() { deband_string_free(p); }
};

int report_failure(deband_status s, const std::string& context) {
  std::cerr << "error: " << context << ": " << deband_status_string(s) << ": "
            << deband_last_error() << "\n";
  // Bad arguments that only surface inside the library still count as usage errors.
  return s == DEBAND_ERR_INVALID_ARGUMENT ? kExitUsage : kExitProcessing;
}

bool has_png_ext(const std::string& p) {
  std::string ext = std::filesystem::path(p).extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".png";
}

deband_mode parse_mode(const std::string& m) {
  return m == "weighted" ? DEBAND_MODE_WEIGHTED : DEBAND_MODE_FULL;
}

struct BackendFlags {
  std::string backend = "unet";
  std::string mode = "full";
  std::string weights;
  int threshold = 5;
  int range = 16;
};

void add_backend_flags(CLI::App* cmd, BackendFlags& f) {
  cmd->add_option("--mode", f.mode, "Application mode: full image or weighted tiles")
      ->check(CLI::IsMember({"full", "weighted"}));
  cmd->add_option("--backend", f.backend, "Debanding backend")
      ->check(CLI::IsMember({"unet", "classic", "identity"}));
  cmd->add_option("--weights", f.weights, "DBW1 generator weights (required for unet)");
  cmd->add_option("--threshold", f.threshold, "classic: gate threshold in 8-bit levels")
      ->check(CLI::Range(0, 255));
  cmd->add_option("--range", f.range, "classic: maximum sampling radius in pixels")
      ->check(CLI::Range(1, 4096));
}

void validate_backend_flags(const BackendFlags& f) {
  if (f.backend == "unet" && f.weights.empty()) {
    throw UsageError("--weights is required with --backend unet");
  }
  if (f.backend != "unet" && !f.weights.empty()) {
    throw UsageError("--weights only applies to --backend unet");
  }
}

int make_backend(const BackendFlags& f, const Globals& g, BackendPtr& out) {
  deband_backend* b = nullptr;
  deband_status s = DEBAND_OK;
  if (f.backend == "unet") {
    s = deband_backend_unet(f.weights.c_str(), &b);
  } else if (f.backend == "classic") {
    deband_classic_params p;
    deband_classic_params_default(&p);
    p.threshold = f.threshold;
    p.range = f.range;
    p.seed = g.seed;
    s = deband_backend_classic(&p, &b);
  } else {
    s = deband_backend_identity(&b);
  }
  if (s != DEBAND_OK) return report_failure(s, "creating backend '" + f.backend + "'");
  out.reset(b);
  return kExitOk;
}

std::vector<double> parse_ratios(const std::string& text) {
  std::vector<double> r;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      r.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw UsageError("--ratios: '" + part + "' is not a number");
    }
  }
  if (r.size() != 3) throw UsageError("--ratios needs exactly three values (train,val,test)");
  double sum = 0;
  for (double v : r) {
    if (!(v > 0)) throw UsageError("--ratios values must be positive");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw UsageError("--ratios must sum to 1");
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Image debanding: dataset construction, U-Net inference, baseline, evaluation"};
  app.name("deband_cli");
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--threads", g.threads, "Worker threads for tiles, rows and sources")
      ->check(CLI::Range(1u, 1024u));
  app.add_option("--seed", g.seed, "Seed for classic radii, split bookkeeping and make-weights");
  app.add_flag("--verbose", g.verbose, "Print progress details to stderr");

  // extract-patches
  std::string banded_dir, pristine_dir, masks_dir, out_dir;
  deband_extract_params ep;
  deband_extract_params_default(&ep);
  auto* extract = app.add_subcommand("extract-patches", "Cut banded/pristine patch pairs");
  extract->add_option("--banded", banded_dir, "Directory of banded PNG images")->required();
  extract->add_option("--pristine", pristine_dir, "Directory of pristine PNG images")->required();
  extract->add_option("--masks", masks_dir, "Directory of 1-channel PNG masks (nonzero = banded)")
      ->required();
  extract->add_option("--out", out_dir, "Output directory (manifest.jsonl + patches/)")->required();
  extract->add_option("--patch", ep.patch, "Patch side in pixels")->check(CLI::Range(1, 65536));
  extract->add_option("--stride", ep.stride, "Sliding-window stride in pixels")
      ->check(CLI::Range(1, 65536));
  extract->add_option("--tau", ep.tau, "Minimum banded-pixel fraction to keep a window")
      ->check(CLI::Range(0.0, 1.0));

  // split
  std::string manifest, split_out, ratios_text = "0.6,0.2,0.2";
  auto* split = app.add_subcommand("split", "Assign whole source images to train/val/test");
  split->add_option("--manifest", manifest, "Input manifest (JSON lines)")->required();
  split->add_option("--ratios", ratios_text, "train,val,test patch shares");
  split->add_option("--out", split_out, "Output manifest (default: overwrite --manifest)");

  // verify
  double max_mad = 16.0;
  auto* verify = app.add_subcommand("verify", "Check a manifest; exit 1 on violations");
  verify->add_option("--manifest", manifest, "Manifest to check")->required();
  verify->add_option("--max-mad", max_mad,
                     "Largest mean abs difference allowed between paired patches")
      ->check(CLI::PositiveNumber);

  // deband
  BackendFlags df;
  std::string in_img, out_img;
  auto* deband_cmd = app.add_subcommand("deband", "Deband one PNG image");
  add_backend_flags(deband_cmd, df);
  deband_cmd->add_option("--in", in_img, "Input PNG")->required();
  deband_cmd->add_option("--out", out_img, "Output PNG")->required();

  // evaluate
  std::string in_dir, ref_dir, report, scores_csv, context_csv, label;
  auto* evaluate = app.add_subcommand("evaluate", "Score a directory, mean +- SD table");
  evaluate->add_option("--in-dir", in_dir, "Directory of PNG images to score")->required();
  evaluate->add_option("--ref-dir", ref_dir, "Reference images (same names) for PSNR");
  evaluate->add_option("--report", report, "JSON report path (table goes to REPORT.txt)")
      ->required();
  evaluate->add_option("--scores", scores_csv, "Extra per-image scores: image_id,metric,score");
  evaluate->add_option("--context", context_csv, "Context rows: method,metric,mean,sd,n");
  evaluate->add_option("--label", label, "Method name for the evaluated row");

  // bench
  BackendFlags bf;
  int repeats = 3;
  std::string bench_dir, bench_report, bench_context, bench_label;
  auto* bench = app.add_subcommand("bench", "Time a backend and mode over a directory");
  add_backend_flags(bench, bf);
  bench->add_option("--in-dir", bench_dir, "Directory of PNG images")->required();
  bench->add_option("--repeats", repeats, "Timed runs per image")->check(CLI::Range(1, 100000));
  bench->add_option("--report", bench_report, "JSON report path (table goes to REPORT.txt)")
      ->required();
  bench->add_option("--context", bench_context, "Reference rows: method,seconds");
  bench->add_option("--label", bench_label, "Method name (default BACKEND-MODE)");

  // make-weights
  std::string kind = "zero", weights_out;
  auto* make_weights = app.add_subcommand("make-weights", "Write a synthetic DBW1 weight file");
  make_weights->add_option("--kind", kind, "zero or seeded random weights")
      ->check(CLI::IsMember({"zero", "random"}));
  make_weights->add_option("--out", weights_out, "Output weight file")->required();

  // check-fixture
  std::string fixture;
  auto* check = app.add_subcommand("check-fixture", "Compare the engine against a fixture");
  check->add_option("--fixture", fixture, "Fixture JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*extract) {
      size_t n = 0;
      const auto s = deband_dataset_extract(banded_dir.c_str(), pristine_dir.c_str(),
                                            masks_dir.c_str(), out_dir.c_str(), &ep, g.threads, &n);
      if (s != DEBAND_OK) return report_failure(s, "extract-patches");
      std::cout << "extracted " << n << " patch pairs into " << out_dir << "\n";
      return kExitOk;
    }

    if (*split) {
      const auto r = parse_ratios(ratios_text);
      const double ratios[3] = {r[0], r[1], r[2]};
      size_t counts[3] = {0, 0, 0};
      const std::string out = split_out.empty() ? manifest : split_out;
      const auto s = deband_dataset_split(manifest.c_str(), out.c_str(), ratios, g.seed, counts);
      if (s != DEBAND_OK) return report_failure(s, "split");
      std::cout << "train " << counts[0] << ", val " << counts[1] << ", test " << counts[2]
                << " patches -> " << out << "\n";
      return kExitOk;
    }

    if (*verify) {
      size_t n = 0;
      CString text;
      const auto s = deband_dataset_verify(manifest.c_str(), max_mad, &n, &text.p);
      if (s != DEBAND_OK) return report_failure(s, "verify");
      std::cout << text.p << "\n";
      return n == 0 ? kExitOk : kExitProcessing;
    }

    if (*deband_cmd) {
      validate_backend_flags(df);
      if (!has_png_ext(in_img) || !has_png_ext(out_img)) {
        throw UsageError("--in and --out must be PNG files");
      }
      BackendPtr backend;
      if (int rc = make_backend(df, g, backend); rc != kExitOk) return rc;
      deband_image* raw = nullptr;
      if (auto s = deband_image_load_png(in_img.c_str(), &raw); s != DEBAND_OK) {
        return report_failure(s, "reading " + in_img);
      }
      ImagePtr input(raw);
      deband_image* result = nullptr;
      if (auto s = deband_run(backend.get(), parse_mode(df.mode), g.threads, input.get(), &result);
          s != DEBAND_OK) {
        return report_failure(s, "deband");
      }
      ImagePtr output(result);
      if (auto s = deband_image_save_png(output.get(), out_img.c_str()); s != DEBAND_OK) {
        return report_failure(s, "writing " + out_img);
      }
      if (g.verbose) {
        std::cerr << deband_backend_name(backend.get()) << "/" << df.mode << ": "
                  << deband_image_width(output.get()) << "x" << deband_image_height(output.get())
                  << " -> " << out_img << "\n";
      }
      return kExitOk;
    }

    if (*evaluate) {
      deband_evaluate_options o{};
      o.in_dir = in_dir.c_str();
      o.ref_dir = ref_dir.empty() ? nullptr : ref_dir.c_str();
      o.scores_csv = scores_csv.empty() ? nullptr : scores_csv.c_str();
      o.context_csv = context_csv.empty() ? nullptr : context_csv.c_str();
      o.label = label.empty() ? nullptr : label.c_str();
      o.threads = g.threads;
      CString table;
      if (auto s = deband_evaluate(&o, report.c_str(), &table.p); s != DEBAND_OK) {
        return report_failure(s, "evaluate");
      }
      std::cout << table.p;
      return kExitOk;
    }

    if (*bench) {
      validate_backend_flags(bf);
      BackendPtr backend;
      if (int rc = make_backend(bf, g, backend); rc != kExitOk) return rc;
      deband_bench_options o{};
      o.in_dir = bench_dir.c_str();
      o.repeats = repeats;
      o.threads = g.threads;
      o.context_csv = bench_context.empty() ? nullptr : bench_context.c_str();
      o.label = bench_label.empty() ? nullptr : bench_label.c_str();
      CString table;
      if (auto s = deband_bench(backend.get(), parse_mode(bf.mode), &o, bench_report.c_str(),
                                &table.p);
          s != DEBAND_OK) {
        return report_failure(s, "bench");
      }
      std::cout << table.p;
      return kExitOk;
    }

    if (*make_weights) {
      if (auto s = deband_weights_write_synthetic(weights_out.c_str(), kind == "random", g.seed);
          s != DEBAND_OK) {
        return report_failure(s, "make-weights");
      }
      return kExitOk;
    }

    if (*check) {
      double worst = 0;
      int passed = 0;
      if (auto s = deband_fixture_check(fixture.c_str(), g.threads, &worst, &passed);
          s != DEBAND_OK) {
        return report_failure(s, "check-fixture");
      }
      std::printf("worst mean abs error %.3g: %s\n", worst, passed ? "PASS" : "FAIL");
      return passed ? kExitOk : kExitProcessing;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
