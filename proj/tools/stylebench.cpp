// stylebench: style-image acquisition, stylization, quality metrics and the
// two-arm timing benchmark, from the command line.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "stylebench/stylebench.hpp"

namespace sb = stylebench;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GlobalOptions {
  std::optional<std::string> config_path;
  bool json = false;
  bool verbose = false;
};

/// Options registered on a subcommand, keyed by their long name. Only
/// options the user actually passed end up in the flags layer.
class FlagSet {
 public:
  explicit FlagSet(CLI::App* app) : app_(app) {}

  FlagSet& value(const std::string& name, const std::string& help) {
    app_->add_option("--" + name, values_[name], help);
    return *this;
  }

  FlagSet& flag(const std::string& name, const std::string& help) {
    app_->add_flag("--" + name, flags_[name], help);
    return *this;
  }

  sb::KeyValues given() const {
    sb::KeyValues out;
    for (const auto& [name, v] : values_) {
      if (v) out[name] = *v;
    }
    for (const auto& [name, v] : flags_) {
      if (app_->count("--" + name) > 0) out[name] = v ? "true" : "false";
    }
    return out;
  }

 private:
  CLI::App* app_;
  std::map<std::string, std::optional<std::string>> values_;
  std::map<std::string, bool> flags_;
};

sb::SettingsResolver make_resolver(const GlobalOptions& global, const FlagSet& flags) {
  sb::KeyValues file;
  if (global.config_path) file = sb::load_config_file(*global.config_path);
  return sb::SettingsResolver(flags.given(), std::move(file));
}

void log_verbose(const GlobalOptions& g, const std::string& msg) {
  if (g.verbose) std::cerr << "[stylebench] " << msg << "\n";
}

std::pair<int, int> parse_size(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos) throw UsageError("size must look like WxH, got '" + text + "'");
  try {
    std::size_t used_w = 0;
    std::size_t used_h = 0;
    const int w = std::stoi(text.substr(0, x), &used_w);
    const int h = std::stoi(text.substr(x + 1), &used_h);
    if (used_w != x || used_h != text.size() - x - 1) throw std::invalid_argument("trailing");
    return {w, h};
  } catch (const std::exception&) {
    throw UsageError("size must look like WxH, got '" + text + "'");
  }
}

sb::StylizerBackend resolve_backend(const std::string& name) {
  const auto backend = sb::parse_backend(name);
  if (!backend) throw UsageError("unknown backend '" + name + "' (valid backends: statistical, external)");
  return *backend;
}

sb::BackendOptions resolve_backend_options(sb::SettingsResolver& r) {
  sb::BackendOptions opts;
  if (auto v = r.get_optional("backend-command")) opts["command"] = *v;
  if (auto v = r.get_optional("backend-endpoint")) opts["endpoint"] = *v;
  if (auto v = r.get_optional("backend-timeout")) opts["timeout"] = *v;
  return opts;
}

sb::ClientConfig resolve_client(sb::SettingsResolver& r) {
  sb::ClientConfig c;
  c.base_url = r.get("base-url", c.base_url);
  c.credential_env = r.get("api-key-env", c.credential_env);
  c.timeout = r.get_double("timeout", c.timeout);
  if (!(c.timeout > 0.0)) throw UsageError("--timeout must be positive");
  return c;
}

sb::GenRequest resolve_gen_request(sb::SettingsResolver& r, const std::string& prompt) {
  sb::GenRequest req;
  req.prompt = prompt;
  const auto [w, h] = parse_size(r.get("size", req.size_string()));
  req.width = w;
  req.height = h;
  req.model = r.get("model", req.model);
  const long seed = r.get_int("seed", 0);
  if (seed < 0) throw UsageError("--seed must be non-negative");
  req.seed = static_cast<std::uint64_t>(seed);
  if (req.width < 16 || req.height < 16) throw UsageError("--size must be at least 16x16");
  return req;
}

sb::SsimVariant resolve_ssim_variant(sb::SettingsResolver& r) {
  const std::string v = r.get("ssim", "global");
  if (v == "global") return sb::SsimVariant::global;
  if (v == "windowed") return sb::SsimVariant::windowed;
  throw UsageError("--ssim must be 'global' or 'windowed', got '" + v + "'");
}

std::string psnr_text(const sb::Psnr& p) {
  if (p.is_infinite()) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f dB", p.db());
  return buf;
}

// ---------------------------------------------------------------------------

int cmd_generate(const GlobalOptions& g, const FlagSet& flags) {
  auto r = make_resolver(g, flags);
  const auto prompt = r.get_optional("prompt");
  if (!prompt || prompt->empty()) throw UsageError("generate requires --prompt");
  const auto out = r.get_optional("out");
  if (!out) throw UsageError("generate requires --out");
  const bool mock = r.get_flag("mock", false);
  const sb::GenRequest req = resolve_gen_request(r, *prompt);
  const sb::ClientConfig client = resolve_client(r);

  const auto source = mock ? sb::StyleSource::mock(req) : sb::StyleSource::generated(req);
  log_verbose(g, std::string("acquiring style image via ") + std::string(sb::to_string(source.kind())));
  const sb::GenResult res = sb::acquire_style(source, client);
  sb::save_image(res.style_image, *out, sb::format_for_path(*out));

  if (g.json) {
    std::cout << json{{"out", *out},
                      {"source", std::string(sb::to_string(res.source_kind))},
                      {"width", res.style_image.width()},
                      {"height", res.style_image.height()},
                      {"acquisition_time", res.acquisition_time}}
                     .dump(2)
              << "\n";
  } else {
    std::cout << "wrote " << *out << " (" << res.style_image.width() << "x" << res.style_image.height()
              << ")\nacquisition_time: " << res.acquisition_time << " s\n";
  }
  return kExitOk;
}

int cmd_stylize(const GlobalOptions& g, const FlagSet& flags) {
  auto r = make_resolver(g, flags);
  const auto content_path = r.get_optional("content");
  const auto style_path = r.get_optional("style");
  const auto out = r.get_optional("out");
  if (!content_path || !style_path || !out) throw UsageError("stylize requires --content, --style and --out");
  const auto backend = resolve_backend(r.get("backend", "statistical"));

  sb::StylizeRequest req{sb::load_image(*content_path), sb::load_image(*style_path), backend,
                         resolve_backend_options(r)};
  const sb::StylizeResult res = sb::stylize(req);
  sb::save_image(res.stylized, *out, sb::format_for_path(*out));
  if (res.resized_to_content) std::cerr << "warning: backend output resized to content dimensions\n";

  if (g.json) {
    std::cout << json{{"out", *out},
                      {"backend", std::string(sb::to_string(res.backend_used))},
                      {"style_transfer_time", res.style_transfer_time},
                      {"resized_to_content", res.resized_to_content}}
                     .dump(2)
              << "\n";
  } else {
    std::cout << "wrote " << *out << "\nstyle_transfer_time: " << res.style_transfer_time << " s\n";
  }
  return kExitOk;
}

int cmd_evaluate(const GlobalOptions& g, const FlagSet& flags) {
  auto r = make_resolver(g, flags);
  const auto ref_path = r.get_optional("reference");
  const auto cand_path = r.get_optional("candidate");
  if (!ref_path || !cand_path) throw UsageError("evaluate requires --reference and --candidate");
  sb::MeasureOptions opts;
  opts.variant = resolve_ssim_variant(r);
  opts.params.window_size = static_cast<int>(r.get_int("window", 11));
  opts.max_i = r.get_double("max-i", 255.0);
  try {
    opts.params.validate();
  } catch (const sb::Error& e) {
    throw UsageError(e.what());
  }

  const sb::RasterImage reference = sb::load_image(*ref_path);
  const sb::RasterImage candidate = sb::load_image(*cand_path);
  const sb::Measurement m = sb::measure(reference, candidate, opts);
  if (m.reference_resized) {
    std::cerr << "warning: reference " << reference.width() << "x" << reference.height()
              << " resized to candidate size " << candidate.width() << "x" << candidate.height() << "\n";
  }

  if (g.json) {
    json j = sb::detail::metrics_to_json(m.report);
    j.erase("loss");
    j["reference_resized"] = m.reference_resized;
    std::cout << j.dump(2) << "\n";
  } else {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "ssim (%s): %.6f\n", std::string(sb::to_string(m.report.ssim_variant)).c_str(),
                  m.report.ssim);
    std::cout << buf << "psnr: " << psnr_text(m.report.psnr) << "\n";
    std::snprintf(buf, sizeof(buf), "mse: %.6f\n", m.report.mse);
    std::cout << buf;
  }
  return kExitOk;
}

int cmd_bench(const GlobalOptions& g, const FlagSet& flags) {
  auto r = make_resolver(g, flags);
  const long trials = r.get_int("trials", 5);
  if (trials < 1) throw UsageError("--trials must be >= 1");
  const bool mock = r.get_flag("mock", false);
  const std::string arms = r.get("arm", "both");
  if (arms != "both" && arms != "with" && arms != "without") {
    throw UsageError("--arm must be one of both, with, without");
  }
  const bool run_with = arms != "without";
  const bool run_without = arms != "with";
  const std::string prompt = r.get("prompt", "Make the image look like a simple modern art woman's face");
  const std::string out = r.get("out", "run_archive.json");
  const bool warmup = r.get_flag("warmup", false);

  sb::TrialSettings settings;
  settings.backend = resolve_backend(r.get("backend", "statistical"));
  settings.backend_options = resolve_backend_options(r);
  settings.client = resolve_client(r);
  settings.measure.variant = resolve_ssim_variant(r);
  settings.alpha = r.get_double("alpha", 1.0);
  settings.beta = r.get_double("beta", 1.0);
  if (settings.alpha < 0.0 || settings.beta < 0.0) throw UsageError("--alpha and --beta must be >= 0");
  const std::string reference = r.get("metric-reference", "content");
  if (reference == "content") settings.reference = sb::MetricReference::content_image;
  else if (reference == "style") settings.reference = sb::MetricReference::style_image;
  else throw UsageError("--metric-reference must be 'content' or 'style'");
  const sb::GenRequest gen = resolve_gen_request(r, prompt);

  // Inputs. With --mock, missing content / style files are synthesized so
  // the whole benchmark runs offline.
  std::optional<sb::detail::ScratchDir> scratch;
  sb::RasterImage content;
  if (auto path = r.get_optional("content")) {
    content = sb::load_image(*path);
  } else if (mock) {
    content = sb::mock_generate("stylebench synthetic content", 0, 256, 256);
    r.get("content", "<mock:256x256>");
  } else {
    throw UsageError("bench requires --content (or --mock)");
  }

  std::optional<fs::path> style_file;
  if (run_without) {
    if (auto path = r.get_optional("style-file")) {
      style_file = *path;
    } else if (mock) {
      scratch.emplace();
      style_file = scratch->path() / "style.png";
      sb::save_image(sb::mock_generate(prompt, 0xF17E, gen.width, gen.height), *style_file);
      r.get("style-file", "<mock:" + gen.size_string() + ">");
    } else {
      throw UsageError("the without-generation arm needs --style-file (or use --arm with)");
    }
  }

  sb::KeyValues snapshot = r.snapshot();
  sb::RunArchive archive;
  archive.created_at = sb::utc_timestamp_now();

  if (run_with) {
    sb::ArmConfig cfg;
    cfg.arm = sb::Arm::with_generation;
    cfg.source = mock ? sb::StyleSource::mock(gen) : sb::StyleSource::generated(gen);
    cfg.settings = settings;
    cfg.warmup = warmup;
    cfg.config_snapshot = snapshot;
    cfg.config_snapshot["source"] = std::string(sb::to_string(cfg.source.kind()));
    log_verbose(g, "running with_generation arm, " + std::to_string(trials) + " trials");
    archive.experiments.push_back(sb::run_experiment(cfg, content, static_cast<int>(trials)));
  }
  if (run_without) {
    sb::ArmConfig cfg;
    cfg.arm = sb::Arm::without_generation;
    cfg.source = sb::StyleSource::file(*style_file);
    cfg.settings = settings;
    cfg.warmup = warmup;
    cfg.config_snapshot = snapshot;
    cfg.config_snapshot["source"] = "file";
    log_verbose(g, "running without_generation arm, " + std::to_string(trials) + " trials");
    archive.experiments.push_back(sb::run_experiment(cfg, content, static_cast<int>(trials)));
  }

  sb::write_archive(archive, out);
  int failed = 0;
  for (const auto& e : archive.experiments) {
    failed += e.aggregate.n_failed;
    for (const auto& run : e.runs) {
      if (run.failed) {
        std::cerr << "run " << run.run_index << " (" << sb::to_string(e.arm) << ") failed: " << run.failure_reason
                  << "\n";
      }
    }
    if (e.aggregate.empty()) std::cerr << "warning: every " << sb::to_string(e.arm) << " run failed\n";
    if (e.aggregate.n_excluded > 0) {
      std::cerr << "note: " << e.aggregate.n_excluded << " infinite PSNR value(s) excluded from the "
                << sb::to_string(e.arm) << " mean\n";
    }
  }

  const auto* with = archive.find(sb::Arm::with_generation);
  const auto* without = archive.find(sb::Arm::without_generation);
  if (g.json) {
    json doc = {{"archive", out}, {"failed_runs", failed}};
    if (with && without && !with->aggregate.empty() && !without->aggregate.empty()) {
      doc["comparison"] = sb::comparison_to_json(sb::compare(*with, *without));
    } else {
      doc["comparison"] = nullptr;
    }
    std::cout << doc.dump(2) << "\n";
  } else {
    std::cout << sb::render_markdown({sb::aggregate_table(archive)});
    std::cout << "\narchive: " << out << "\n";
  }
  return kExitOk;
}

int cmd_report(const GlobalOptions& g, const FlagSet& flags, const std::optional<std::string>& positional) {
  auto r = make_resolver(g, flags);
  std::optional<std::string> path = r.get_optional("archive");
  if (!path) path = positional;
  if (!path) throw UsageError("report requires an archive path");
  const std::string fmt_name = r.get("format", g.json ? "json" : "md");
  const auto format = sb::parse_report_format(fmt_name);
  if (!format) throw UsageError("--format must be md, csv or json");

  const sb::RunArchive archive = sb::read_archive(*path);
  if (archive.experiments.empty()) {
    std::cerr << "error: no experiments\n";
    return kExitRuntime;
  }
  const auto tables = sb::build_report(archive);
  if (*format == sb::ReportFormat::markdown) {
    std::cout << "# Style transfer benchmark report\n\nGenerated from archive created " << archive.created_at
              << ". SSIM is computed on Rec.601 luma against the content image.\n\n";
  }
  std::cout << sb::render_report(tables, *format);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text-driven style transfer pipeline and benchmark"};
  app.require_subcommand(1);
  GlobalOptions global;
  app.add_option("--config", global.config_path, "Flat key = value config file");
  app.add_flag("--json", global.json, "Machine-readable output on stdout");
  app.add_flag("--verbose", global.verbose, "Progress messages on stderr");
  app.fallthrough();

  auto* generate = app.add_subcommand("generate", "Acquire a style image from a text prompt");
  FlagSet generate_flags(generate);
  generate_flags.value("prompt", "Text prompt")
      .value("out", "Output image path")
      .flag("mock", "Use the offline procedural generator")
      .value("seed", "Mock generator seed")
      .value("size", "Requested size WxH (default 1024x1024)")
      .value("model", "Model identifier")
      .value("base-url", "Images API base URL")
      .value("api-key-env", "Environment variable holding the API key")
      .value("timeout", "Request timeout in seconds");

  auto* stylize = app.add_subcommand("stylize", "Apply a style image to a content image");
  FlagSet stylize_flags(stylize);
  stylize_flags.value("content", "Content image")
      .value("style", "Style image")
      .value("backend", "statistical | external")
      .value("out", "Output image path")
      .value("backend-command", "External backend command (args: content style output)")
      .value("backend-endpoint", "External backend HTTP endpoint")
      .value("backend-timeout", "External backend timeout in seconds");

  auto* evaluate = app.add_subcommand("evaluate", "SSIM / PSNR / MSE between two images");
  FlagSet evaluate_flags(evaluate);
  evaluate_flags.value("reference", "Reference image")
      .value("candidate", "Candidate image")
      .value("ssim", "global | windowed")
      .value("window", "Windowed SSIM window size")
      .value("max-i", "Peak sample value for PSNR");

  auto* bench = app.add_subcommand("bench", "Run the with/without-generation benchmark");
  FlagSet bench_flags(bench);
  bench_flags.value("content", "Content image")
      .value("prompt", "Style prompt for the generation arm")
      .value("style-file", "Pre-existing style image for the without-generation arm")
      .value("trials", "Trials per arm (default 5)")
      .flag("mock", "Offline mock generator instead of the remote API")
      .value("seed", "Base seed for the mock generator")
      .value("backend", "statistical | external")
      .value("out", "Run archive output path")
      .value("arm", "both | with | without")
      .flag("warmup", "Run one unrecorded trial first")
      .value("ssim", "global | windowed")
      .value("size", "Generated style size WxH")
      .value("model", "Model identifier")
      .value("base-url", "Images API base URL")
      .value("api-key-env", "Environment variable holding the API key")
      .value("timeout", "Request timeout in seconds")
      .value("backend-command", "External backend command")
      .value("backend-endpoint", "External backend HTTP endpoint")
      .value("backend-timeout", "External backend timeout in seconds")
      .value("alpha", "Content-loss weight")
      .value("beta", "Style-loss weight")
      .value("metric-reference", "content | style");

  auto* report = app.add_subcommand("report", "Render a run archive as tables");
  FlagSet report_flags(report);
  std::optional<std::string> report_positional;
  report->add_option("archive_path", report_positional, "Run archive");
  report_flags.value("archive", "Run archive").value("format", "md | csv | json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*generate) return cmd_generate(global, generate_flags);
    if (*stylize) return cmd_stylize(global, stylize_flags);
    if (*evaluate) return cmd_evaluate(global, evaluate_flags);
    if (*bench) return cmd_bench(global, bench_flags);
    if (*report) return cmd_report(global, report_flags, report_positional);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
