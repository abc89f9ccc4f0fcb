#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "stylebench/error.hpp"
#include "stylebench/genclient.hpp"
#include "stylebench/metrics.hpp"
#include "stylebench/stylizer.hpp"
#include "stylebench/timing.hpp"

namespace stylebench {

enum class Arm { with_generation, without_generation };

inline constexpr std::string_view to_string(Arm a) noexcept {
  return a == Arm::with_generation ? "with_generation" : "without_generation";
}

inline std::optional<Arm> parse_arm(std::string_view s) {
  if (s == "with_generation") return Arm::with_generation;
  if (s == "without_generation") return Arm::without_generation;
  return std::nullopt;
}

enum class MetricReference { content_image, style_image };

inline constexpr std::string_view to_string(MetricReference r) noexcept {
  return r == MetricReference::content_image ? "content" : "style";
}

struct TimingRecord {
  double acquisition_time = 0.0;
  double style_transfer_time = 0.0;
  double total_time = 0.0;  // one end-to-end stopwatch, not a sum

  bool valid() const noexcept {
    return acquisition_time >= 0.0 && style_transfer_time >= 0.0 && total_time >= 0.0 &&
           total_time >= std::max(acquisition_time, style_transfer_time);
  }
};

struct RunResult {
  int run_index = 0;
  TimingRecord timing;
  std::optional<MetricReport> metrics;  // absent iff failed
  std::string style_image_digest;       // sha256 hex over dims + samples
  bool failed = false;
  std::string failure_reason;
  bool reference_resized = false;
  bool stylized_resized = false;
};

struct AggregateRow {
  double mean_acquisition_time = 0.0;
  double mean_style_transfer_time = 0.0;
  double mean_total_time = 0.0;
  double mean_ssim = 0.0;
  std::optional<double> mean_psnr;  // absent when every included run hit the sentinel
  int n_included = 0;               // runs that did not fail
  int n_excluded = 0;               // PSNR sentinel values left out of mean_psnr
  int n_failed = 0;

  bool empty() const noexcept { return n_included == 0; }
};

using ConfigSnapshot = std::map<std::string, std::string>;

struct ExperimentResult {
  Arm arm = Arm::with_generation;
  ConfigSnapshot config_snapshot;
  std::vector<RunResult> runs;
  AggregateRow aggregate;
};

/// sha256 hex over width, height, channels and the sample buffer.
inline std::string image_digest(const RasterImage& img) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw Error(ErrorCode::io_failure, "cannot allocate digest context");
  const std::uint32_t header[3] = {static_cast<std::uint32_t>(img.width()),
                                   static_cast<std::uint32_t>(img.height()),
                                   static_cast<std::uint32_t>(img.channels())};
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  EVP_DigestUpdate(ctx, header, sizeof(header));
  EVP_DigestUpdate(ctx, img.data().data(), img.data().size());
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  hex.reserve(len * 2);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

struct TrialSettings {
  StylizerBackend backend = StylizerBackend::statistical;
  BackendOptions backend_options;
  ClientConfig client;
  MetricReference reference = MetricReference::content_image;
  MeasureOptions measure;
  double alpha = 1.0;
  double beta = 1.0;
  /// One retry after the advertised delay when the generator rate-limits.
  bool retry_on_rate_limit = true;
  double default_retry_delay = 1.0;
};

namespace detail {

inline GenResult acquire_with_retry(const StyleSource& source, const TrialSettings& settings) {
  try {
    return acquire_style(source, settings.client);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::rate_limited || !settings.retry_on_rate_limit) throw;
    const double delay = std::min(e.retry_after().value_or(settings.default_retry_delay),
                                  settings.client.timeout);
    std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    return acquire_style(source, settings.client);
  }
}

}  // namespace detail

/// acquire -> stylize -> measure under one stopwatch. Never throws for
/// pipeline failures; they come back as a failed RunResult.
inline RunResult run_trial(const RasterImage& content, const StyleSource& source,
                           const TrialSettings& settings = {}) {
  RunResult run;
  const Stopwatch total;
  try {
    GenResult acquired = detail::acquire_with_retry(source, settings);
    run.timing.acquisition_time = acquired.acquisition_time;
    run.style_image_digest = image_digest(acquired.style_image);

    StylizeRequest request{content, acquired.style_image, settings.backend, settings.backend_options};
    StylizeResult styled = stylize(request);
    run.timing.style_transfer_time = styled.style_transfer_time;
    run.stylized_resized = styled.resized_to_content;

    const RasterImage& reference =
        settings.reference == MetricReference::content_image ? content : acquired.style_image;
    Measurement m = measure(reference, styled.stylized, settings.measure);
    run.reference_resized = m.reference_resized;
    // The loss diagnostic compares channel statistics, so it needs matching layouts.
    if (styled.stylized.channels() == acquired.style_image.channels()) {
      m.report.loss =
          style_transfer_loss(content, acquired.style_image, styled.stylized, settings.alpha, settings.beta);
    }
    run.metrics = m.report;
  } catch (const std::exception& e) {
    run.failed = true;
    run.failure_reason = e.what();
    run.metrics.reset();
  }
  run.timing.total_time = total.elapsed_seconds();
  return run;
}

/// Arithmetic means over non-failed runs. PSNR sentinels are left out of
/// the PSNR mean and counted in n_excluded.
inline AggregateRow aggregate(const std::vector<RunResult>& runs) {
  if (runs.empty()) throw Error(ErrorCode::empty_input, "cannot aggregate zero runs");
  AggregateRow row;
  double acq = 0.0, st = 0.0, tot = 0.0, ssim_sum = 0.0, psnr_sum = 0.0;
  int psnr_n = 0;
  for (const auto& r : runs) {
    if (r.failed || !r.metrics) {
      ++row.n_failed;
      continue;
    }
    ++row.n_included;
    acq += r.timing.acquisition_time;
    st += r.timing.style_transfer_time;
    tot += r.timing.total_time;
    ssim_sum += r.metrics->ssim;
    if (r.metrics->psnr.is_infinite()) {
      ++row.n_excluded;
    } else {
      psnr_sum += r.metrics->psnr.db();
      ++psnr_n;
    }
  }
  if (row.n_included > 0) {
    const double n = row.n_included;
    row.mean_acquisition_time = acq / n;
    row.mean_style_transfer_time = st / n;
    row.mean_total_time = tot / n;
    row.mean_ssim = ssim_sum / n;
  }
  if (psnr_n > 0) row.mean_psnr = psnr_sum / psnr_n;
  return row;
}

struct ArmConfig {
  Arm arm = Arm::with_generation;
  /// Template source. Mock and generated sources get seed + trial index so
  /// each trial draws a distinct style image.
  StyleSource source = StyleSource::mock(GenRequest{"abstract modern art portrait"});
  TrialSettings settings;
  bool warmup = false;
  ConfigSnapshot config_snapshot;
};

inline StyleSource source_for_trial(const StyleSource& base, int index) {
  StyleSource s = base;
  std::visit(
      [&](auto& v) {
        if constexpr (!std::is_same_v<std::decay_t<decltype(v)>, FileSource>) {
          v.request.seed += static_cast<std::uint64_t>(index);
        }
      },
      s.value);
  return s;
}

using TrialFn = std::function<RunResult(int index)>;

/// Runs `n_trials` trials strictly in sequence and aggregates them. The
/// TrialFn overload lets callers substitute the whole trial.
inline ExperimentResult run_experiment(const ArmConfig& config, int n_trials, const TrialFn& trial) {
  if (n_trials < 1) throw Error(ErrorCode::invalid_argument, "n_trials must be >= 1");
  ExperimentResult result;
  result.arm = config.arm;
  result.config_snapshot = config.config_snapshot;
  if (config.warmup) (void)trial(-1);
  for (int i = 0; i < n_trials; ++i) {
    RunResult r = trial(i);
    r.run_index = i;
    result.runs.push_back(std::move(r));
  }
  result.aggregate = aggregate(result.runs);
  return result;
}

inline ExperimentResult run_experiment(const ArmConfig& config, const RasterImage& content, int n_trials) {
  return run_experiment(config, n_trials, [&](int index) {
    return run_trial(content, source_for_trial(config.source, std::max(index, 0)), config.settings);
  });
}

// ---------------------------------------------------------------------------
// Arm comparison

enum class Winner { with_generation, without_generation, tie, unavailable };

inline constexpr std::string_view to_string(Winner w) noexcept {
  switch (w) {
    case Winner::with_generation: return "with_generation";
    case Winner::without_generation: return "without_generation";
    case Winner::tie: return "tie";
    case Winner::unavailable: return "unavailable";
  }
  return "unknown";
}

struct ColumnComparison {
  std::string name;
  std::optional<double> with_value;
  std::optional<double> without_value;
  std::optional<double> delta;    // with - without
  std::optional<double> percent;  // (with - without) / without * 100
  std::string direction;          // "higher", "lower", "equal" or "n/a" (with vs without)
  Winner highest = Winner::unavailable;  // bold marker: highest value in the column
};

struct ComparisonReport {
  std::vector<ColumnComparison> columns;

  const ColumnComparison* find(std::string_view name) const {
    for (const auto& c : columns) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
};

inline ColumnComparison compare_column(std::string name, std::optional<double> a, std::optional<double> b) {
  ColumnComparison col;
  col.name = std::move(name);
  col.with_value = a;
  col.without_value = b;
  if (!a || !b) {
    col.direction = "n/a";
    return col;
  }
  col.delta = *a - *b;
  if (*b != 0.0) col.percent = (*a - *b) / *b * 100.0;
  if (*a > *b) {
    col.direction = "higher";
    col.highest = Winner::with_generation;
  } else if (*a < *b) {
    col.direction = "lower";
    col.highest = Winner::without_generation;
  } else {
    col.direction = "equal";
    col.highest = Winner::tie;
  }
  return col;
}

inline ComparisonReport compare(const AggregateRow& with_gen, const AggregateRow& without_gen) {
  if (with_gen.empty() || without_gen.empty()) {
    throw Error(ErrorCode::empty_aggregate, "both arms need at least one successful run");
  }
  ComparisonReport report;
  report.columns.push_back(
      compare_column("acquisition_time", with_gen.mean_acquisition_time, without_gen.mean_acquisition_time));
  report.columns.push_back(compare_column("style_transfer_time", with_gen.mean_style_transfer_time,
                                          without_gen.mean_style_transfer_time));
  report.columns.push_back(compare_column("total_time", with_gen.mean_total_time, without_gen.mean_total_time));
  report.columns.push_back(compare_column("ssim", with_gen.mean_ssim, without_gen.mean_ssim));
  report.columns.push_back(compare_column("psnr", with_gen.mean_psnr, without_gen.mean_psnr));
  return report;
}

inline ComparisonReport compare(const ExperimentResult& with_gen, const ExperimentResult& without_gen) {
  return compare(with_gen.aggregate, without_gen.aggregate);
}

}  // namespace stylebench
