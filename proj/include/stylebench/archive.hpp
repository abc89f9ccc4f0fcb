#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "stylebench/bench.hpp"
#include "stylebench/error.hpp"

namespace stylebench {

inline constexpr int kArchiveSchemaVersion = 1;

/// Serialized record of one or more experiments.
struct RunArchive {
  int schema_version = kArchiveSchemaVersion;
  std::string created_at;  // UTC, ISO 8601
  std::vector<ExperimentResult> experiments;

  const ExperimentResult* find(Arm arm) const {
    for (const auto& e : experiments) {
      if (e.arm == arm) return &e;
    }
    return nullptr;
  }
};

inline std::string utc_timestamp_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace detail {

using nlohmann::json;

inline json opt_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline std::optional<double> get_opt_number(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

inline json psnr_to_json(const Psnr& p) { return p.is_infinite() ? json("inf") : json(p.db()); }

inline Psnr psnr_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() != "inf") throw Error(ErrorCode::parse_error, "psnr string must be \"inf\"");
    return Psnr::infinite();
  }
  return Psnr::decibels(j.get<double>());
}

inline json metrics_to_json(const MetricReport& m) {
  json j;
  j["ssim"] = m.ssim;
  j["ssim_variant"] = std::string(to_string(m.ssim_variant));
  j["psnr"] = psnr_to_json(m.psnr);
  j["mse"] = m.mse;
  if (m.loss) {
    j["loss"] = {{"content_loss", m.loss->content_loss},
                 {"style_loss", m.loss->style_loss},
                 {"alpha", m.loss->alpha},
                 {"beta", m.loss->beta},
                 {"total", m.loss->total}};
  } else {
    j["loss"] = nullptr;
  }
  return j;
}

inline MetricReport metrics_from_json(const json& j) {
  MetricReport m;
  m.ssim = j.at("ssim").get<double>();
  const std::string variant = j.at("ssim_variant").get<std::string>();
  if (variant == "global") m.ssim_variant = SsimVariant::global;
  else if (variant == "windowed") m.ssim_variant = SsimVariant::windowed;
  else throw Error(ErrorCode::parse_error, "unknown ssim_variant " + variant);
  m.psnr = psnr_from_json(j.at("psnr"));
  m.mse = j.at("mse").get<double>();
  if (const auto& l = j.at("loss"); !l.is_null()) {
    m.loss = LossBreakdown{l.at("content_loss").get<double>(), l.at("style_loss").get<double>(),
                           l.at("alpha").get<double>(), l.at("beta").get<double>(),
                           l.at("total").get<double>()};
  }
  return m;
}

inline json run_to_json(const RunResult& r) {
  json j;
  j["run_index"] = r.run_index;
  j["timing"] = {{"acquisition_time", r.timing.acquisition_time},
                 {"style_transfer_time", r.timing.style_transfer_time},
                 {"total_time", r.timing.total_time}};
  j["style_image_digest"] = r.style_image_digest;
  j["failed"] = r.failed;
  j["failure_reason"] = r.failure_reason;
  j["reference_resized"] = r.reference_resized;
  j["stylized_resized"] = r.stylized_resized;
  j["metrics"] = r.metrics ? metrics_to_json(*r.metrics) : json(nullptr);
  return j;
}

inline RunResult run_from_json(const json& j) {
  RunResult r;
  r.run_index = j.at("run_index").get<int>();
  const auto& t = j.at("timing");
  r.timing = {t.at("acquisition_time").get<double>(), t.at("style_transfer_time").get<double>(),
              t.at("total_time").get<double>()};
  r.style_image_digest = j.at("style_image_digest").get<std::string>();
  r.failed = j.at("failed").get<bool>();
  r.failure_reason = j.at("failure_reason").get<std::string>();
  r.reference_resized = j.at("reference_resized").get<bool>();
  r.stylized_resized = j.at("stylized_resized").get<bool>();
  if (const auto& m = j.at("metrics"); !m.is_null()) r.metrics = metrics_from_json(m);
  if (r.failed && r.metrics) throw Error(ErrorCode::parse_error, "failed run carries metrics");
  return r;
}

inline json aggregate_to_json(const AggregateRow& a) {
  return {{"mean_acquisition_time", a.mean_acquisition_time},
          {"mean_style_transfer_time", a.mean_style_transfer_time},
          {"mean_total_time", a.mean_total_time},
          {"mean_ssim", a.mean_ssim},
          {"mean_psnr", opt_number(a.mean_psnr)},
          {"n_included", a.n_included},
          {"n_excluded", a.n_excluded},
          {"n_failed", a.n_failed}};
}

inline AggregateRow aggregate_from_json(const json& j) {
  AggregateRow a;
  a.mean_acquisition_time = j.at("mean_acquisition_time").get<double>();
  a.mean_style_transfer_time = j.at("mean_style_transfer_time").get<double>();
  a.mean_total_time = j.at("mean_total_time").get<double>();
  a.mean_ssim = j.at("mean_ssim").get<double>();
  a.mean_psnr = get_opt_number(j, "mean_psnr");
  a.n_included = j.at("n_included").get<int>();
  a.n_excluded = j.at("n_excluded").get<int>();
  a.n_failed = j.at("n_failed").get<int>();
  return a;
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentResult& e) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : e.runs) runs.push_back(detail::run_to_json(r));
  return {{"arm", std::string(to_string(e.arm))},
          {"config", e.config_snapshot},
          {"runs", std::move(runs)},
          {"aggregate", detail::aggregate_to_json(e.aggregate)}};
}

inline ExperimentResult experiment_from_json(const nlohmann::json& j) {
  ExperimentResult e;
  const auto arm = parse_arm(j.at("arm").get<std::string>());
  if (!arm) throw Error(ErrorCode::parse_error, "unknown arm " + j.at("arm").dump());
  e.arm = *arm;
  e.config_snapshot = j.at("config").get<ConfigSnapshot>();
  for (const auto& r : j.at("runs")) e.runs.push_back(detail::run_from_json(r));
  e.aggregate = detail::aggregate_from_json(j.at("aggregate"));
  return e;
}

inline nlohmann::json to_json(const RunArchive& a) {
  nlohmann::json experiments = nlohmann::json::array();
  for (const auto& e : a.experiments) experiments.push_back(to_json(e));
  return {{"schema_version", a.schema_version},
          {"created_at", a.created_at},
          {"experiments", std::move(experiments)}};
}

inline std::string serialize_archive(const RunArchive& a) { return to_json(a).dump(2) + "\n"; }

inline RunArchive parse_archive(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    RunArchive a;
    a.schema_version = j.at("schema_version").get<int>();
    if (a.schema_version != kArchiveSchemaVersion) {
      throw Error(ErrorCode::parse_error,
                  "unsupported archive schema_version " + std::to_string(a.schema_version));
    }
    a.created_at = j.at("created_at").get<std::string>();
    for (const auto& e : j.at("experiments")) a.experiments.push_back(experiment_from_json(e));
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("malformed archive: ") + e.what());
  }
}

inline void write_archive(const RunArchive& a, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_failure, path.string() + ": cannot open for writing");
  out << serialize_archive(a);
  if (!out) throw Error(ErrorCode::io_failure, path.string() + ": write failed");
}

inline RunArchive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::file_not_found, path.string() + ": cannot open archive");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_archive(ss.str());
}

}  // namespace stylebench
