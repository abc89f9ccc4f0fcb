#pragma once

#include <charconv>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "stylebench/archive.hpp"
#include "stylebench/bench.hpp"
#include "stylebench/error.hpp"

namespace stylebench {

enum class ReportFormat { markdown, csv, json };

inline std::optional<ReportFormat> parse_report_format(std::string_view s) {
  if (s == "md" || s == "markdown") return ReportFormat::markdown;
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  return std::nullopt;
}

/// A table cell is either a number, a piece of text, or missing.
struct ReportCell {
  std::optional<double> number;
  std::string text;
  bool bold = false;

  static ReportCell of(double v) { return {v, {}, false}; }
  static ReportCell label(std::string s) { return {std::nullopt, std::move(s), false}; }
  static ReportCell missing() { return {}; }

  bool is_missing() const noexcept { return !number && text.empty(); }
};

struct ReportTable {
  std::string title;
  std::vector<std::string> headers;
  std::vector<std::vector<ReportCell>> rows;

  void add_row(std::vector<ReportCell> row) {
    if (row.size() != headers.size()) {
      throw Error(ErrorCode::invalid_argument, "row has " + std::to_string(row.size()) +
                                                   " cells, table '" + title + "' has " +
                                                   std::to_string(headers.size()) + " columns");
    }
    rows.push_back(std::move(row));
  }
};

/// Shortest decimal string that parses back to the same double.
inline std::string format_full(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

namespace detail {

/// Bold the larger of two numeric cells; ties and missing values get none.
inline void bold_highest(ReportCell& a, ReportCell& b) {
  if (!a.number || !b.number || *a.number == *b.number) return;
  (*a.number > *b.number ? a : b).bold = true;
}

inline ReportCell psnr_cell(const Psnr& p) {
  return p.is_infinite() ? ReportCell::label("inf") : ReportCell::of(p.db());
}

inline std::string ssim_variant_label(const RunArchive& archive) {
  for (const auto& e : archive.experiments) {
    for (const auto& r : e.runs) {
      if (r.metrics) return std::string(to_string(r.metrics->ssim_variant));
    }
  }
  return "global";
}

inline const RunResult* run_at(const ExperimentResult* e, std::size_t i) {
  if (!e || i >= e->runs.size()) return nullptr;
  return &e->runs[i];
}

inline std::size_t longest_run_count(const ExperimentResult* a, const ExperimentResult* b) {
  return std::max(a ? a->runs.size() : 0, b ? b->runs.size() : 0);
}

}  // namespace detail

/// Per-run processing times, with- and without-generation side by side.
inline ReportTable timing_table(const RunArchive& archive) {
  const auto* with = archive.find(Arm::with_generation);
  const auto* without = archive.find(Arm::without_generation);
  ReportTable t;
  t.title = "Processing time per run (s)";
  t.headers = {"Run",          "Generation (with)",        "Upload (without)",
               "Style transfer (with)", "Style transfer (without)", "Total (with)",
               "Total (without)"};
  const std::size_t n = detail::longest_run_count(with, without);
  for (std::size_t i = 0; i < n; ++i) {
    const RunResult* a = detail::run_at(with, i);
    const RunResult* b = detail::run_at(without, i);
    auto time_cell = [](const RunResult* r, double TimingRecord::*field) {
      return r ? ReportCell::of(r->timing.*field) : ReportCell::missing();
    };
    std::vector<ReportCell> row = {
        ReportCell::label("Run " + std::to_string(i + 1)),
        time_cell(a, &TimingRecord::acquisition_time),
        time_cell(b, &TimingRecord::acquisition_time),
        time_cell(a, &TimingRecord::style_transfer_time),
        time_cell(b, &TimingRecord::style_transfer_time),
        time_cell(a, &TimingRecord::total_time),
        time_cell(b, &TimingRecord::total_time),
    };
    for (std::size_t c = 1; c < row.size(); c += 2) detail::bold_highest(row[c], row[c + 1]);
    t.add_row(std::move(row));
  }
  return t;
}

/// Per-run SSIM and PSNR against the metric reference.
inline ReportTable metrics_table(const RunArchive& archive) {
  const auto* with = archive.find(Arm::with_generation);
  const auto* without = archive.find(Arm::without_generation);
  const std::string variant = detail::ssim_variant_label(archive);
  ReportTable t;
  t.title = "Quality metrics per run";
  t.headers = {"Run", "SSIM " + variant + " (with)", "SSIM " + variant + " (without)", "PSNR dB (with)",
               "PSNR dB (without)"};
  const std::size_t n = detail::longest_run_count(with, without);
  auto ssim_cell = [](const RunResult* r) {
    if (!r) return ReportCell::missing();
    if (!r->metrics) return ReportCell::label("failed");
    return ReportCell::of(r->metrics->ssim);
  };
  auto psnr_cell = [](const RunResult* r) {
    if (!r) return ReportCell::missing();
    if (!r->metrics) return ReportCell::label("failed");
    return detail::psnr_cell(r->metrics->psnr);
  };
  for (std::size_t i = 0; i < n; ++i) {
    const RunResult* a = detail::run_at(with, i);
    const RunResult* b = detail::run_at(without, i);
    std::vector<ReportCell> row = {ReportCell::label("Run " + std::to_string(i + 1)), ssim_cell(a),
                                   ssim_cell(b), psnr_cell(a), psnr_cell(b)};
    detail::bold_highest(row[1], row[2]);
    detail::bold_highest(row[3], row[4]);
    t.add_row(std::move(row));
  }
  return t;
}

/// Arm averages; the highest value per column is bold, followed by the
/// delta and percent-difference rows when both arms are present.
inline ReportTable aggregate_table(const RunArchive& archive) {
  const auto* with = archive.find(Arm::with_generation);
  const auto* without = archive.find(Arm::without_generation);
  const std::string variant = detail::ssim_variant_label(archive);
  ReportTable t;
  t.title = "Average comparison";
  t.headers = {"Arm", "Generation/Upload time (s)", "Style transfer time (s)", "Total time (s)",
               "SSIM " + variant, "PSNR (dB)"};

  auto arm_row = [](const char* name, const ExperimentResult* e) {
    std::vector<ReportCell> row = {ReportCell::label(name)};
    if (!e || e->aggregate.empty()) {
      row.resize(6, ReportCell::missing());
      return row;
    }
    const auto& a = e->aggregate;
    row.push_back(ReportCell::of(a.mean_acquisition_time));
    row.push_back(ReportCell::of(a.mean_style_transfer_time));
    row.push_back(ReportCell::of(a.mean_total_time));
    row.push_back(ReportCell::of(a.mean_ssim));
    row.push_back(a.mean_psnr ? ReportCell::of(*a.mean_psnr) : ReportCell::missing());
    return row;
  };
  auto with_row = arm_row("With generation", with);
  auto without_row = arm_row("Without generation", without);
  for (std::size_t c = 1; c < with_row.size(); ++c) detail::bold_highest(with_row[c], without_row[c]);
  t.add_row(with_row);
  t.add_row(without_row);

  if (with && without && !with->aggregate.empty() && !without->aggregate.empty()) {
    const ComparisonReport cmp = compare(*with, *without);
    std::vector<ReportCell> delta = {ReportCell::label("Delta (with - without)")};
    std::vector<ReportCell> percent = {ReportCell::label("Difference (%)")};
    for (const auto& col : cmp.columns) {
      delta.push_back(col.delta ? ReportCell::of(*col.delta) : ReportCell::missing());
      percent.push_back(col.percent ? ReportCell::of(*col.percent) : ReportCell::missing());
    }
    t.add_row(std::move(delta));
    t.add_row(std::move(percent));
  }
  return t;
}

inline std::vector<ReportTable> build_report(const RunArchive& archive) {
  if (archive.experiments.empty()) throw Error(ErrorCode::empty_input, "no experiments");
  return {timing_table(archive), metrics_table(archive), aggregate_table(archive)};
}

// ---------------------------------------------------------------------------
// Rendering

inline std::string render_markdown(const std::vector<ReportTable>& tables) {
  std::ostringstream out;
  bool first = true;
  for (const auto& t : tables) {
    if (!first) out << "\n";
    first = false;
    out << "## " << t.title << "\n\n|";
    for (const auto& h : t.headers) out << " " << h << " |";
    out << "\n|";
    for (std::size_t i = 0; i < t.headers.size(); ++i) out << (i == 0 ? " :--- |" : " ---: |");
    out << "\n";
    for (const auto& row : t.rows) {
      out << "|";
      for (const auto& cell : row) {
        std::string text = cell.number ? format_fixed2(*cell.number) : cell.text;
        if (cell.is_missing()) text = "-";
        if (cell.bold) text = "**" + text + "**";
        out << " " << text << " |";
      }
      out << "\n";
    }
  }
  return out.str();
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::string cell_plain(const ReportCell& c) { return c.number ? format_full(*c.number) : c.text; }

}  // namespace detail

/// One block per table: a `# title` line, the header row, data rows, and a
/// blank separator line. Missing cells are empty.
inline std::string render_csv(const std::vector<ReportTable>& tables) {
  std::ostringstream out;
  for (const auto& t : tables) {
    out << "# " << t.title << "\n";
    for (std::size_t i = 0; i < t.headers.size(); ++i) {
      out << (i ? "," : "") << detail::csv_escape(t.headers[i]);
    }
    out << "\n";
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        out << (i ? "," : "") << detail::csv_escape(detail::cell_plain(row[i]));
      }
      out << "\n";
    }
    out << "\n";
  }
  return out.str();
}

inline nlohmann::json report_to_json(const std::vector<ReportTable>& tables) {
  nlohmann::json doc = {{"tables", nlohmann::json::array()}};
  for (const auto& t : tables) {
    nlohmann::json rows = nlohmann::json::array();
    nlohmann::json bold = nlohmann::json::array();
    for (const auto& row : t.rows) {
      nlohmann::json cells = nlohmann::json::array();
      nlohmann::json mask = nlohmann::json::array();
      for (const auto& c : row) {
        if (c.number) cells.push_back(*c.number);
        else if (c.is_missing()) cells.push_back(nullptr);
        else cells.push_back(c.text);
        mask.push_back(c.bold);
      }
      rows.push_back(std::move(cells));
      bold.push_back(std::move(mask));
    }
    doc["tables"].push_back({{"title", t.title}, {"headers", t.headers}, {"rows", rows}, {"bold", bold}});
  }
  return doc;
}

inline std::string render_json(const std::vector<ReportTable>& tables) {
  return report_to_json(tables).dump(2) + "\n";
}

inline std::string render_report(const std::vector<ReportTable>& tables, ReportFormat format) {
  switch (format) {
    case ReportFormat::markdown: return render_markdown(tables);
    case ReportFormat::csv: return render_csv(tables);
    case ReportFormat::json: return render_json(tables);
  }
  return {};
}

inline nlohmann::json comparison_to_json(const ComparisonReport& report) {
  nlohmann::json cols = nlohmann::json::array();
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  for (const auto& c : report.columns) {
    cols.push_back({{"name", c.name},
                    {"with_generation", opt(c.with_value)},
                    {"without_generation", opt(c.without_value)},
                    {"delta", opt(c.delta)},
                    {"percent", opt(c.percent)},
                    {"direction", c.direction},
                    {"highest", std::string(to_string(c.highest))}});
  }
  return {{"columns", cols}};
}

}  // namespace stylebench
