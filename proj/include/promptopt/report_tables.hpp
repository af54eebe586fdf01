#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "promptopt/metrics.hpp"

namespace promptopt {

// One comparison row: a report's overall metrics, or an externally supplied
// score line (e.g. RAGAS/DeepEval exports).
struct ComparisonRow {
  std::string name;
  std::optional<double> accuracy;  // fraction in [0,1]
  std::optional<double> micro_f1;
  std::optional<double> macro_f1;
  std::optional<double> weighted_f1;
  // source -> per-source micro/macro/weighted (accuracy optional)
  std::map<std::string, SourceMetrics> per_source;
};

// External scores: CSV (model,accuracy,micro,macro,weighted[,source]) or a
// JSON array of objects with the same keys. Rows sharing a model name merge;
// a row with a source fills that model's per-source entry only.
std::vector<ComparisonRow> load_external_scores(const std::filesystem::path& path);

ComparisonRow row_from_report(const EvalReport& report);

struct ComparisonTables {
  std::string accuracy_markdown;
  std::string f1_markdown;
  std::map<std::string, std::string> per_source_markdown;
  std::string accuracy_csv;
  std::string f1_csv;
  std::vector<std::string> warnings;  // e.g. duplicate row names

  // Every table in one document, per-source sections in sorted order.
  std::string combined_markdown() const;
};

// Accuracy and micro/macro/weighted tables, one row per model/optimizer, best
// value per column bolded; plus one per-source table per source present.
ComparisonTables render_comparison(std::vector<ComparisonRow> rows);

// Single-report rendering: its comparison rows plus a per-source breakdown.
std::string render_report_markdown(const EvalReport& report);

// Half-up rounding as printed in the tables.
std::string format_percent(double fraction);  // "80.91"
std::string format_f1(double value);          // "0.8091"

}  // namespace promptopt
