#include "promptopt/report_tables.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "promptopt/error.hpp"
#include "promptopt/util.hpp"

namespace promptopt {

using nlohmann::json;

namespace {

double round_half_up(double value, int digits) {
  const double scale = std::pow(10.0, digits);
  return std::floor(value * scale + 0.5) / scale;
}

std::string fixed(double value, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
  return buf;
}

}  // namespace

std::string format_percent(double fraction) {
  return fixed(round_half_up(fraction * 100.0, 2), 2);
}

std::string format_f1(double value) { return fixed(round_half_up(value, 4), 4); }

ComparisonRow row_from_report(const EvalReport& report) {
  ComparisonRow row;
  row.name = report.name;
  row.accuracy = report.accuracy;
  row.micro_f1 = report.micro_f1;
  row.macro_f1 = report.macro_f1;
  row.weighted_f1 = report.weighted_f1;
  row.per_source = report.per_source;
  return row;
}

namespace {

std::optional<double> parse_cell(const std::string& cell) {
  const std::string t = trim(cell);
  if (t.empty()) return std::nullopt;
  try {
    return std::stod(t);
  } catch (...) {
    throw Error::parse("not a number in external scores: '" + cell + "'");
  }
}

std::vector<ComparisonRow> rows_from_flat(
    const std::vector<std::map<std::string, std::string>>& flat) {
  std::vector<ComparisonRow> rows;
  auto row_for = [&](const std::string& name) -> ComparisonRow& {
    for (auto& r : rows)
      if (r.name == name) return r;
    rows.push_back(ComparisonRow{name, {}, {}, {}, {}, {}});
    return rows.back();
  };

  for (const auto& entry : flat) {
    auto get = [&](const char* key) -> std::optional<double> {
      auto it = entry.find(key);
      return it == entry.end() ? std::nullopt : parse_cell(it->second);
    };
    auto model_it = entry.find("model");
    if (model_it == entry.end() || trim(model_it->second).empty())
      throw Error::parse("external score row without a model name");
    ComparisonRow& row = row_for(trim(model_it->second));

    const auto source_it = entry.find("source");
    if (source_it != entry.end() && !trim(source_it->second).empty()) {
      SourceMetrics sm;
      if (auto v = get("accuracy")) sm.accuracy = *v;
      if (auto v = get("micro")) sm.micro_f1 = *v;
      if (auto v = get("macro")) sm.macro_f1 = *v;
      if (auto v = get("weighted")) sm.weighted_f1 = *v;
      row.per_source[trim(source_it->second)] = sm;
    } else {
      if (auto v = get("accuracy")) row.accuracy = v;
      if (auto v = get("micro")) row.micro_f1 = v;
      if (auto v = get("macro")) row.macro_f1 = v;
      if (auto v = get("weighted")) row.weighted_f1 = v;
    }
  }
  return rows;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(cell);
  return cells;
}

}  // namespace

std::vector<ComparisonRow> load_external_scores(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<std::map<std::string, std::string>> flat;

  const std::string first = trim(text);
  if (!first.empty() && first.front() == '[') {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_array())
      throw Error::parse("external scores JSON must be an array: " + path.string());
    for (const auto& item : doc) {
      std::map<std::string, std::string> entry;
      for (auto it = item.begin(); it != item.end(); ++it) {
        std::string key = to_lower(it.key());
        if (key == "micro_f1") key = "micro";
        if (key == "macro_f1") key = "macro";
        if (key == "weighted_f1") key = "weighted";
        entry[key] = it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
      }
      flat.push_back(std::move(entry));
    }
  } else {
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      auto cells = split_csv_line(line);
      if (header.empty()) {
        for (auto& h : cells) header.push_back(to_lower(trim(h)));
        continue;
      }
      std::map<std::string, std::string> entry;
      for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i)
        entry[header[i]] = cells[i];
      flat.push_back(std::move(entry));
    }
    if (header.empty()) throw Error::parse("empty external scores file: " + path.string());
  }
  return rows_from_flat(flat);
}

namespace {

struct Column {
  std::string header;
  // value extractor; nullopt renders as "-"
  std::function<std::optional<double>(const ComparisonRow&)> value;
  bool percent = false;
};

std::string markdown_table(const std::vector<ComparisonRow>& rows,
                           const std::vector<Column>& columns) {
  // Best value per column, for bolding (ties all bold).
  std::vector<std::optional<double>> best(columns.size());
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto v = columns[c].value(row);
      if (v && (!best[c] || *v > *best[c])) best[c] = v;
    }
  }

  std::ostringstream out;
  out << "| Model/Optimizer |";
  for (const auto& col : columns) out << " " << col.header << " |";
  out << "\n| --- |";
  for (std::size_t c = 0; c < columns.size(); ++c) out << " --- |";
  out << "\n";
  for (const auto& row : rows) {
    out << "| " << row.name << " |";
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto v = columns[c].value(row);
      if (!v) {
        out << " - |";
        continue;
      }
      const std::string text = columns[c].percent ? format_percent(*v) : format_f1(*v);
      const bool bold = best[c] && *v == *best[c];
      out << " " << (bold ? "**" + text + "**" : text) << " |";
    }
    out << "\n";
  }
  return out.str();
}

std::string csv_table(const std::vector<ComparisonRow>& rows, const std::vector<Column>& columns,
                      const std::vector<std::string>& csv_headers) {
  std::ostringstream out;
  out << "model";
  for (const auto& h : csv_headers) out << "," << h;
  out << "\n";
  for (const auto& row : rows) {
    out << row.name;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto v = columns[c].value(row);
      out << ",";
      if (v) out << (columns[c].percent ? format_percent(*v) : format_f1(*v));
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace

ComparisonTables render_comparison(std::vector<ComparisonRow> rows) {
  ComparisonTables tables;
  if (rows.empty()) throw Error::invalid_argument("comparison over zero rows");

  // Disambiguate duplicate names with a numeric suffix.
  std::map<std::string, int> name_counts;
  for (auto& row : rows) {
    const int n = ++name_counts[row.name];
    if (n > 1) {
      tables.warnings.push_back("duplicate row name '" + row.name + "' renamed to '" + row.name +
                                " (" + std::to_string(n) + ")'");
      row.name += " (" + std::to_string(n) + ")";
    }
  }

  const std::vector<Column> accuracy_columns{
      {"Accuracy (%)", [](const ComparisonRow& r) { return r.accuracy; }, true}};
  const std::vector<Column> f1_columns{
      {"Micro F1", [](const ComparisonRow& r) { return r.micro_f1; }, false},
      {"Macro F1", [](const ComparisonRow& r) { return r.macro_f1; }, false},
      {"Weighted F1", [](const ComparisonRow& r) { return r.weighted_f1; }, false}};

  tables.accuracy_markdown = markdown_table(rows, accuracy_columns);
  tables.f1_markdown = markdown_table(rows, f1_columns);
  tables.accuracy_csv = csv_table(rows, accuracy_columns, {"accuracy_percent"});
  tables.f1_csv = csv_table(rows, f1_columns, {"micro_f1", "macro_f1", "weighted_f1"});

  // Per-source tables in the appendix layout: one table per source, model rows.
  std::set<std::string> sources;
  for (const auto& row : rows)
    for (const auto& [source, _] : row.per_source) sources.insert(source);

  for (const auto& source : sources) {
    std::vector<ComparisonRow> source_rows;
    for (const auto& row : rows) {
      auto it = row.per_source.find(source);
      if (it == row.per_source.end()) continue;
      ComparisonRow r;
      r.name = row.name;
      r.micro_f1 = it->second.micro_f1;
      r.macro_f1 = it->second.macro_f1;
      r.weighted_f1 = it->second.weighted_f1;
      source_rows.push_back(std::move(r));
    }
    tables.per_source_markdown[source] = markdown_table(source_rows, f1_columns);
  }
  return tables;
}

std::string ComparisonTables::combined_markdown() const {
  std::ostringstream out;
  out << "## Overall Accuracy\n\n" << accuracy_markdown << "\n";
  out << "## Total F1 Scores (Micro, Macro, Weighted)\n\n" << f1_markdown;
  for (const auto& [source, table] : per_source_markdown)
    out << "\n## " << source << " Results\n\n" << table;
  return out.str();
}

std::string render_report_markdown(const EvalReport& report) {
  std::ostringstream out;
  ComparisonTables tables = render_comparison({row_from_report(report)});
  out << "# Evaluation Report: " << report.name << "\n\n";
  out << "- samples: " << report.n << "\n";
  out << "- parse failures: " << report.parse_failures << "\n\n";
  out << tables.combined_markdown();
  return out.str();
}

}  // namespace promptopt
