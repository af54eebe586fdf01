#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "promptopt/ir.hpp"

namespace promptopt {

// One labeled faithfulness sample.
struct Record {
  std::string id;
  std::string context;  // the DOCUMENT
  std::optional<std::string> question;
  std::string answer;
  Label label = Label::pass;  // gold: pass or fail only
  std::string source;         // sub-dataset name
};

struct IngestIssue {
  std::size_t line_number = 0;
  std::string message;
};

struct IngestResult {
  std::vector<Record> records;
  std::vector<IngestIssue> issues;  // malformed lines, kept for the error report
};

// JSON-lines loader with field-name aliases (passage/context/document ->
// context, source_ds/dataset -> source, ...). Zero valid lines or duplicate
// ids are hard errors.
IngestResult ingest(const std::filesystem::path& path);

struct CleanResult {
  std::vector<Record> kept;  // input order preserved
  std::size_t dropped = 0;
};

// Drops records whose answer has three or fewer whitespace-delimited tokens.
CleanResult clean(const std::vector<Record>& records);

struct SplitSpec {
  double train_fraction = 0.5;
  double validation_fraction = 0.25;
  double test_fraction = 0.25;
  std::vector<std::string> strata_keys{"source", "label"};
  std::uint64_t seed = 0;

  void validate() const;
};

struct SplitResult {
  std::vector<Record> train;
  std::vector<Record> validation;
  std::vector<Record> test;
  // stratum key -> (train, validation, test) counts
  std::map<std::string, std::array<std::size_t, 3>> stratum_counts;
  std::vector<std::string> warnings;
};

// Seeded shuffle within each stratum, then largest-remainder partitioning so
// every stratum's per-split count deviates from exact proportionality by at
// most one. Strata smaller than 3 records go to train with a warning.
SplitResult stratified_split(const std::vector<Record>& records, const SplitSpec& spec);

// Proportional per-stratum subsample down to target_n, used before splitting
// when a dataset is larger than the experiment budget.
std::vector<Record> proportional_subsample(const std::vector<Record>& records,
                                           std::size_t target_n, std::uint64_t seed,
                                           const std::vector<std::string>& strata_keys);

std::string stratum_key_of(const Record& record, const std::vector<std::string>& strata_keys);

// JSON-lines (de)serialization for split files.
std::string record_to_json_line(const Record& record);
void write_records(const std::filesystem::path& path, const std::vector<Record>& records);
std::vector<Record> read_records(const std::filesystem::path& path);

}  // namespace promptopt
