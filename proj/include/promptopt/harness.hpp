#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "promptopt/dataset.hpp"
#include "promptopt/embed.hpp"
#include "promptopt/lm.hpp"
#include "promptopt/program.hpp"
#include "promptopt/report_tables.hpp"
#include "promptopt/teleprompt.hpp"

namespace promptopt {

inline constexpr const char* kToolVersion = "0.1.0";

// The closed set of optimizer names accepted by `optimize`.
const std::vector<std::string>& optimizer_names();

struct ExperimentConfig {
  std::filesystem::path base_dir;  // directory relative paths resolve against

  std::filesystem::path dataset_path;
  std::optional<std::size_t> sample_size;

  SplitSpec split;

  std::string backend = "synthetic";  // http | mock | synthetic
  LMParams lm_params;
  HttpLMConfig http;
  std::filesystem::path mock_rules_path;
  std::string mock_default_response;
  SyntheticJudgeConfig synthetic;

  std::string embedder_kind = "local";  // local | remote
  std::size_t embedder_dim = 256;
  RemoteEmbedderConfig remote_embedder;

  TeleprompterConfig teleprompter;
  std::vector<std::string> optimizers{"bootstrap"};
  std::filesystem::path run_dir = "run";
  int concurrency = 4;
  bool include_question = false;
  std::optional<std::filesystem::path> external_scores;
  std::vector<std::filesystem::path> ensemble_members;

  static ExperimentConfig load(const std::filesystem::path& path);
  static ExperimentConfig from_json_text(const std::string& text,
                                         const std::filesystem::path& base_dir);
  std::string to_json() const;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

// Orchestrates the pipeline phases inside one run directory, maintaining the
// run manifest at every phase boundary.
class Harness {
 public:
  explicit Harness(ExperimentConfig config);
  ~Harness();

  // ingest -> clean -> optional proportional subsample -> stratified split;
  // writes the three split files plus the split manifest.
  void prepare();

  // Zero-demo baseline program on the test split.
  EvalReport baseline();

  // Dispatches to the named compile operation; writes the program JSON and
  // the trial log. Returns the program path.
  std::filesystem::path optimize(const std::string& optimizer,
                                 const std::vector<std::filesystem::path>& members = {});

  // Full report for a saved program on a named split (train|validation|test).
  EvalReport evaluate_program(const std::filesystem::path& program_path,
                              const std::string& split_name);

  // Accuracy + F1 + per-source comparison tables from saved reports and an
  // optional external-scores file.
  ComparisonTables compare(const std::vector<std::filesystem::path>& report_paths,
                           const std::optional<std::filesystem::path>& external_scores);

  const ExperimentConfig& config() const { return config_; }
  LM& lm();

  std::filesystem::path split_path(const std::string& split_name) const;
  std::filesystem::path report_path(const std::string& name) const;

 private:
  std::vector<Record> load_split(const std::string& split_name) const;
  CompiledProgram base_program(const std::string& optimizer_name) const;
  void record_phase(const std::string& phase,
                    const std::map<std::string, std::string>& artifacts);
  EvalReport write_report(const std::string& name, const CompiledProgram& program,
                          const std::vector<Record>& records,
                          std::map<std::string, std::string>& artifacts);

  ExperimentConfig config_;
  std::unique_ptr<LM> lm_;
};

}  // namespace promptopt
