#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "promptopt/dataset.hpp"
#include "promptopt/embed.hpp"
#include "promptopt/ir.hpp"
#include "promptopt/tpe.hpp"

namespace promptopt {

// Knobs shared by the optimizer suite; defaults follow the experiment's
// standard configuration.
struct TeleprompterConfig {
  int max_bootstrapped_demos = 8;
  int max_labeled_demos = 16;
  int num_candidate_programs = 3;  // random search / TPE variant
  int k = 8;                       // KNN few-shot
  int breadth = 5;                 // instruction proposals per round
  int depth = 3;                   // refinement rounds
  double init_temperature = 0.0;
  int num_candidates = 3;          // MIPRO instruction/demo-set candidates
  int num_trials = 15;
  int minibatch_size = 25;
  int minibatch_full_eval_steps = 10;
  std::uint64_t seed = 0;
  bool stratify_demos_by_source = false;

  void validate() const;
};

// Dynamic-demo policy: retrieve the k nearest training records per query and
// render them as gold-labeled demos, most similar last.
struct KnnPolicy {
  std::string index_path;    // relative to the program file once saved
  std::string records_path;  // training records backing the index
  int k = 8;
  std::size_t dim = 256;
};

struct Provenance {
  std::string optimizer;
  std::uint64_t seed = 0;
  TeleprompterConfig config;
  std::optional<double> train_score;
  std::optional<double> validation_score;
  std::size_t trial_count = 0;
  std::vector<TrialRecord> trials;
  std::vector<std::string> warnings;
};

// An optimized judge: instruction + demos (static list, KNN policy, or
// ensemble members) + full provenance. Immutable value; the runtime
// attachments for KNN mode are shared const state.
struct CompiledProgram {
  Signature signature;
  std::vector<Demo> demos;
  std::optional<KnnPolicy> knn_policy;
  std::vector<CompiledProgram> members;  // nonempty only for ensembles
  Provenance provenance;

  // Runtime attachments (not serialized; restored by load_program).
  std::shared_ptr<const ExampleIndex> knn_index;
  std::shared_ptr<const std::map<std::string, Record>> knn_records;
  std::shared_ptr<Embedder> knn_embedder;

  bool is_ensemble() const { return !members.empty(); }
};

CompiledProgram make_base_program(const Signature& signature, const std::string& optimizer_name);

// The judge's view of a record, keyed by the signature's input fields.
std::map<std::string, std::string> inputs_for_record(const Signature& signature,
                                                     const Record& record);

// Demos a program would place in the prompt for the given inputs (static
// list, or KNN retrieval for dynamic programs).
std::vector<Demo> demos_for_inputs(const CompiledProgram& program,
                                   const std::map<std::string, std::string>& inputs);

Prediction run_program(const CompiledProgram& program,
                       const std::map<std::string, std::string>& inputs, LM& lm,
                       const LMParams& params);

std::vector<Prediction> run_batch(const CompiledProgram& program,
                                  const std::vector<Record>& records, LM& lm,
                                  const LMParams& params, int concurrency = 1);

// Mean exact-match score over the records.
double evaluate(const CompiledProgram& program, const std::vector<Record>& records, LM& lm,
                const LMParams& params, int concurrency = 1);

// Versioned JSON program files.
std::string program_to_json(const CompiledProgram& program);
void save_program(const CompiledProgram& program, const std::filesystem::path& path);
CompiledProgram load_program(const std::filesystem::path& path);

}  // namespace promptopt
