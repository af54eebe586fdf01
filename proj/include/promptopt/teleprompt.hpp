#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "promptopt/program.hpp"

namespace promptopt {

struct BootstrapResult {
  std::vector<Demo> bootstrapped;
  std::vector<std::string> bootstrapped_ids;  // source record per demo
  std::vector<Demo> labeled;
  std::vector<std::string> labeled_ids;
  std::vector<std::string> warnings;
};

// Runs the program as its own teacher over the trainset in seeded order,
// keeping a demo only when the prediction matches the gold label, then fills
// up to max_labeled_demos gold-labeled demos from the remaining records. With
// stratify_demos_by_source, selection round-robins across sources.
BootstrapResult bootstrap_demos(const CompiledProgram& program,
                                const std::vector<Record>& trainset, LM& lm,
                                const LMParams& params, const TeleprompterConfig& config);

CompiledProgram compile_bootstrap_fewshot(const CompiledProgram& base,
                                          const std::vector<Record>& trainset, LM& lm,
                                          const LMParams& params,
                                          const TeleprompterConfig& config);

// Zero-shot and labeled-only baselines plus num_candidate_programs seeded
// bootstraps, each scored on the validation set; earliest argmax wins.
CompiledProgram compile_random_search(const CompiledProgram& base,
                                      const std::vector<Record>& trainset,
                                      const std::vector<Record>& valset, LM& lm,
                                      const LMParams& params, const TeleprompterConfig& config);

// TPE over per-demo-slot categorical choices drawn from an enlarged
// bootstrapped pool; num_candidate_programs x 5 trials on the validation set.
CompiledProgram compile_bootstrap_tpe(const CompiledProgram& base,
                                      const std::vector<Record>& trainset,
                                      const std::vector<Record>& valset, LM& lm,
                                      const LMParams& params, const TeleprompterConfig& config);

CompiledProgram compile_knn_fewshot(const CompiledProgram& base,
                                    const std::vector<Record>& trainset, LM& lm,
                                    const LMParams& params, const TeleprompterConfig& config,
                                    std::shared_ptr<const ExampleIndex> index,
                                    std::shared_ptr<Embedder> embedder);

struct ProposalStats {
  std::optional<double> current_score;
  // (rendered inputs, expected label) pairs from recent misses
  std::vector<std::pair<std::string, std::string>> failures;
  std::string dataset_summary;
};

// Asks the LM for n improved instructions, one call per variation hint
// (init_temperature is 0, so diversity comes from prompt variation). Returns
// the deduplicated nonempty proposals padded with the current instruction up
// to n; [current] if every proposal came back empty.
std::vector<std::string> propose_instructions(const std::string& current_instruction,
                                              const std::vector<Demo>& demos,
                                              const ProposalStats& stats, LM& lm,
                                              const LMParams& params, int n,
                                              double temperature);

// Iterative instruction refinement: breadth proposals per round for depth
// rounds, scored on the trainset; adopts strict improvements only, so the
// incumbent score is nondecreasing.
CompiledProgram compile_copro(const CompiledProgram& base, const std::vector<Record>& trainset,
                              const std::vector<Record>& valset, LM& lm, const LMParams& params,
                              const TeleprompterConfig& config);

// Stage-1/2 candidates for MIPRO; separable so the search stage can be driven
// with handcrafted candidates.
struct MiproCandidates {
  std::vector<std::string> instructions;
  std::vector<std::vector<Demo>> demo_sets;
};

MiproCandidates mipro_build_candidates(const CompiledProgram& base,
                                       const std::vector<Record>& trainset, LM& lm,
                                       const LMParams& params,
                                       const TeleprompterConfig& config);

// Stage 3: TPE over the instruction x demo-set grid, num_trials seeded
// minibatch trials with a full validation eval of the incumbent every
// minibatch_full_eval_steps trials and at the end; returns the full-eval argmax.
CompiledProgram mipro_search(const CompiledProgram& base, const MiproCandidates& candidates,
                             const std::vector<Record>& valset, LM& lm, const LMParams& params,
                             const TeleprompterConfig& config);

CompiledProgram compile_mipro(const CompiledProgram& base, const std::vector<Record>& trainset,
                              const std::vector<Record>& valset, LM& lm, const LMParams& params,
                              const TeleprompterConfig& config);

// Majority vote over member verdicts; INVALID votes are discarded and an
// exact tie resolves to FAIL.
CompiledProgram ensemble_majority(const std::vector<CompiledProgram>& programs);

}  // namespace promptopt
