#include "promptopt/teleprompt.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "promptopt/error.hpp"
#include "promptopt/metrics.hpp"
#include "promptopt/util.hpp"

namespace promptopt {

namespace {

std::vector<std::size_t> seeded_visit_order(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

Demo labeled_demo_for(const Signature& signature, const Record& record) {
  Demo demo;
  demo.inputs = inputs_for_record(signature, record);
  for (const auto& field : signature.output_fields()) {
    if (field.name == "SCORE") demo.outputs[field.name] = to_string(record.label);
    else if (field.name == "REASONING") demo.outputs[field.name] = "[]";
    else demo.outputs[field.name] = "";
  }
  return demo;
}

Demo teacher_demo_for(const Signature& signature, const Record& record,
                      const Prediction& prediction) {
  Demo demo;
  demo.inputs = inputs_for_record(signature, record);
  for (const auto& field : signature.output_fields()) {
    auto it = prediction.outputs.find(field.name);
    demo.outputs[field.name] = it != prediction.outputs.end() ? it->second : "";
  }
  return demo;
}

// Round-robin iterator over per-source queues (sources in sorted order).
class StratifiedCursor {
 public:
  StratifiedCursor(const std::vector<Record>& records, const std::vector<std::size_t>& order) {
    for (std::size_t i : order) queues_[records[i].source].push_back(i);
    for (const auto& [source, _] : queues_) sources_.push_back(source);
  }

  // Next record index from the current source's queue, cycling sources.
  std::optional<std::size_t> next() {
    std::size_t scanned = 0;
    while (scanned < sources_.size()) {
      auto& queue = queues_[sources_[cursor_]];
      if (queue.empty()) {
        cursor_ = (cursor_ + 1) % sources_.size();
        ++scanned;
        continue;
      }
      const std::size_t idx = queue.front();
      queue.pop_front();
      return idx;
    }
    return std::nullopt;
  }

  // Move on to the next source; call after a successful pick so each cycle
  // takes at most one record per source.
  void advance_source() { cursor_ = (cursor_ + 1) % sources_.size(); }

 private:
  std::map<std::string, std::deque<std::size_t>> queues_;
  std::vector<std::string> sources_;
  std::size_t cursor_ = 0;
};

}  // namespace

BootstrapResult bootstrap_demos(const CompiledProgram& program,
                                const std::vector<Record>& trainset, LM& lm,
                                const LMParams& params, const TeleprompterConfig& config) {
  if (trainset.empty()) throw Error::invalid_argument("bootstrap over empty trainset");
  config.validate();

  BootstrapResult result;
  const auto order = seeded_visit_order(trainset.size(), config.seed);
  std::set<std::string> used_ids;

  auto try_teacher = [&](std::size_t idx) {
    const Record& record = trainset[idx];
    const Prediction pred =
        run_program(program, inputs_for_record(program.signature, record), lm, params);
    if (exact_match(pred.label, record.label) != 1) return false;
    result.bootstrapped.push_back(teacher_demo_for(program.signature, record, pred));
    result.bootstrapped_ids.push_back(record.id);
    used_ids.insert(record.id);
    return true;
  };

  const std::size_t max_bootstrapped = static_cast<std::size_t>(config.max_bootstrapped_demos);
  const std::size_t max_labeled = static_cast<std::size_t>(config.max_labeled_demos);

  if (config.stratify_demos_by_source) {
    StratifiedCursor cursor(trainset, order);
    while (result.bootstrapped.size() < max_bootstrapped) {
      // One demo per source per cycle: advance within the current source
      // until it yields a passing demo or runs dry, then move on.
      bool picked = false;
      while (auto idx = cursor.next()) {
        if (try_teacher(*idx)) {
          picked = true;
          break;
        }
      }
      if (!picked) break;  // every queue exhausted
      cursor.advance_source();
    }
  } else {
    for (std::size_t idx : order) {
      if (result.bootstrapped.size() >= max_bootstrapped) break;
      try_teacher(idx);
    }
  }

  if (max_bootstrapped > 0 && result.bootstrapped.empty()) {
    result.warnings.push_back(
        "teacher produced no metric-passing demos; falling back to labeled demos only");
  }

  // Raw labeled demos from the records not already serving as bootstrapped demos.
  auto take_labeled = [&](std::size_t idx) {
    const Record& record = trainset[idx];
    if (used_ids.count(record.id)) return false;
    result.labeled.push_back(labeled_demo_for(program.signature, record));
    result.labeled_ids.push_back(record.id);
    used_ids.insert(record.id);
    return true;
  };

  if (config.stratify_demos_by_source) {
    StratifiedCursor cursor(trainset, order);
    while (result.labeled.size() < max_labeled) {
      bool picked = false;
      while (auto idx = cursor.next()) {
        if (take_labeled(*idx)) {
          picked = true;
          break;
        }
      }
      if (!picked) break;
      cursor.advance_source();
    }
  } else {
    for (std::size_t idx : order) {
      if (result.labeled.size() >= max_labeled) break;
      take_labeled(idx);
    }
  }

  return result;
}

namespace {

CompiledProgram assemble(const CompiledProgram& base, const std::string& optimizer,
                         std::vector<Demo> demos, const TeleprompterConfig& config) {
  CompiledProgram program = base;
  program.demos = std::move(demos);
  program.provenance = Provenance{};
  program.provenance.optimizer = optimizer;
  program.provenance.seed = config.seed;
  program.provenance.config = config;
  return program;
}

std::vector<Demo> concat_demos(const std::vector<Demo>& a, const std::vector<Demo>& b) {
  std::vector<Demo> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

CompiledProgram compile_bootstrap_fewshot(const CompiledProgram& base,
                                          const std::vector<Record>& trainset, LM& lm,
                                          const LMParams& params,
                                          const TeleprompterConfig& config) {
  const BootstrapResult boot = bootstrap_demos(base, trainset, lm, params, config);
  CompiledProgram program =
      assemble(base, "bootstrap", concat_demos(boot.bootstrapped, boot.labeled), config);
  program.provenance.warnings = boot.warnings;
  return program;
}

CompiledProgram compile_random_search(const CompiledProgram& base,
                                      const std::vector<Record>& trainset,
                                      const std::vector<Record>& valset, LM& lm,
                                      const LMParams& params, const TeleprompterConfig& config) {
  if (valset.empty()) throw Error::invalid_argument("random search needs a validation set");
  config.validate();

  struct Candidate {
    std::string name;
    CompiledProgram program;
  };
  std::vector<Candidate> candidates;

  candidates.push_back({"zero-shot", assemble(base, "random-search", {}, config)});

  {
    TeleprompterConfig labeled_config = config;
    labeled_config.max_bootstrapped_demos = 0;
    labeled_config.seed = derive_seed(config.seed, "rs-labeled");
    const BootstrapResult boot = bootstrap_demos(base, trainset, lm, params, labeled_config);
    candidates.push_back({"labeled-only", assemble(base, "random-search", boot.labeled, config)});
  }

  for (int i = 0; i < config.num_candidate_programs; ++i) {
    TeleprompterConfig boot_config = config;
    boot_config.seed = derive_seed(config.seed, "rs-candidate-" + std::to_string(i));
    const BootstrapResult boot = bootstrap_demos(base, trainset, lm, params, boot_config);
    candidates.push_back({"bootstrap-" + std::to_string(i),
                          assemble(base, "random-search",
                                   concat_demos(boot.bootstrapped, boot.labeled), config)});
  }

  std::vector<TrialRecord> trials;
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double score = evaluate(candidates[i].program, valset, lm, params);
    trials.push_back({{{"candidate", candidates[i].name}}, score, EvalKind::full});
    if (score > best_score) {  // strict: earliest candidate wins ties
      best_score = score;
      best = i;
    }
  }

  CompiledProgram winner = candidates[best].program;
  winner.provenance.validation_score = best_score;
  winner.provenance.trials = std::move(trials);
  winner.provenance.trial_count = winner.provenance.trials.size();
  return winner;
}

CompiledProgram compile_bootstrap_tpe(const CompiledProgram& base,
                                      const std::vector<Record>& trainset,
                                      const std::vector<Record>& valset, LM& lm,
                                      const LMParams& params, const TeleprompterConfig& config) {
  if (valset.empty()) throw Error::invalid_argument("TPE compile needs a validation set");
  config.validate();

  // Candidate pool from a bootstrap pass with doubled budget.
  TeleprompterConfig pool_config = config;
  pool_config.max_bootstrapped_demos = 2 * config.max_bootstrapped_demos;
  pool_config.seed = derive_seed(config.seed, "tpe-pool");
  const BootstrapResult pool = bootstrap_demos(base, trainset, lm, params, pool_config);

  if (pool.bootstrapped.empty()) {
    CompiledProgram fallback = compile_bootstrap_fewshot(base, trainset, lm, params, config);
    fallback.provenance.optimizer = "tpe";
    fallback.provenance.warnings.push_back(
        "bootstrapped demo pool is empty; fell back to plain bootstrap few-shot");
    return fallback;
  }

  SearchSpace space;
  std::vector<std::string> pool_choices;
  for (std::size_t i = 0; i < pool.bootstrapped.size(); ++i)
    pool_choices.push_back(std::to_string(i));
  const int slots = config.max_bootstrapped_demos;
  for (int s = 0; s < slots; ++s)
    space["slot_" + std::to_string(s)] = pool_choices;

  auto program_for = [&](const std::map<std::string, std::string>& assignment) {
    std::vector<Demo> selected;
    std::set<std::string> seen;
    for (int s = 0; s < slots; ++s) {
      const std::string& choice = assignment.at("slot_" + std::to_string(s));
      if (!seen.insert(choice).second) continue;  // drop duplicate picks
      selected.push_back(pool.bootstrapped[std::stoul(choice)]);
    }
    return assemble(base, "tpe", concat_demos(selected, pool.labeled), config);
  };

  const int n_trials = config.num_candidate_programs * 5;
  std::vector<TrialRecord> history;
  for (int t = 0; t < n_trials; ++t) {
    const auto assignment =
        tpe_suggest(history, space, derive_seed(config.seed, "tpe-trial-" + std::to_string(t)));
    const double score = evaluate(program_for(assignment), valset, lm, params);
    history.push_back({assignment, score, EvalKind::full});
  }

  std::size_t best = 0;
  for (std::size_t t = 1; t < history.size(); ++t)
    if (history[t].score > history[best].score) best = t;

  CompiledProgram winner = program_for(history[best].assignment);
  winner.provenance.validation_score = history[best].score;
  winner.provenance.trials = history;
  winner.provenance.trial_count = history.size();
  winner.provenance.warnings = pool.warnings;
  return winner;
}

CompiledProgram compile_knn_fewshot(const CompiledProgram& base,
                                    const std::vector<Record>& trainset, LM& lm,
                                    const LMParams& params, const TeleprompterConfig& config,
                                    std::shared_ptr<const ExampleIndex> index,
                                    std::shared_ptr<Embedder> embedder) {
  (void)lm;
  (void)params;
  if (trainset.empty()) throw Error::invalid_argument("KNN compile over empty trainset");
  config.validate();
  if (!index || !embedder) throw Error::invalid_argument("KNN compile needs index and embedder");
  if (index->size() != trainset.size())
    throw Error::invalid_argument("index size " + std::to_string(index->size()) +
                                  " does not match trainset size " +
                                  std::to_string(trainset.size()));
  if (static_cast<std::size_t>(config.k) > index->size())
    throw Error::invalid_argument("k exceeds index size");

  auto records = std::make_shared<std::map<std::string, Record>>();
  for (const auto& r : trainset) (*records)[r.id] = r;
  for (const auto& id : index->ids()) {
    if (!records->count(id))
      throw Error::invalid_argument("index id not found in trainset: " + id);
  }

  CompiledProgram program = assemble(base, "knn", {}, config);
  KnnPolicy policy;
  policy.k = config.k;
  policy.dim = index->dim();
  program.knn_policy = policy;
  program.knn_index = std::move(index);
  program.knn_records = std::move(records);
  program.knn_embedder = std::move(embedder);
  return program;
}

// ---------------------------------------------------------------------------
// Instruction search

namespace {

const char* kVariationHints[] = {
    "state the judging criteria more explicitly",
    "emphasize that any unsupported or contradictory claim must fail",
    "ask for evidence from the DOCUMENT to be checked token by token",
    "stress precision about numbers, names and dates",
    "make the instruction shorter and more direct",
};

std::string proposal_prompt(const std::string& current_instruction,
                            const std::vector<Demo>& demos, const ProposalStats& stats,
                            int variation_index) {
  std::ostringstream out;
  out << "You are improving the instruction of a language-model program that judges "
         "whether an ANSWER is faithful to a DOCUMENT.\n\n";
  out << "Current instruction:\n" << current_instruction << "\n\n";
  if (stats.current_score)
    out << "Current exact-match score: " << *stats.current_score << "\n\n";
  if (!stats.dataset_summary.empty()) out << "Dataset summary:\n" << stats.dataset_summary << "\n\n";
  if (!stats.failures.empty()) {
    out << "Examples the current instruction gets wrong:\n";
    std::size_t shown = 0;
    for (const auto& [inputs, expected] : stats.failures) {
      out << "- inputs: " << inputs << "\n  expected: " << expected << "\n";
      if (++shown >= 3) break;
    }
    out << "\n";
  }
  if (!demos.empty())
    out << "The prompt will also carry " << demos.size() << " worked demonstrations.\n\n";
  const std::size_t n_hints = sizeof(kVariationHints) / sizeof(kVariationHints[0]);
  out << "Propose one improved instruction. Variation " << variation_index << ": "
      << kVariationHints[static_cast<std::size_t>(variation_index - 1) % n_hints] << ".\n";
  out << "Respond with the instruction text only.";
  return out.str();
}

}  // namespace

std::vector<std::string> propose_instructions(const std::string& current_instruction,
                                              const std::vector<Demo>& demos,
                                              const ProposalStats& stats, LM& lm,
                                              const LMParams& params, int n,
                                              double temperature) {
  if (n < 1) throw Error::invalid_argument("propose_instructions needs n >= 1");

  LMParams proposal_params = params;
  proposal_params.temperature = temperature;

  std::vector<std::string> proposals;
  std::set<std::string> seen;
  for (int k = 1; k <= n; ++k) {
    const std::string completion =
        trim(lm.complete(proposal_prompt(current_instruction, demos, stats, k), proposal_params));
    if (completion.empty()) continue;
    if (seen.insert(completion).second) proposals.push_back(completion);
  }
  if (proposals.empty()) return {current_instruction};
  while (proposals.size() < static_cast<std::size_t>(n)) proposals.push_back(current_instruction);
  return proposals;
}

namespace {

ProposalStats stats_from_eval(const std::vector<Record>& records,
                              const std::vector<Prediction>& predictions, double score) {
  ProposalStats stats;
  stats.current_score = score;
  for (std::size_t i = 0; i < records.size() && stats.failures.size() < 3; ++i) {
    if (exact_match(predictions[i].label, records[i].label) == 1) continue;
    std::string inputs = "DOCUMENT: " + records[i].context + " | ANSWER: " + records[i].answer;
    if (inputs.size() > 320) inputs = inputs.substr(0, 320) + "...";
    stats.failures.emplace_back(inputs, to_string(records[i].label));
  }
  return stats;
}

double mean_exact_match(const std::vector<Prediction>& predictions,
                        const std::vector<Record>& records) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < records.size(); ++i)
    correct += static_cast<std::size_t>(exact_match(predictions[i].label, records[i].label));
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

}  // namespace

CompiledProgram compile_copro(const CompiledProgram& base, const std::vector<Record>& trainset,
                              const std::vector<Record>& valset, LM& lm, const LMParams& params,
                              const TeleprompterConfig& config) {
  (void)valset;  // COPRO scores candidate instructions on the trainset
  if (trainset.empty()) throw Error::invalid_argument("COPRO over empty trainset");
  config.validate();

  CompiledProgram incumbent = assemble(base, "copro", base.demos, config);
  auto incumbent_predictions = run_batch(incumbent, trainset, lm, params);
  double incumbent_score = mean_exact_match(incumbent_predictions, trainset);

  std::vector<TrialRecord> trials;
  std::set<std::string> scored;  // instructions already evaluated
  scored.insert(incumbent.signature.instruction);

  for (int round = 0; round < config.depth; ++round) {
    const ProposalStats stats =
        stats_from_eval(trainset, incumbent_predictions, incumbent_score);
    const auto proposals =
        propose_instructions(incumbent.signature.instruction, incumbent.demos, stats, lm, params,
                             config.breadth, config.init_temperature);

    double round_best_score = -1.0;
    CompiledProgram round_best = incumbent;
    std::vector<Prediction> round_best_predictions;
    for (std::size_t p = 0; p < proposals.size(); ++p) {
      if (!scored.insert(proposals[p]).second) continue;  // already evaluated
      CompiledProgram candidate = incumbent;
      candidate.signature.instruction = proposals[p];
      const auto predictions = run_batch(candidate, trainset, lm, params);
      const double score = mean_exact_match(predictions, trainset);
      trials.push_back({{{"round", std::to_string(round)},
                         {"proposal", std::to_string(p)}},
                        score,
                        EvalKind::full});
      if (score > round_best_score) {
        round_best_score = score;
        round_best = candidate;
        round_best_predictions = predictions;
      }
    }

    // Adopt strict improvements only; ties keep the incumbent.
    if (round_best_score > incumbent_score) {
      incumbent = round_best;
      incumbent_score = round_best_score;
      incumbent_predictions = round_best_predictions;
    }
  }

  incumbent.provenance.train_score = incumbent_score;
  incumbent.provenance.trials = std::move(trials);
  incumbent.provenance.trial_count = incumbent.provenance.trials.size();
  return incumbent;
}

MiproCandidates mipro_build_candidates(const CompiledProgram& base,
                                       const std::vector<Record>& trainset, LM& lm,
                                       const LMParams& params,
                                       const TeleprompterConfig& config) {
  if (trainset.empty()) throw Error::invalid_argument("MIPRO over empty trainset");
  config.validate();

  MiproCandidates candidates;
  for (int j = 0; j < config.num_candidates; ++j) {
    TeleprompterConfig set_config = config;
    set_config.seed = derive_seed(config.seed, "mipro-demoset-" + std::to_string(j));
    const BootstrapResult boot = bootstrap_demos(base, trainset, lm, params, set_config);
    candidates.demo_sets.push_back(concat_demos(boot.bootstrapped, boot.labeled));
  }

  // Dataset summary for the proposal prompts.
  std::map<std::string, std::size_t> by_source;
  std::size_t n_pass = 0;
  for (const auto& r : trainset) {
    ++by_source[r.source];
    if (r.label == Label::pass) ++n_pass;
  }
  std::ostringstream summary;
  summary << trainset.size() << " training records; labels: PASS " << n_pass << ", FAIL "
          << trainset.size() - n_pass << "; sources:";
  for (const auto& [source, count] : by_source) summary << " " << source << " (" << count << ")";

  ProposalStats stats;
  stats.dataset_summary = summary.str();
  candidates.instructions =
      propose_instructions(base.signature.instruction, candidates.demo_sets.empty()
                                                           ? std::vector<Demo>{}
                                                           : candidates.demo_sets.front(),
                           stats, lm, params, config.num_candidates, config.init_temperature);
  return candidates;
}

CompiledProgram mipro_search(const CompiledProgram& base, const MiproCandidates& candidates,
                             const std::vector<Record>& valset, LM& lm, const LMParams& params,
                             const TeleprompterConfig& config) {
  if (valset.empty()) throw Error::invalid_argument("MIPRO needs a validation set");
  if (candidates.instructions.empty() || candidates.demo_sets.empty())
    throw Error::invalid_argument("MIPRO needs at least one instruction and one demo set");
  config.validate();

  SearchSpace space;
  for (std::size_t i = 0; i < candidates.instructions.size(); ++i)
    space["instruction"].push_back(std::to_string(i));
  for (std::size_t j = 0; j < candidates.demo_sets.size(); ++j)
    space["demo_set"].push_back(std::to_string(j));

  auto program_for = [&](const std::map<std::string, std::string>& assignment) {
    CompiledProgram program = assemble(base, "mipro", {}, config);
    program.signature.instruction =
        candidates.instructions[std::stoul(assignment.at("instruction"))];
    program.demos = candidates.demo_sets[std::stoul(assignment.at("demo_set"))];
    return program;
  };

  // Seeded minibatch without replacement for one trial.
  auto minibatch_for = [&](int trial) {
    const std::size_t size =
        std::min<std::size_t>(static_cast<std::size_t>(config.minibatch_size), valset.size());
    if (size == valset.size()) return valset;
    auto order = seeded_visit_order(valset.size(),
                                    derive_seed(config.seed, "mipro-minibatch-" + std::to_string(trial)));
    std::vector<Record> batch;
    batch.reserve(size);
    for (std::size_t i = 0; i < size; ++i) batch.push_back(valset[order[i]]);
    return batch;
  };

  std::vector<TrialRecord> minibatch_history;
  std::vector<TrialRecord> all_trials;
  std::vector<TrialRecord> full_evals;

  auto incumbent_assignment = [&]() {
    std::size_t best = 0;
    for (std::size_t t = 1; t < minibatch_history.size(); ++t)
      if (minibatch_history[t].score > minibatch_history[best].score) best = t;
    return minibatch_history[best].assignment;
  };

  auto run_full_eval = [&]() {
    const auto assignment = incumbent_assignment();
    const double score = evaluate(program_for(assignment), valset, lm, params);
    TrialRecord record{assignment, score, EvalKind::full};
    full_evals.push_back(record);
    all_trials.push_back(record);
  };

  for (int t = 0; t < config.num_trials; ++t) {
    const auto assignment = tpe_suggest(minibatch_history, space,
                                        derive_seed(config.seed, "mipro-trial-" + std::to_string(t)));
    const double score = evaluate(program_for(assignment), minibatch_for(t), lm, params);
    TrialRecord record{assignment, score, EvalKind::minibatch};
    minibatch_history.push_back(record);
    all_trials.push_back(record);
    if ((t + 1) % config.minibatch_full_eval_steps == 0) run_full_eval();
  }
  run_full_eval();  // final full evaluation

  std::size_t best = 0;
  for (std::size_t t = 1; t < full_evals.size(); ++t)
    if (full_evals[t].score > full_evals[best].score) best = t;

  CompiledProgram winner = program_for(full_evals[best].assignment);
  winner.provenance.validation_score = full_evals[best].score;
  winner.provenance.trials = std::move(all_trials);
  winner.provenance.trial_count = winner.provenance.trials.size();
  return winner;
}

CompiledProgram compile_mipro(const CompiledProgram& base, const std::vector<Record>& trainset,
                              const std::vector<Record>& valset, LM& lm, const LMParams& params,
                              const TeleprompterConfig& config) {
  const MiproCandidates candidates = mipro_build_candidates(base, trainset, lm, params, config);
  return mipro_search(base, candidates, valset, lm, params, config);
}

CompiledProgram ensemble_majority(const std::vector<CompiledProgram>& programs) {
  if (programs.empty()) throw Error::invalid_argument("ensemble over empty program list");

  CompiledProgram ensemble;
  ensemble.signature = programs.front().signature;
  ensemble.members = programs;
  ensemble.provenance.optimizer = "ensemble";
  ensemble.provenance.config = programs.front().provenance.config;
  ensemble.provenance.seed = programs.front().provenance.seed;
  return ensemble;
}

}  // namespace promptopt
