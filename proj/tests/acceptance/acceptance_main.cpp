// Acceptance suite: every criterion prints one [PASS]/[FAIL] line; the
// process exits nonzero if any criterion fails. Runs fully offline against
// the mock/synthetic backends.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "promptopt/dataset.hpp"
#include "promptopt/embed.hpp"
#include "promptopt/harness.hpp"
#include "promptopt/metrics.hpp"
#include "promptopt/report_tables.hpp"
#include "promptopt/synth.hpp"
#include "promptopt/teleprompt.hpp"
#include "promptopt/tpe.hpp"
#include "promptopt/util.hpp"

using namespace promptopt;
namespace fs = std::filesystem;

namespace {

const LMParams kParams{"judge", 0.0, 1.0, std::nullopt};

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool condition, const std::string& what) {
    if (!condition) {
      ok = false;
      detail << (detail.str().empty() ? "" : "; ") << what;
    }
  }
};

fs::path scratch_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("promptopt_acceptance_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

// --------------------------------------------------------------------------
// 1. Metric oracle equivalence

// Brute-force reference, independent of ConfusionMatrix.
void reference_f1(const std::vector<Label>& preds, const std::vector<Label>& golds,
                  double& micro, double& macro, double& weighted, double& acc) {
  auto count = [&](auto&& fn) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
      if (fn(preds[i], golds[i])) ++n;
    return static_cast<double>(n);
  };
  double tp_sum = 0;
  double fp_sum = 0;
  double fn_sum = 0;
  macro = 0;
  weighted = 0;
  for (Label c : {Label::pass, Label::fail}) {
    const double tp = count([&](Label p, Label g) { return p == c && g == c; });
    const double fp = count([&](Label p, Label g) { return p == c && g != c; });
    const double fn = count([&](Label p, Label g) { return g == c && p != c; });
    const double support = count([&](Label, Label g) { return g == c; });
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0;
    tp_sum += tp;
    fp_sum += fp;
    fn_sum += fn;
    macro += f1 / 2;
    weighted += support / static_cast<double>(preds.size()) * f1;
  }
  micro = 2 * tp_sum / (2 * tp_sum + fp_sum + fn_sum);
  acc = count([](Label p, Label g) { return p == g; }) / static_cast<double>(preds.size());
}

bool criterion_metric_oracle(Check& check) {
  std::mt19937_64 rng(2024);
  for (int round = 0; round < 1000; ++round) {
    const std::size_t n = 1 + rng() % 64;
    std::vector<Label> golds;
    std::vector<Label> preds;
    bool any_invalid = false;
    for (std::size_t i = 0; i < n; ++i) {
      golds.push_back(rng() % 2 == 0 ? Label::pass : Label::fail);
      const int p = static_cast<int>(rng() % 5);
      const Label label = p < 2 ? Label::pass : (p < 4 ? Label::fail : Label::invalid);
      any_invalid |= label == Label::invalid;
      preds.push_back(label);
    }
    const F1Scores actual = f1_scores(preds, golds);
    double micro = 0;
    double macro = 0;
    double weighted = 0;
    double acc = 0;
    reference_f1(preds, golds, micro, macro, weighted, acc);
    check.expect(std::abs(actual.micro - micro) < 1e-9, "micro off at round " + std::to_string(round));
    check.expect(std::abs(actual.macro - macro) < 1e-9, "macro off at round " + std::to_string(round));
    check.expect(std::abs(actual.weighted - weighted) < 1e-9,
                 "weighted off at round " + std::to_string(round));
    if (!any_invalid) {
      ConfusionMatrix m;
      for (std::size_t i = 0; i < n; ++i) m.add(preds[i], golds[i]);
      check.expect(actual.micro == accuracy(m),
                   "micro != accuracy without INVALID at round " + std::to_string(round));
    }
    if (!check.ok) return false;
  }
  return check.ok;
}

// --------------------------------------------------------------------------
// 2. Split fidelity

bool criterion_split_fidelity(Check& check) {
  const auto records = generate_synthetic_records(1500, 99);
  SplitSpec spec;
  spec.seed = 13;
  const SplitResult split = stratified_split(records, spec);
  check.expect(split.train.size() == 750, "train=" + std::to_string(split.train.size()));
  check.expect(split.validation.size() == 375,
               "validation=" + std::to_string(split.validation.size()));
  check.expect(split.test.size() == 375, "test=" + std::to_string(split.test.size()));
  for (const auto& [key, counts] : split.stratum_counts) {
    const double n = static_cast<double>(counts[0] + counts[1] + counts[2]);
    check.expect(std::abs(counts[0] - 0.50 * n) <= 1.0, key + " train deviates");
    check.expect(std::abs(counts[1] - 0.25 * n) <= 1.0, key + " validation deviates");
    check.expect(std::abs(counts[2] - 0.25 * n) <= 1.0, key + " test deviates");
  }
  const SplitResult rerun = stratified_split(records, spec);
  bool identical = rerun.train.size() == split.train.size();
  for (std::size_t i = 0; identical && i < split.train.size(); ++i)
    identical = rerun.train[i].id == split.train[i].id;
  check.expect(identical, "rerun differs");
  return check.ok;
}

// --------------------------------------------------------------------------
// 3. Cleaning rule

bool criterion_cleaning(Check& check) {
  std::vector<Record> fixture;
  const std::vector<std::string> answers{"one", "one two", "one two three",
                                         "one two three four",
                                         "one two three four five"};
  for (std::size_t i = 0; i < answers.size(); ++i) {
    Record r;
    r.id = "f" + std::to_string(i);
    r.context = "ctx";
    r.answer = answers[i];
    r.label = Label::pass;
    r.source = "fixture";
    fixture.push_back(r);
  }
  const CleanResult result = clean(fixture);
  check.expect(result.dropped == 3, "dropped=" + std::to_string(result.dropped));
  check.expect(result.kept.size() == 2, "kept=" + std::to_string(result.kept.size()));
  for (const auto& r : result.kept)
    check.expect(split_whitespace(r.answer).size() > 3, "kept a short answer: " + r.id);
  return check.ok;
}

// --------------------------------------------------------------------------
// 4. Bootstrap filter correctness

bool criterion_bootstrap_filter(Check& check) {
  const auto train = generate_synthetic_records(300, 41);
  SyntheticJudgeLM judge({17, 1, 0.6});  // degraded teacher: some visits fail
  TeleprompterConfig config;
  config.seed = 23;
  const CompiledProgram base = make_base_program(faithfulness_signature(), "bootstrap");
  const BootstrapResult result = bootstrap_demos(base, train, judge, kParams, config);

  check.expect(result.bootstrapped.size() <= 8,
               "bootstrapped=" + std::to_string(result.bootstrapped.size()));
  check.expect(result.labeled.size() <= 16, "labeled=" + std::to_string(result.labeled.size()));
  check.expect(!result.bootstrapped.empty(), "no bootstrapped demos at all");

  std::map<std::string, const Record*> by_id;
  for (const auto& r : train) by_id[r.id] = &r;
  for (std::size_t i = 0; i < result.bootstrapped.size(); ++i) {
    const Record& source = *by_id.at(result.bootstrapped_ids[i]);
    const Label label = parse_gold_label(result.bootstrapped[i].outputs.at("SCORE"));
    check.expect(exact_match(label, source.label) == 1,
                 "demo " + result.bootstrapped_ids[i] + " does not replay to 1");
  }
  return check.ok;
}

// --------------------------------------------------------------------------
// 5. KNN exactness

bool criterion_knn_exactness(Check& check) {
  std::mt19937_64 rng(4242);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random_vector = [&]() {
    EmbeddingVector v;
    v.values.reserve(256);
    for (int d = 0; d < 256; ++d) v.values.push_back(normal(rng));
    return v;
  };

  ExampleIndex index;
  std::vector<std::string> ids;
  std::vector<EmbeddingVector> vectors;
  for (int i = 0; i < 100; ++i) {
    ids.push_back("v" + std::to_string(i));
    vectors.push_back(random_vector());
    index.add(ids.back(), vectors.back());
  }

  for (int q = 0; q < 100; ++q) {
    const EmbeddingVector query = random_vector();
    std::vector<std::size_t> order(ids.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> sims;
    for (const auto& v : vectors) sims.push_back(cosine_similarity(query, v));
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sims[a] > sims[b]; });
    std::vector<std::string> brute;
    for (int i = 0; i < 8; ++i) brute.push_back(ids[order[i]]);
    if (index.knn_query(query, 8) != brute) {
      check.expect(false, "mismatch on query " + std::to_string(q));
      return false;
    }
  }
  return check.ok;
}

// --------------------------------------------------------------------------
// 6. TPE efficacy

bool criterion_tpe_efficacy(Check& check) {
  const SearchSpace space{{"i", {"0", "1", "2", "3"}}, {"j", {"0", "1", "2", "3"}}};
  const auto objective = [](const std::map<std::string, std::string>& a) {
    const int i = std::stoi(a.at("i"));
    const int j = std::stoi(a.at("j"));
    return 1.0 - 0.15 * (std::abs(i - 2) + std::abs(j - 1));
  };

  int hits = 0;
  double tpe_mean = 0;
  double random_mean = 0;
  const int n_seeds = 20;
  for (int seed = 0; seed < n_seeds; ++seed) {
    std::vector<TrialRecord> history;
    double best = -1;
    for (int t = 0; t < 15; ++t) {
      const auto a =
          tpe_suggest(history, space, static_cast<std::uint64_t>(seed) * 1000 + t);
      const double score = objective(a);
      history.push_back({a, score, EvalKind::full});
      best = std::max(best, score);
    }
    if (best == 1.0) ++hits;
    tpe_mean += best / n_seeds;

    double random_best = -1;
    for (int t = 0; t < 15; ++t)
      random_best = std::max(
          random_best, objective(uniform_suggest(space, static_cast<std::uint64_t>(seed) * 7777 + t)));
    random_mean += random_best / n_seeds;
  }
  check.expect(hits >= 18, "optimum found in only " + std::to_string(hits) + "/20 seeds");
  check.expect(tpe_mean >= random_mean, "tpe mean " + fmt(tpe_mean) + " < random mean " +
                                            fmt(random_mean));
  check.detail << "hits=" << hits << "/20 tpe_mean=" << fmt(tpe_mean)
               << " random_mean=" << fmt(random_mean);
  return check.ok;
}

// --------------------------------------------------------------------------
// 7. COPRO monotonicity + budget

bool criterion_copro(Check& check) {
  MockLM lm(R"({"REASONING":[],"SCORE":"FAIL"})");
  // Round 1 proposals from the baseline instruction; later rounds propose
  // from the round-1 winner and peak at a tie, which must not be adopted.
  for (int k = 1; k <= 5; ++k) {
    lm.add_rule({"Variation " + std::to_string(k),
                 "ACC_R1P" + std::to_string(k) + " instruction.", 100, false});
    lm.add_rule({"ACC_R1P4[\\s\\S]*Variation " + std::to_string(k),
                 "ACC_R2P" + std::to_string(k) + " instruction.", 110, true});
  }
  auto add_scores = [&](const std::string& marker, int pass_buckets) {
    for (int b = 0; b < pass_buckets; ++b)
      lm.add_rule({marker + "[\\s\\S]*bucket" + std::to_string(b),
                   R"({"REASONING":[],"SCORE":"PASS"})", 10, true});
  };
  add_scores("Given the following DOCUMENT", 5);  // baseline 0.5
  add_scores("ACC_R1P1", 4);
  add_scores("ACC_R1P2", 6);
  add_scores("ACC_R1P3", 3);
  add_scores("ACC_R1P4", 8);  // round-1 winner 0.8
  add_scores("ACC_R1P5", 5);
  add_scores("ACC_R2P1", 7);
  add_scores("ACC_R2P2", 8);  // tie with the incumbent: keep incumbent
  add_scores("ACC_R2P3", 2);
  add_scores("ACC_R2P4", 6);
  add_scores("ACC_R2P5", 1);

  std::vector<Record> train;
  for (int i = 0; i < 10; ++i) {
    Record r;
    r.id = "b" + std::to_string(i);
    r.context = "acceptance context";
    r.answer = "words bucket" + std::to_string(i) + " tail";
    r.label = Label::pass;
    r.source = "copro";
    train.push_back(r);
  }

  TeleprompterConfig config;
  config.seed = 1;
  const CompiledProgram base = make_base_program(faithfulness_signature(), "copro");
  const CompiledProgram program = compile_copro(base, train, {}, lm, kParams, config);

  check.expect(program.signature.instruction == "ACC_R1P4 instruction.",
               "final instruction is '" + program.signature.instruction + "'");
  check.expect(program.provenance.trials.size() <= 15,
               "proposal evaluations=" + std::to_string(program.provenance.trials.size()));

  // Incumbent trajectory: per-round best must never drop below the running max.
  std::map<int, double> round_best;
  for (const auto& t : program.provenance.trials) {
    const int round = std::stoi(t.assignment.at("round"));
    round_best[round] = std::max(round_best.count(round) ? round_best[round] : -1.0, t.score);
  }
  double incumbent = 0.5;
  for (const auto& [round, best] : round_best) {
    const double next = std::max(incumbent, best);
    check.expect(next >= incumbent, "incumbent dropped in round " + std::to_string(round));
    incumbent = next;
  }
  check.expect(program.provenance.train_score.has_value() &&
                   std::abs(*program.provenance.train_score - 0.8) < 1e-12,
               "final train score");
  check.detail << "proposal_evals=" << program.provenance.trials.size()
               << " final_score=" << fmt(*program.provenance.train_score);
  return check.ok;
}

// --------------------------------------------------------------------------
// 8. MIPRO selection

bool criterion_mipro_selection(Check& check) {
  // 3x3 instruction x demo-set grid; cell scores are gated by marker rules
  // with a gradient toward the uniquely optimal cell (2,1).
  MockLM lm(R"({"REASONING":[],"SCORE":"FAIL"})");
  const std::vector<std::vector<std::string>> unit_ranges{
      // regex suffix matching the first k of 25 unit ids
      {"unit(0[0-7])\\b", "8"},          // 0.32
      {"unit(0[0-9]|10)\\b", "11"},      // 0.44
      {"unit(0[0-9]|1[0-2])\\b", "13"},  // 0.52
      {"unit(0[0-9]|1[0-5])\\b", "16"},  // 0.64
      {"unit(0[0-9]|1[0-9]|2[0-2])\\b", "23"},  // 0.92
  };
  const int cell_range[3][3] = {{0, 2, 0},   // I0: 0.32 0.52 0.32
                                {1, 3, 1},   // I1: 0.44 0.64 0.44
                                {2, 4, 2}};  // I2: 0.52 0.92 0.52
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      lm.add_rule({"GRID_I" + std::to_string(i) + "[\\s\\S]*GRID_DS" + std::to_string(j) +
                       "[\\s\\S]*" + unit_ranges[cell_range[i][j]][0],
                   R"({"REASONING":[],"SCORE":"PASS"})", 10, true});
    }
  }

  MiproCandidates candidates;
  for (int i = 0; i < 3; ++i)
    candidates.instructions.push_back("GRID_I" + std::to_string(i) +
                                      " judge the answer against the document.");
  for (int j = 0; j < 3; ++j) {
    Demo demo;
    demo.inputs = {{"DOCUMENT", "GRID_DS" + std::to_string(j) + " sample document"},
                   {"ANSWER", "sample answer"}};
    demo.outputs = {{"REASONING", "[]"}, {"SCORE", "PASS"}};
    candidates.demo_sets.push_back({demo});
  }

  std::vector<Record> valset;
  for (int i = 0; i < 25; ++i) {
    char unit[8];
    std::snprintf(unit, sizeof(unit), "unit%02d", i);
    Record r;
    r.id = unit;
    r.context = "value probe document";
    r.answer = std::string(unit) + " probe answer";
    r.label = Label::pass;
    r.source = "grid";
    valset.push_back(r);
  }

  const CompiledProgram base = make_base_program(faithfulness_signature(), "mipro");

  // Exhaustive oracle over the nine cells (deterministic mock: compute once).
  int oracle_i = -1;
  int oracle_j = -1;
  double oracle_score = -1;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      CompiledProgram cell = base;
      cell.signature.instruction = candidates.instructions[i];
      cell.demos = candidates.demo_sets[j];
      const double score = evaluate(cell, valset, lm, kParams);
      if (score > oracle_score) {
        oracle_score = score;
        oracle_i = i;
        oracle_j = j;
      }
    }
  }
  check.expect(oracle_i == 2 && oracle_j == 1, "oracle argmax is not (2,1)");
  check.expect(std::abs(oracle_score - 0.92) < 1e-12, "oracle score " + fmt(oracle_score));

  int matches = 0;
  const int n_seeds = 20;
  for (int seed = 0; seed < n_seeds; ++seed) {
    TeleprompterConfig config;
    config.seed = static_cast<std::uint64_t>(seed);
    config.num_trials = 15;
    config.minibatch_size = 25;
    config.minibatch_full_eval_steps = 10;
    const CompiledProgram program =
        mipro_search(base, candidates, valset, lm, kParams, config);

    std::size_t minibatch = 0;
    std::size_t full = 0;
    for (const auto& t : program.provenance.trials)
      (t.eval_kind == EvalKind::minibatch ? minibatch : full) += 1;
    check.expect(minibatch == 15, "seed " + std::to_string(seed) + ": minibatch trials " +
                                      std::to_string(minibatch));
    check.expect(full == 2,
                 "seed " + std::to_string(seed) + ": full evals " + std::to_string(full));

    const bool picked_oracle =
        program.signature.instruction == candidates.instructions[oracle_i] &&
        !program.demos.empty() &&
        program.demos.front().inputs.at("DOCUMENT") ==
            candidates.demo_sets[oracle_j].front().inputs.at("DOCUMENT");
    if (picked_oracle) ++matches;
  }
  check.expect(matches >= 18, "matched exhaustive argmax in only " + std::to_string(matches) +
                                  "/20 seeds");
  check.detail << "argmax_matches=" << matches << "/20";
  return check.ok;
}

// --------------------------------------------------------------------------
// 9. End-to-end improvement

bool criterion_end_to_end(Check& check) {
  const auto records = generate_synthetic_records(1000, 7);
  const std::vector<Record> train(records.begin(), records.begin() + 600);
  const std::vector<Record> val(records.begin() + 600, records.begin() + 800);
  const std::vector<Record> test(records.begin() + 800, records.end());

  SyntheticJudgeLM judge({31, 1, 0.6});
  const CompiledProgram base = make_base_program(faithfulness_signature(), "baseline");

  const double baseline_acc = evaluate(base, test, judge, kParams, 2);
  check.expect(baseline_acc >= 0.50 && baseline_acc <= 0.70,
               "baseline accuracy " + fmt(baseline_acc) + " outside [0.50, 0.70]");

  TeleprompterConfig config;
  config.seed = 5;
  const CompiledProgram bootstrap =
      compile_bootstrap_fewshot(base, train, judge, kParams, config);
  const double bootstrap_acc = evaluate(bootstrap, test, judge, kParams, 2);
  check.expect(bootstrap_acc - baseline_acc >= 0.20,
               "bootstrap " + fmt(bootstrap_acc) + " does not improve by 20 points over " +
                   fmt(baseline_acc));

  const double bootstrap_val = evaluate(bootstrap, val, judge, kParams, 2);

  const CompiledProgram rs = compile_random_search(base, train, val, judge, kParams, config);
  check.expect(rs.provenance.validation_score.has_value() &&
                   *rs.provenance.validation_score >= bootstrap_val,
               "random-search validation below plain bootstrap");

  const CompiledProgram mipro = compile_mipro(base, train, val, judge, kParams, config);
  check.expect(mipro.provenance.validation_score.has_value() &&
                   *mipro.provenance.validation_score >= bootstrap_val,
               "mipro validation below plain bootstrap");

  check.detail << "baseline=" << fmt(baseline_acc) << " bootstrap=" << fmt(bootstrap_acc)
               << " rs_val=" << fmt(*rs.provenance.validation_score)
               << " mipro_val=" << fmt(*mipro.provenance.validation_score);
  return check.ok;
}

// --------------------------------------------------------------------------
// 10. Report fixtures

bool criterion_report_fixtures(Check& check) {
  const auto rows = load_external_scores(fs::path(TEST_DATA_DIR) / "published_scores.json");
  const ComparisonTables tables = render_comparison(rows);
  const std::string accuracy_golden =
      read_file(fs::path(TEST_DATA_DIR) / "table_accuracy.golden.md");
  const std::string f1_golden = read_file(fs::path(TEST_DATA_DIR) / "table_f1.golden.md");
  const std::string pubmed_golden =
      read_file(fs::path(TEST_DATA_DIR) / "table_pubmedqa.golden.md");

  check.expect(tables.accuracy_markdown == accuracy_golden, "accuracy table differs from golden");
  check.expect(tables.f1_markdown == f1_golden, "f1 table differs from golden");
  check.expect(tables.per_source_markdown.count("pubmedqa") == 1 &&
                   tables.per_source_markdown.at("pubmedqa") == pubmed_golden,
               "pubmedqa table differs from golden");
  check.expect(tables.accuracy_markdown.find("**85.87**") != std::string::npos,
               "85.87 not bolded");
  check.expect(tables.f1_markdown.find("**0.8115**") != std::string::npos, "0.8115 not bolded");
  check.expect(tables.f1_markdown.find("**0.8248**") != std::string::npos, "0.8248 not bolded");
  return check.ok;
}

// --------------------------------------------------------------------------
// 11. Determinism

bool criterion_determinism(Check& check) {
  const fs::path dir = scratch_dir("determinism");
  write_synthetic_dataset(dir / "data.jsonl", 240, 3);

  auto run = [&](const std::string& run_name) {
    const std::string config_json = R"({
      "dataset": {"path": "data.jsonl"},
      "split": {"fractions": [0.5, 0.25, 0.25], "seed": 21},
      "lm": {"backend": "synthetic", "model_id": "judge"},
      "teleprompter": {"seed": 21, "num_candidate_programs": 2,
                       "num_trials": 6, "minibatch_size": 20},
      "run_dir": ")" + run_name + R"(",
      "concurrency": 2
    })";
    Harness harness(ExperimentConfig::from_json_text(config_json, dir));
    harness.prepare();
    harness.baseline();
    harness.optimize("bootstrap");
    harness.optimize("random-search");
    harness.evaluate_program(dir / run_name / "programs" / "random-search.json", "test");
  };
  run("run_a");
  run("run_b");

  const std::vector<std::string> artifacts{
      "splits/train.jsonl",
      "splits/validation.jsonl",
      "splits/test.jsonl",
      "programs/bootstrap.json",
      "programs/random-search.json",
      "reports/baseline.json",
      "reports/random-search-test.json",
  };
  for (const auto& artifact : artifacts) {
    const std::string a = read_file(dir / "run_a" / artifact);
    const std::string b = read_file(dir / "run_b" / artifact);
    check.expect(a == b, artifact + " differs between identical runs");
  }
  return check.ok;
}

// --------------------------------------------------------------------------
// 12. Prompt golden

bool criterion_prompt_golden(Check& check) {
  const Signature sig = faithfulness_signature();
  const std::string rendered =
      render_prompt(sig, {}, {{"DOCUMENT", "{context}"}, {"ANSWER", "{answer}"}});
  const std::string golden = read_file(fs::path(TEST_DATA_DIR) / "baseline_prompt.golden");
  check.expect(rendered == golden, "zero-demo render differs from the template fixture");
  return check.ok;
}

struct Criterion {
  int id;
  const char* name;
  std::function<bool(Check&)> run;
  double budget_s;  // 0 = no stated budget
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "metric oracle equivalence", criterion_metric_oracle, 5.0},
      {2, "split fidelity 750/375/375", criterion_split_fidelity, 1.0},
      {3, "cleaning rule (<=3 tokens dropped)", criterion_cleaning, 0},
      {4, "bootstrap filter correctness", criterion_bootstrap_filter, 0},
      {5, "knn exactness vs brute force", criterion_knn_exactness, 0},
      {6, "tpe efficacy on 4x4 objective", criterion_tpe_efficacy, 10.0},
      {7, "copro monotonicity and budget", criterion_copro, 0},
      {8, "mipro selection matches exhaustive argmax", criterion_mipro_selection, 0},
      {9, "end-to-end improvement, offline", criterion_end_to_end, 60.0},
      {10, "report fixtures byte-identical", criterion_report_fixtures, 0},
      {11, "pipeline determinism", criterion_determinism, 0},
      {12, "prompt golden byte-identical", criterion_prompt_golden, 0},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    Check check;
    bool ok = false;
    const auto start = std::chrono::steady_clock::now();
    try {
      ok = criterion.run(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
      ok = false;
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (criterion.budget_s > 0 && elapsed > criterion.budget_s) {
      ok = false;
      check.expect(false, "runtime " + std::to_string(elapsed) + "s over budget");
    }
    std::printf("[%s] %2d. %s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", criterion.id, criterion.name,
                elapsed, check.detail.str().empty() ? "" : " -- ",
                check.detail.str().c_str());
    if (!ok) ++failures;
  }
  if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
