#include "promptopt/harness.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <map>
#include <sstream>

#include <json.hpp>

#include "promptopt/error.hpp"
#include "promptopt/metrics.hpp"
#include "promptopt/util.hpp"

namespace promptopt {

using nlohmann::json;

const std::vector<std::string>& optimizer_names() {
  static const std::vector<std::string> names{"baseline",      "baseline-cot", "bootstrap",
                                              "random-search", "tpe",          "knn",
                                              "copro",         "mipro",        "ensemble"};
  return names;
}

// ---------------------------------------------------------------------------
// Config

std::filesystem::path ExperimentConfig::resolve(const std::filesystem::path& p) const {
  if (p.empty() || p.is_absolute()) return p;
  return base_dir / p;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  return from_json_text(read_file(path), path.has_parent_path() ? path.parent_path() : ".");
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text,
                                                  const std::filesystem::path& base_dir) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw Error::parse("malformed config JSON");

  ExperimentConfig c;
  c.base_dir = base_dir;

  if (doc.contains("dataset")) {
    const auto& d = doc["dataset"];
    c.dataset_path = d.value("path", "");
    if (d.contains("sample_size") && !d["sample_size"].is_null())
      c.sample_size = d["sample_size"].get<std::size_t>();
  }

  if (doc.contains("split")) {
    const auto& s = doc["split"];
    if (s.contains("fractions")) {
      const auto f = s["fractions"].get<std::vector<double>>();
      if (f.size() != 3) throw Error::parse("split.fractions must have three entries");
      c.split.train_fraction = f[0];
      c.split.validation_fraction = f[1];
      c.split.test_fraction = f[2];
    }
    if (s.contains("strata_keys"))
      c.split.strata_keys = s["strata_keys"].get<std::vector<std::string>>();
    c.split.seed = s.value("seed", c.split.seed);
  }

  if (doc.contains("lm")) {
    const auto& l = doc["lm"];
    c.backend = l.value("backend", c.backend);
    c.lm_params.model_id = l.value("model_id", "judge");
    c.lm_params.temperature = l.value("temperature", 0.0);
    c.lm_params.top_p = l.value("top_p", 1.0);
    if (l.contains("max_tokens") && !l["max_tokens"].is_null())
      c.lm_params.max_tokens = l["max_tokens"].get<int>();
    if (l.contains("http")) {
      const auto& h = l["http"];
      c.http.base_url = h.value("base_url", c.http.base_url);
      c.http.path = h.value("path", c.http.path);
      c.http.api_key_env = h.value("api_key_env", c.http.api_key_env);
      c.http.max_retries = h.value("max_retries", c.http.max_retries);
      c.http.backoff_base_ms = h.value("backoff_base_ms", c.http.backoff_base_ms);
      c.http.timeout_s = h.value("timeout_s", c.http.timeout_s);
    }
    if (l.contains("mock")) {
      c.mock_rules_path = l["mock"].value("rules_path", "");
      c.mock_default_response = l["mock"].value("default_response", "");
    }
    if (l.contains("synthetic")) {
      const auto& s = l["synthetic"];
      c.synthetic.min_demos = s.value("min_demos", c.synthetic.min_demos);
      c.synthetic.p_base = s.value("p_base", c.synthetic.p_base);
      if (s.contains("seed")) c.synthetic.seed = s["seed"].get<std::uint64_t>();
    }
  } else {
    c.lm_params.model_id = "judge";
  }

  if (doc.contains("embedder")) {
    const auto& e = doc["embedder"];
    c.embedder_kind = e.value("kind", c.embedder_kind);
    c.embedder_dim = e.value("dim", c.embedder_dim);
    c.remote_embedder.base_url = e.value("base_url", "");
    c.remote_embedder.path = e.value("path", c.remote_embedder.path);
    c.remote_embedder.api_key_env = e.value("api_key_env", "");
    c.remote_embedder.model_id = e.value("model_id", "");
    c.remote_embedder.dim = c.embedder_dim;
  }

  if (doc.contains("teleprompter")) {
    const auto& t = doc["teleprompter"];
    TeleprompterConfig& tc = c.teleprompter;
    tc.max_bootstrapped_demos = t.value("max_bootstrapped_demos", tc.max_bootstrapped_demos);
    tc.max_labeled_demos = t.value("max_labeled_demos", tc.max_labeled_demos);
    tc.num_candidate_programs = t.value("num_candidate_programs", tc.num_candidate_programs);
    tc.k = t.value("k", tc.k);
    tc.breadth = t.value("breadth", tc.breadth);
    tc.depth = t.value("depth", tc.depth);
    tc.init_temperature = t.value("init_temperature", tc.init_temperature);
    tc.num_candidates = t.value("num_candidates", tc.num_candidates);
    tc.num_trials = t.value("num_trials", tc.num_trials);
    tc.minibatch_size = t.value("minibatch_size", tc.minibatch_size);
    tc.minibatch_full_eval_steps =
        t.value("minibatch_full_eval_steps", tc.minibatch_full_eval_steps);
    tc.seed = t.value("seed", tc.seed);
    tc.stratify_demos_by_source = t.value("stratify_demos_by_source", tc.stratify_demos_by_source);
  }

  if (doc.contains("optimizers"))
    c.optimizers = doc["optimizers"].get<std::vector<std::string>>();
  c.run_dir = doc.value("run_dir", std::string("run"));
  c.concurrency = doc.value("concurrency", c.concurrency);
  c.include_question = doc.value("include_question", c.include_question);
  if (doc.contains("external_scores") && !doc["external_scores"].is_null())
    c.external_scores = std::filesystem::path(doc["external_scores"].get<std::string>());
  if (doc.contains("ensemble_members"))
    for (const auto& m : doc["ensemble_members"])
      c.ensemble_members.emplace_back(m.get<std::string>());

  // The synthetic judge follows the teleprompter seed unless pinned.
  if (!doc.contains("lm") || !doc["lm"].contains("synthetic") ||
      !doc["lm"]["synthetic"].contains("seed")) {
    c.synthetic.seed = c.teleprompter.seed;
  }

  for (const auto& name : c.optimizers) {
    const auto& valid = optimizer_names();
    if (std::find(valid.begin(), valid.end(), name) == valid.end())
      throw Error::invalid_argument("unknown optimizer in config: " + name);
  }
  c.split.validate();
  c.teleprompter.validate();
  if (c.backend != "http" && c.backend != "mock" && c.backend != "synthetic")
    throw Error::invalid_argument("backend must be http, mock or synthetic, got: " + c.backend);
  return c;
}

std::string ExperimentConfig::to_json() const {
  json lm{{"backend", backend},
          {"model_id", lm_params.model_id},
          {"temperature", lm_params.temperature},
          {"top_p", lm_params.top_p},
          {"max_tokens", lm_params.max_tokens ? json(*lm_params.max_tokens) : json(nullptr)},
          {"http",
           {{"base_url", http.base_url},
            {"path", http.path},
            {"api_key_env", http.api_key_env},
            {"max_retries", http.max_retries},
            {"backoff_base_ms", http.backoff_base_ms},
            {"timeout_s", http.timeout_s}}},
          {"mock",
           {{"rules_path", mock_rules_path.string()},
            {"default_response", mock_default_response}}},
          {"synthetic",
           {{"seed", synthetic.seed},
            {"min_demos", synthetic.min_demos},
            {"p_base", synthetic.p_base}}}};

  json doc{
      {"dataset",
       {{"path", dataset_path.string()},
        {"sample_size", sample_size ? json(*sample_size) : json(nullptr)}}},
      {"split",
       {{"fractions",
         {split.train_fraction, split.validation_fraction, split.test_fraction}},
        {"strata_keys", split.strata_keys},
        {"seed", split.seed}}},
      {"lm", lm},
      {"embedder", {{"kind", embedder_kind}, {"dim", embedder_dim}}},
      {"teleprompter",
       {{"max_bootstrapped_demos", teleprompter.max_bootstrapped_demos},
        {"max_labeled_demos", teleprompter.max_labeled_demos},
        {"num_candidate_programs", teleprompter.num_candidate_programs},
        {"k", teleprompter.k},
        {"breadth", teleprompter.breadth},
        {"depth", teleprompter.depth},
        {"init_temperature", teleprompter.init_temperature},
        {"num_candidates", teleprompter.num_candidates},
        {"num_trials", teleprompter.num_trials},
        {"minibatch_size", teleprompter.minibatch_size},
        {"minibatch_full_eval_steps", teleprompter.minibatch_full_eval_steps},
        {"seed", teleprompter.seed},
        {"stratify_demos_by_source", teleprompter.stratify_demos_by_source}}},
      {"optimizers", optimizers},
      {"run_dir", run_dir.string()},
      {"concurrency", concurrency},
      {"include_question", include_question},
      {"external_scores",
       external_scores ? json(external_scores->string()) : json(nullptr)}};
  if (!ensemble_members.empty()) {
    json members = json::array();
    for (const auto& m : ensemble_members) members.push_back(m.string());
    doc["ensemble_members"] = members;
  }
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Harness

namespace {

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

}  // namespace

Harness::Harness(ExperimentConfig config) : config_(std::move(config)) {}

Harness::~Harness() = default;

LM& Harness::lm() {
  if (!lm_) {
    if (config_.backend == "http") {
      lm_ = std::make_unique<HttpLM>(config_.http,
                                     config_.resolve(config_.run_dir) / "cache" /
                                         "completions.jsonl");
    } else if (config_.backend == "mock") {
      auto mock = std::make_unique<MockLM>(config_.mock_default_response);
      if (!config_.mock_rules_path.empty())
        mock->load_rules_file(config_.resolve(config_.mock_rules_path));
      lm_ = std::move(mock);
    } else {
      lm_ = std::make_unique<SyntheticJudgeLM>(config_.synthetic);
    }
  }
  return *lm_;
}

std::filesystem::path Harness::split_path(const std::string& split_name) const {
  if (split_name != "train" && split_name != "validation" && split_name != "test")
    throw Error::invalid_argument("split must be train, validation or test, got: " + split_name);
  return config_.resolve(config_.run_dir) / "splits" / (split_name + ".jsonl");
}

std::filesystem::path Harness::report_path(const std::string& name) const {
  return config_.resolve(config_.run_dir) / "reports" / (name + ".json");
}

std::vector<Record> Harness::load_split(const std::string& split_name) const {
  const auto path = split_path(split_name);
  if (!std::filesystem::exists(path))
    throw Error::state("split file missing (run `prepare` first): " + path.string());
  return read_records(path);
}

CompiledProgram Harness::base_program(const std::string& optimizer_name) const {
  return make_base_program(faithfulness_signature(config_.include_question), optimizer_name);
}

void Harness::record_phase(const std::string& phase,
                           const std::map<std::string, std::string>& artifacts) {
  const auto run_dir = config_.resolve(config_.run_dir);
  const auto manifest_path = run_dir / "manifest.json";

  json manifest;
  if (std::filesystem::exists(manifest_path)) {
    manifest = json::parse(read_file(manifest_path), nullptr, false);
    if (manifest.is_discarded()) manifest = json::object();
  } else {
    manifest = json::object();
  }

  manifest["version"] = 1;
  manifest["tool_version"] = kToolVersion;
  manifest["config"] = json::parse(config_.to_json());

  json phase_entry{{"completed_at", iso_timestamp()}, {"artifacts", artifacts}};
  manifest["phases"][phase] = phase_entry;

  if (auto* http = dynamic_cast<HttpLM*>(lm_.get())) {
    manifest["cache"] = {{"hits", http->cache().hits()},
                         {"misses", http->cache().misses()},
                         {"entries", http->cache().size()},
                         {"path", http->cache().path().string()}};
  }

  write_file_atomic(manifest_path, manifest.dump(2) + "\n");
}

void Harness::prepare() {
  const auto dataset_path = config_.resolve(config_.dataset_path);
  if (!std::filesystem::exists(dataset_path))
    throw Error::io("dataset file not found: " + dataset_path.string());

  IngestResult ingested = ingest(dataset_path);
  CleanResult cleaned = clean(ingested.records);
  std::vector<Record> records = std::move(cleaned.kept);
  if (config_.sample_size)
    records = proportional_subsample(records, *config_.sample_size, config_.split.seed,
                                     config_.split.strata_keys);

  SplitResult split = stratified_split(records, config_.split);

  const auto run_dir = config_.resolve(config_.run_dir);
  const auto splits_dir = run_dir / "splits";
  write_records(splits_dir / "train.jsonl", split.train);
  write_records(splits_dir / "validation.jsonl", split.validation);
  write_records(splits_dir / "test.jsonl", split.test);

  json strata = json::object();
  for (const auto& [key, counts] : split.stratum_counts)
    strata[key] = {{"train", counts[0]}, {"validation", counts[1]}, {"test", counts[2]}};
  json issues = json::array();
  for (const auto& issue : ingested.issues)
    issues.push_back({{"line", issue.line_number}, {"message", issue.message}});
  json split_manifest{
      {"seed", config_.split.seed},
      {"fractions",
       {config_.split.train_fraction, config_.split.validation_fraction,
        config_.split.test_fraction}},
      {"strata_keys", config_.split.strata_keys},
      {"counts",
       {{"train", split.train.size()},
        {"validation", split.validation.size()},
        {"test", split.test.size()}}},
      {"per_stratum", strata},
      {"dropped_by_cleaning", cleaned.dropped},
      {"ingest_issues", issues},
      {"warnings", split.warnings}};
  write_file_atomic(splits_dir / "split_manifest.json", split_manifest.dump(2) + "\n");

  record_phase("prepare", {{"train", "splits/train.jsonl"},
                           {"validation", "splits/validation.jsonl"},
                           {"test", "splits/test.jsonl"},
                           {"split_manifest", "splits/split_manifest.json"}});
}

EvalReport Harness::write_report(const std::string& name, const CompiledProgram& program,
                                 const std::vector<Record>& records,
                                 std::map<std::string, std::string>& artifacts) {
  std::vector<Prediction> predictions;
  try {
    predictions = run_batch(program, records, lm(), config_.lm_params, config_.concurrency);
  } catch (const Error& e) {
    // Completions already fetched stayed in the on-disk cache; a rerun
    // resumes from there.
    throw Error(e.code(), std::string(e.what()) +
                              " [evaluation '" + name +
                              "' aborted; completions cached so far are preserved]");
  }
  std::vector<ScoredSample> samples;
  samples.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    samples.push_back({predictions[i].label, records[i].label, records[i].source});

  EvalReport report = build_report(samples, name);
  const auto run_dir = config_.resolve(config_.run_dir);
  write_file_atomic(run_dir / "reports" / (name + ".json"), report.to_json());
  write_file_atomic(run_dir / "reports" / (name + ".md"), render_report_markdown(report));
  artifacts["report_json"] = "reports/" + name + ".json";
  artifacts["report_markdown"] = "reports/" + name + ".md";
  return report;
}

EvalReport Harness::baseline() {
  const auto test = load_split("test");
  std::map<std::string, std::string> artifacts;
  EvalReport report = write_report("baseline", base_program("baseline"), test, artifacts);
  record_phase("baseline", artifacts);
  return report;
}

std::filesystem::path Harness::optimize(const std::string& optimizer,
                                        const std::vector<std::filesystem::path>& members) {
  const auto& valid = optimizer_names();
  if (std::find(valid.begin(), valid.end(), optimizer) == valid.end()) {
    std::string names;
    for (const auto& n : valid) names += (names.empty() ? "" : ", ") + n;
    throw Error::invalid_argument("unknown optimizer '" + optimizer + "'; valid names: " + names);
  }

  const auto run_dir = config_.resolve(config_.run_dir);
  const auto programs_dir = run_dir / "programs";
  const auto program_path = programs_dir / (optimizer + ".json");
  const TeleprompterConfig& tc = config_.teleprompter;

  CompiledProgram program;
  if (optimizer == "baseline" || optimizer == "baseline-cot") {
    program = base_program(optimizer);
    program.provenance.seed = tc.seed;
    program.provenance.config = tc;
  } else if (optimizer == "ensemble") {
    std::vector<std::filesystem::path> member_paths = members;
    if (member_paths.empty()) {
      for (const auto& m : config_.ensemble_members) member_paths.push_back(config_.resolve(m));
    }
    if (member_paths.empty())
      throw Error::invalid_argument(
          "ensemble needs member program paths (--member or config ensemble_members)");
    std::vector<CompiledProgram> member_programs;
    for (const auto& path : member_paths) member_programs.push_back(load_program(path));
    program = ensemble_majority(member_programs);
  } else {
    const auto train = load_split("train");
    if (optimizer == "bootstrap") {
      program = compile_bootstrap_fewshot(base_program(optimizer), train, lm(),
                                          config_.lm_params, tc);
    } else if (optimizer == "knn") {
      auto embedder = std::make_shared<LocalEmbedder>(config_.embedder_dim);
      auto index = std::make_shared<ExampleIndex>(ExampleIndex::build(train, *embedder));
      std::filesystem::create_directories(programs_dir);
      index->save(programs_dir / "knn.index.json");
      write_records(programs_dir / "knn.examples.jsonl", train);
      program = compile_knn_fewshot(base_program(optimizer), train, lm(), config_.lm_params, tc,
                                    index, embedder);
      program.knn_policy->index_path = "knn.index.json";       // relative to the program file
      program.knn_policy->records_path = "knn.examples.jsonl";
    } else {
      const auto validation = load_split("validation");
      if (optimizer == "random-search") {
        program = compile_random_search(base_program(optimizer), train, validation, lm(),
                                        config_.lm_params, tc);
      } else if (optimizer == "tpe") {
        program = compile_bootstrap_tpe(base_program(optimizer), train, validation, lm(),
                                        config_.lm_params, tc);
      } else if (optimizer == "copro") {
        program = compile_copro(base_program(optimizer), train, validation, lm(),
                                config_.lm_params, tc);
      } else {  // mipro
        program = compile_mipro(base_program(optimizer), train, validation, lm(),
                                config_.lm_params, tc);
      }
    }
  }

  save_program(program, program_path);

  std::string trial_log;
  for (const auto& trial : program.provenance.trials) {
    json t{{"assignment", trial.assignment},
           {"score", trial.score},
           {"eval_kind", trial.eval_kind == EvalKind::full ? "full" : "minibatch"}};
    trial_log += t.dump() + "\n";
  }
  write_file_atomic(run_dir / "trials" / (optimizer + ".jsonl"), trial_log);

  record_phase("optimize:" + optimizer,
               {{"program", "programs/" + optimizer + ".json"},
                {"trials", "trials/" + optimizer + ".jsonl"}});
  return program_path;
}

EvalReport Harness::evaluate_program(const std::filesystem::path& program_path,
                                     const std::string& split_name) {
  const CompiledProgram program = load_program(program_path);
  const auto records = load_split(split_name);
  if (records.empty()) throw Error::invalid_argument("split '" + split_name + "' is empty");

  const std::string name = program.provenance.optimizer.empty()
                               ? program_path.stem().string()
                               : program.provenance.optimizer;
  std::map<std::string, std::string> artifacts;
  const std::string report_name = name + "-" + split_name;
  EvalReport report = write_report(report_name, program, records, artifacts);
  record_phase("evaluate:" + report_name, artifacts);
  return report;
}

ComparisonTables Harness::compare(const std::vector<std::filesystem::path>& report_paths,
                                  const std::optional<std::filesystem::path>& external_scores) {
  if (report_paths.empty() && !external_scores && !config_.external_scores)
    throw Error::invalid_argument("compare needs at least one report or an external-scores file");

  std::vector<ComparisonRow> rows;
  for (const auto& path : report_paths)
    rows.push_back(row_from_report(EvalReport::from_json(read_file(path))));

  std::optional<std::filesystem::path> external = external_scores;
  if (!external && config_.external_scores)
    external = config_.resolve(*config_.external_scores);
  if (external) {
    for (auto& row : load_external_scores(*external)) rows.push_back(std::move(row));
  }

  ComparisonTables tables = render_comparison(std::move(rows));

  const auto run_dir = config_.resolve(config_.run_dir);
  const auto tables_dir = run_dir / "tables";
  write_file_atomic(tables_dir / "accuracy.md", tables.accuracy_markdown);
  write_file_atomic(tables_dir / "f1.md", tables.f1_markdown);
  write_file_atomic(tables_dir / "accuracy.csv", tables.accuracy_csv);
  write_file_atomic(tables_dir / "f1.csv", tables.f1_csv);
  write_file_atomic(tables_dir / "comparison.md", tables.combined_markdown());
  std::map<std::string, std::string> artifacts{{"accuracy", "tables/accuracy.md"},
                                               {"f1", "tables/f1.md"},
                                               {"comparison", "tables/comparison.md"}};
  for (const auto& [source, table] : tables.per_source_markdown) {
    write_file_atomic(tables_dir / ("per_source_" + source + ".md"), table);
    artifacts["per_source_" + source] = "tables/per_source_" + source + ".md";
  }
  record_phase("compare", artifacts);
  return tables;
}

}  // namespace promptopt
