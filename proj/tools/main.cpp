// promptopt CLI: drives the pipeline phases through the shared-library C API.

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "promptopt.h"

namespace {

struct GlobalOptions {
  std::string config_path = "promptopt.json";
  std::string run_dir;
  std::string backend;
  std::uint64_t seed = 0;
  bool has_seed = false;
};

// RAII for C-API strings.
struct OwnedString {
  char* value = nullptr;
  ~OwnedString() { promptopt_string_free(value); }
  const char* c_str() const { return value == nullptr ? "" : value; }
};

struct OwnedEngine {
  promptopt_engine* engine = nullptr;
  ~OwnedEngine() { promptopt_engine_free(engine); }
};

int fail(const char* context, const promptopt_engine* engine, promptopt_status status) {
  std::fprintf(stderr, "error: %s: %s\n", context,
               engine != nullptr ? promptopt_engine_last_error(engine) : promptopt_last_error());
  return static_cast<int>(status);
}

int make_engine(const GlobalOptions& options, OwnedEngine& owned) {
  promptopt_overrides overrides{};
  overrides.run_dir = options.run_dir.empty() ? nullptr : options.run_dir.c_str();
  overrides.backend = options.backend.empty() ? nullptr : options.backend.c_str();
  overrides.has_seed = options.has_seed ? 1 : 0;
  overrides.seed = options.seed;
  const auto status = promptopt_engine_new(options.config_path.c_str(), &overrides, &owned.engine);
  if (status != PROMPTOPT_OK) return fail("loading config", nullptr, status);
  return 0;
}

std::vector<const char*> c_pointers(const std::vector<std::string>& strings) {
  std::vector<const char*> out;
  out.reserve(strings.size());
  for (const auto& s : strings) out.push_back(s.c_str());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prompt-optimization engine and evaluation harness"};
  app.require_subcommand(1);

  GlobalOptions options;
  app.add_option("--config", options.config_path, "experiment config file")
      ->envname("PROMPTOPT_CONFIG");
  app.add_option("--run-dir", options.run_dir, "override the run directory");
  app.add_option("--backend", options.backend, "override the LM backend (http|mock|synthetic)");
  auto* seed_opt = app.add_option("--seed", options.seed, "override every seed in the config");

  auto* cmd_prepare = app.add_subcommand("prepare", "ingest, clean and split the dataset");

  auto* cmd_baseline =
      app.add_subcommand("baseline", "evaluate the zero-demo baseline prompt on the test split");

  std::string optimizer;
  std::vector<std::string> members;
  auto* cmd_optimize = app.add_subcommand("optimize", "compile an optimized judge program");
  cmd_optimize->add_option("--optimizer", optimizer, "optimizer name")->required();
  cmd_optimize->add_option("--member", members, "ensemble member program path (repeatable)");

  std::string program_path;
  std::string split_name = "test";
  auto* cmd_evaluate = app.add_subcommand("evaluate", "evaluate a saved program on a split");
  cmd_evaluate->add_option("--program", program_path, "program JSON path")->required();
  cmd_evaluate->add_option("--split", split_name, "train|validation|test");

  std::vector<std::string> report_paths;
  std::string external_scores;
  auto* cmd_compare = app.add_subcommand("compare", "render comparison tables from reports");
  cmd_compare->add_option("reports", report_paths, "report JSON paths");
  cmd_compare->add_option("--external", external_scores,
                          "external scores file (CSV or JSON) for extra rows");

  std::string gen_path;
  long long gen_n = 1500;
  std::uint64_t gen_seed = 0;
  auto* cmd_gen = app.add_subcommand(
      "gen-dataset", "write a synthetic faithfulness dataset for desk-scale runs");
  cmd_gen->add_option("--out", gen_path, "output JSONL path")->required();
  cmd_gen->add_option("--n", gen_n, "number of records");
  cmd_gen->add_option("--seed", gen_seed, "generator seed");

  CLI11_PARSE(app, argc, argv);
  options.has_seed = seed_opt->count() > 0;

  if (cmd_gen->parsed()) {
    const auto status = promptopt_generate_dataset(gen_path.c_str(), gen_n, gen_seed);
    if (status != PROMPTOPT_OK) return fail("gen-dataset", nullptr, status);
    std::printf("wrote %lld records to %s\n", gen_n, gen_path.c_str());
    return 0;
  }

  OwnedEngine owned;
  if (int rc = make_engine(options, owned); rc != 0) return rc;
  promptopt_engine* engine = owned.engine;

  if (cmd_prepare->parsed()) {
    const auto status = promptopt_run_prepare(engine);
    if (status != PROMPTOPT_OK) return fail("prepare", engine, status);
    std::printf("splits written\n");
    return 0;
  }

  if (cmd_baseline->parsed()) {
    OwnedString report;
    const auto status = promptopt_run_baseline(engine, &report.value);
    if (status != PROMPTOPT_OK) return fail("baseline", engine, status);
    std::printf("%s", report.c_str());
    return 0;
  }

  if (cmd_optimize->parsed()) {
    OwnedString path;
    const auto member_ptrs = c_pointers(members);
    const auto status = promptopt_run_optimize(engine, optimizer.c_str(), member_ptrs.data(),
                                               member_ptrs.size(), &path.value);
    if (status != PROMPTOPT_OK) return fail("optimize", engine, status);
    std::printf("%s\n", path.c_str());
    return 0;
  }

  if (cmd_evaluate->parsed()) {
    OwnedString report;
    const auto status =
        promptopt_run_evaluate(engine, program_path.c_str(), split_name.c_str(), &report.value);
    if (status != PROMPTOPT_OK) return fail("evaluate", engine, status);
    std::printf("%s", report.c_str());
    return 0;
  }

  if (cmd_compare->parsed()) {
    OwnedString tables;
    const auto report_ptrs = c_pointers(report_paths);
    const auto status = promptopt_run_compare(
        engine, report_ptrs.data(), report_ptrs.size(),
        external_scores.empty() ? nullptr : external_scores.c_str(), &tables.value);
    if (status != PROMPTOPT_OK) return fail("compare", engine, status);
    std::printf("%s", tables.c_str());
    return 0;
  }

  return 0;
}
