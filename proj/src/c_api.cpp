#include "promptopt.h"

#include <cstring>
#include <string>

#include "promptopt/error.hpp"
#include "promptopt/harness.hpp"
#include "promptopt/synth.hpp"

using promptopt::Error;
using promptopt::ErrorCode;

struct promptopt_engine {
  promptopt::Harness harness;
  std::string last_error;

  explicit promptopt_engine(promptopt::ExperimentConfig config)
      : harness(std::move(config)) {}
};

namespace {

thread_local std::string g_last_error;

promptopt_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return PROMPTOPT_ERR_INVALID_ARGUMENT;
    case ErrorCode::io: return PROMPTOPT_ERR_IO;
    case ErrorCode::parse: return PROMPTOPT_ERR_PARSE;
    case ErrorCode::backend: return PROMPTOPT_ERR_BACKEND;
    case ErrorCode::state: return PROMPTOPT_ERR_STATE;
    case ErrorCode::internal: return PROMPTOPT_ERR_INTERNAL;
  }
  return PROMPTOPT_ERR_INTERNAL;
}

// Runs fn, routing exceptions into the error slot + status code.
template <typename Fn>
promptopt_status guarded(std::string& error_slot, Fn&& fn) {
  try {
    fn();
    return PROMPTOPT_OK;
  } catch (const Error& e) {
    error_slot = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    error_slot = e.what();
    return PROMPTOPT_ERR_INTERNAL;
  } catch (...) {
    error_slot = "unknown error";
    return PROMPTOPT_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void apply_overrides(promptopt::ExperimentConfig& config, const promptopt_overrides* overrides) {
  if (overrides == nullptr) return;
  if (overrides->run_dir != nullptr) config.run_dir = overrides->run_dir;
  if (overrides->backend != nullptr) config.backend = overrides->backend;
  if (overrides->has_seed != 0) {
    config.split.seed = overrides->seed;
    config.teleprompter.seed = overrides->seed;
    config.synthetic.seed = overrides->seed;
  }
  if (config.backend != "http" && config.backend != "mock" && config.backend != "synthetic")
    throw Error::invalid_argument("backend must be http, mock or synthetic, got: " +
                                  config.backend);
}

}  // namespace

extern "C" {

const char* promptopt_version(void) { return promptopt::kToolVersion; }

const char* promptopt_last_error(void) { return g_last_error.c_str(); }

const char* promptopt_engine_last_error(const promptopt_engine* engine) {
  return engine == nullptr ? g_last_error.c_str() : engine->last_error.c_str();
}

promptopt_status promptopt_engine_new(const char* config_path,
                                      const promptopt_overrides* overrides,
                                      promptopt_engine** out_engine) {
  if (config_path == nullptr || out_engine == nullptr) {
    g_last_error = "config_path and out_engine must be non-null";
    return PROMPTOPT_ERR_INVALID_ARGUMENT;
  }
  return guarded(g_last_error, [&] {
    auto config = promptopt::ExperimentConfig::load(config_path);
    apply_overrides(config, overrides);
    *out_engine = new promptopt_engine(std::move(config));
  });
}

promptopt_status promptopt_engine_new_from_json(const char* config_json, const char* base_dir,
                                                const promptopt_overrides* overrides,
                                                promptopt_engine** out_engine) {
  if (config_json == nullptr || out_engine == nullptr) {
    g_last_error = "config_json and out_engine must be non-null";
    return PROMPTOPT_ERR_INVALID_ARGUMENT;
  }
  return guarded(g_last_error, [&] {
    auto config = promptopt::ExperimentConfig::from_json_text(
        config_json, base_dir == nullptr ? "." : base_dir);
    apply_overrides(config, overrides);
    *out_engine = new promptopt_engine(std::move(config));
  });
}

void promptopt_engine_free(promptopt_engine* engine) { delete engine; }

promptopt_status promptopt_run_prepare(promptopt_engine* engine) {
  if (engine == nullptr) return PROMPTOPT_ERR_INVALID_ARGUMENT;
  return guarded(engine->last_error, [&] { engine->harness.prepare(); });
}

promptopt_status promptopt_run_baseline(promptopt_engine* engine, char** out_report_json) {
  if (engine == nullptr) return PROMPTOPT_ERR_INVALID_ARGUMENT;
  return guarded(engine->last_error, [&] {
    const auto report = engine->harness.baseline();
    if (out_report_json != nullptr) *out_report_json = dup_string(report.to_json());
  });
}

promptopt_status promptopt_run_optimize(promptopt_engine* engine, const char* optimizer,
                                        const char* const* member_paths, size_t member_count,
                                        char** out_program_path) {
  if (engine == nullptr) return PROMPTOPT_ERR_INVALID_ARGUMENT;
  if (optimizer == nullptr) {
    engine->last_error = "optimizer must be non-null";
    return PROMPTOPT_ERR_INVALID_ARGUMENT;
  }
  return guarded(engine->last_error, [&] {
    std::vector<std::filesystem::path> members;
    for (size_t i = 0; i < member_count; ++i) {
      if (member_paths[i] != nullptr) members.emplace_back(member_paths[i]);
    }
    const auto path = engine->harness.optimize(optimizer, members);
    if (out_program_path != nullptr) *out_program_path = dup_string(path.string());
  });
}

promptopt_status promptopt_run_evaluate(promptopt_engine* engine, const char* program_path,
                                        const char* split_name, char** out_report_json) {
  if (engine == nullptr) return PROMPTOPT_ERR_INVALID_ARGUMENT;
  if (program_path == nullptr || split_name == nullptr) {
    engine->last_error = "program_path and split_name must be non-null";
    return PROMPTOPT_ERR_INVALID_ARGUMENT;
  }
  return guarded(engine->last_error, [&] {
    const auto report = engine->harness.evaluate_program(program_path, split_name);
    if (out_report_json != nullptr) *out_report_json = dup_string(report.to_json());
  });
}

promptopt_status promptopt_run_compare(promptopt_engine* engine, const char* const* report_paths,
                                       size_t report_count, const char* external_scores_path,
                                       char** out_markdown) {
  if (engine == nullptr) return PROMPTOPT_ERR_INVALID_ARGUMENT;
  return guarded(engine->last_error, [&] {
    std::vector<std::filesystem::path> reports;
    for (size_t i = 0; i < report_count; ++i) {
      if (report_paths[i] != nullptr) reports.emplace_back(report_paths[i]);
    }
    std::optional<std::filesystem::path> external;
    if (external_scores_path != nullptr) external = external_scores_path;
    const auto tables = engine->harness.compare(reports, external);
    if (out_markdown != nullptr) *out_markdown = dup_string(tables.combined_markdown());
  });
}

promptopt_status promptopt_generate_dataset(const char* out_path, long long n_records,
                                            uint64_t seed) {
  if (out_path == nullptr || n_records <= 0) {
    g_last_error = "out_path must be non-null and n_records positive";
    return PROMPTOPT_ERR_INVALID_ARGUMENT;
  }
  return guarded(g_last_error, [&] {
    promptopt::write_synthetic_dataset(out_path, static_cast<std::size_t>(n_records), seed);
  });
}

void promptopt_string_free(char* s) { delete[] s; }

}  // extern "C"
