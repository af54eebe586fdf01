#include "promptopt/program.hpp"

#include <algorithm>

#include <json.hpp>

#include "promptopt/error.hpp"
#include "promptopt/metrics.hpp"
#include "promptopt/util.hpp"

namespace promptopt {

using nlohmann::json;

void TeleprompterConfig::validate() const {
  if (max_bootstrapped_demos < 0 || max_labeled_demos < 0)
    throw Error::invalid_argument("demo budgets must be nonnegative");
  if (num_candidate_programs < 1 || k < 1 || breadth < 1 || depth < 1 || num_candidates < 1 ||
      num_trials < 1 || minibatch_size < 1 || minibatch_full_eval_steps < 1)
    throw Error::invalid_argument("teleprompter counts must be positive");
}

CompiledProgram make_base_program(const Signature& signature, const std::string& optimizer_name) {
  signature.validate();
  CompiledProgram program;
  program.signature = signature;
  program.provenance.optimizer = optimizer_name;
  return program;
}

std::map<std::string, std::string> inputs_for_record(const Signature& signature,
                                                     const Record& record) {
  std::map<std::string, std::string> inputs;
  for (const auto& field : signature.input_fields()) {
    if (field.name == "DOCUMENT") inputs[field.name] = record.context;
    else if (field.name == "ANSWER") inputs[field.name] = record.answer;
    else if (field.name == "QUESTION") inputs[field.name] = record.question.value_or("");
    else inputs[field.name] = "";
  }
  return inputs;
}

namespace {

// Gold-labeled demo: inputs plus the gold verdict rendered in the output shape.
Demo labeled_demo(const Signature& signature, const Record& record) {
  Demo demo;
  demo.inputs = inputs_for_record(signature, record);
  for (const auto& field : signature.output_fields()) {
    if (field.name == "SCORE") demo.outputs[field.name] = to_string(record.label);
    else if (field.name == "REASONING") demo.outputs[field.name] = "[]";
    else demo.outputs[field.name] = "";
  }
  return demo;
}

std::string knn_query_text(const std::map<std::string, std::string>& inputs) {
  auto doc = inputs.find("DOCUMENT");
  auto ans = inputs.find("ANSWER");
  if (doc != inputs.end() && ans != inputs.end()) return doc->second + "\n\n" + ans->second;
  std::string joined;
  for (const auto& [_, value] : inputs) joined += (joined.empty() ? "" : "\n\n") + value;
  return joined;
}

}  // namespace

std::vector<Demo> demos_for_inputs(const CompiledProgram& program,
                                   const std::map<std::string, std::string>& inputs) {
  if (!program.knn_policy) return program.demos;
  if (!program.knn_index || !program.knn_records || !program.knn_embedder)
    throw Error::state("KNN program is missing its runtime index/records/embedder");

  const EmbeddingVector query = program.knn_embedder->embed(knn_query_text(inputs));
  std::vector<std::string> ids =
      program.knn_index->knn_query(query, static_cast<std::size_t>(program.knn_policy->k));
  // Most similar last, adjacent to the query block.
  std::reverse(ids.begin(), ids.end());

  std::vector<Demo> demos;
  demos.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = program.knn_records->find(id);
    if (it == program.knn_records->end())
      throw Error::state("index id not present in training records: " + id);
    demos.push_back(labeled_demo(program.signature, it->second));
  }
  return demos;
}

namespace {

Prediction vote(const CompiledProgram& program, const std::map<std::string, std::string>& inputs,
                LM& lm, const LMParams& params) {
  std::size_t pass_votes = 0;
  std::size_t fail_votes = 0;
  for (const auto& member : program.members) {
    const Prediction p = run_program(member, inputs, lm, params);
    if (p.label == Label::pass) ++pass_votes;
    else if (p.label == Label::fail) ++fail_votes;
    // INVALID votes are discarded
  }
  Prediction out;
  if (pass_votes == 0 && fail_votes == 0) return out;  // all members abstained
  // Exact tie goes to FAIL: flagging a possible hallucination is the safer error.
  out.label = pass_votes > fail_votes ? Label::pass : Label::fail;
  out.parse_status = ParseStatus::ok;
  out.outputs["SCORE"] = to_string(out.label);
  return out;
}

}  // namespace

Prediction run_program(const CompiledProgram& program,
                       const std::map<std::string, std::string>& inputs, LM& lm,
                       const LMParams& params) {
  if (program.is_ensemble()) return vote(program, inputs, lm, params);
  return predict(program.signature, demos_for_inputs(program, inputs), inputs, lm, params);
}

std::vector<Prediction> run_batch(const CompiledProgram& program,
                                  const std::vector<Record>& records, LM& lm,
                                  const LMParams& params, int concurrency) {
  std::vector<Prediction> predictions(records.size());
  parallel_for_index(records.size(), concurrency, [&](std::size_t i) {
    predictions[i] = run_program(program, inputs_for_record(program.signature, records[i]), lm,
                                 params);
  });
  return predictions;
}

double evaluate(const CompiledProgram& program, const std::vector<Record>& records, LM& lm,
                const LMParams& params, int concurrency) {
  if (records.empty()) throw Error::invalid_argument("evaluate over empty record set");
  const auto predictions = run_batch(program, records, lm, params, concurrency);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < records.size(); ++i)
    correct += static_cast<std::size_t>(exact_match(predictions[i].label, records[i].label));
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr int kProgramVersion = 1;

json signature_to_json(const Signature& sig) {
  json fields = json::array();
  for (const auto& f : sig.fields) {
    fields.push_back({{"name", f.name},
                      {"description", f.description},
                      {"role", f.role == FieldRole::input ? "input" : "output"}});
  }
  return json{{"instruction", sig.instruction}, {"fields", fields}};
}

Signature signature_from_json(const json& doc) {
  Signature sig;
  sig.instruction = doc.value("instruction", "");
  for (const auto& f : doc.value("fields", json::array())) {
    sig.fields.push_back({f.value("name", ""), f.value("description", ""),
                          f.value("role", "input") == "input" ? FieldRole::input
                                                              : FieldRole::output});
  }
  return sig;
}

json demo_to_json(const Demo& demo) {
  return json{{"inputs", demo.inputs}, {"outputs", demo.outputs}};
}

Demo demo_from_json(const json& doc) {
  Demo demo;
  if (doc.contains("inputs"))
    demo.inputs = doc["inputs"].get<std::map<std::string, std::string>>();
  if (doc.contains("outputs"))
    demo.outputs = doc["outputs"].get<std::map<std::string, std::string>>();
  return demo;
}

json config_to_json(const TeleprompterConfig& c) {
  return json{{"max_bootstrapped_demos", c.max_bootstrapped_demos},
              {"max_labeled_demos", c.max_labeled_demos},
              {"num_candidate_programs", c.num_candidate_programs},
              {"k", c.k},
              {"breadth", c.breadth},
              {"depth", c.depth},
              {"init_temperature", c.init_temperature},
              {"num_candidates", c.num_candidates},
              {"num_trials", c.num_trials},
              {"minibatch_size", c.minibatch_size},
              {"minibatch_full_eval_steps", c.minibatch_full_eval_steps},
              {"seed", c.seed},
              {"stratify_demos_by_source", c.stratify_demos_by_source}};
}

TeleprompterConfig config_from_json(const json& doc) {
  TeleprompterConfig c;
  c.max_bootstrapped_demos = doc.value("max_bootstrapped_demos", c.max_bootstrapped_demos);
  c.max_labeled_demos = doc.value("max_labeled_demos", c.max_labeled_demos);
  c.num_candidate_programs = doc.value("num_candidate_programs", c.num_candidate_programs);
  c.k = doc.value("k", c.k);
  c.breadth = doc.value("breadth", c.breadth);
  c.depth = doc.value("depth", c.depth);
  c.init_temperature = doc.value("init_temperature", c.init_temperature);
  c.num_candidates = doc.value("num_candidates", c.num_candidates);
  c.num_trials = doc.value("num_trials", c.num_trials);
  c.minibatch_size = doc.value("minibatch_size", c.minibatch_size);
  c.minibatch_full_eval_steps = doc.value("minibatch_full_eval_steps", c.minibatch_full_eval_steps);
  c.seed = doc.value("seed", c.seed);
  c.stratify_demos_by_source = doc.value("stratify_demos_by_source", c.stratify_demos_by_source);
  return c;
}

json trial_to_json(const TrialRecord& t) {
  return json{{"assignment", t.assignment},
              {"score", t.score},
              {"eval_kind", t.eval_kind == EvalKind::full ? "full" : "minibatch"}};
}

TrialRecord trial_from_json(const json& doc) {
  TrialRecord t;
  if (doc.contains("assignment"))
    t.assignment = doc["assignment"].get<std::map<std::string, std::string>>();
  t.score = doc.value("score", 0.0);
  t.eval_kind = doc.value("eval_kind", "full") == "full" ? EvalKind::full : EvalKind::minibatch;
  return t;
}

json program_to_json_doc(const CompiledProgram& program) {
  json demos = json::array();
  for (const auto& demo : program.demos) demos.push_back(demo_to_json(demo));

  json trials = json::array();
  for (const auto& trial : program.provenance.trials) trials.push_back(trial_to_json(trial));

  json provenance{{"optimizer", program.provenance.optimizer},
                  {"seed", program.provenance.seed},
                  {"config", config_to_json(program.provenance.config)},
                  {"train_score", program.provenance.train_score
                                      ? json(*program.provenance.train_score)
                                      : json(nullptr)},
                  {"validation_score", program.provenance.validation_score
                                           ? json(*program.provenance.validation_score)
                                           : json(nullptr)},
                  {"trial_count", program.provenance.trial_count},
                  {"trials", trials},
                  {"warnings", program.provenance.warnings}};

  json doc{{"version", kProgramVersion},
           {"optimizer", program.provenance.optimizer},
           {"signature", signature_to_json(program.signature)},
           {"demos", demos},
           {"provenance", provenance}};
  if (program.knn_policy) {
    doc["knn_policy"] = {{"index_path", program.knn_policy->index_path},
                         {"records_path", program.knn_policy->records_path},
                         {"k", program.knn_policy->k},
                         {"dim", program.knn_policy->dim}};
  }
  if (program.is_ensemble()) {
    json members = json::array();
    for (const auto& member : program.members) members.push_back(program_to_json_doc(member));
    doc["members"] = members;
  }
  return doc;
}

CompiledProgram program_from_json_doc(const json& doc, const std::filesystem::path& base_dir) {
  const int version = doc.value("version", 0);
  if (version != kProgramVersion)
    throw Error::parse("unsupported program schema version " + std::to_string(version) +
                       " (expected " + std::to_string(kProgramVersion) + ")");

  CompiledProgram program;
  program.signature = signature_from_json(doc.value("signature", json::object()));
  for (const auto& d : doc.value("demos", json::array())) program.demos.push_back(demo_from_json(d));

  if (doc.contains("provenance")) {
    const auto& p = doc["provenance"];
    program.provenance.optimizer = p.value("optimizer", doc.value("optimizer", ""));
    program.provenance.seed = p.value("seed", std::uint64_t{0});
    program.provenance.config = config_from_json(p.value("config", json::object()));
    if (p.contains("train_score") && !p["train_score"].is_null())
      program.provenance.train_score = p["train_score"].get<double>();
    if (p.contains("validation_score") && !p["validation_score"].is_null())
      program.provenance.validation_score = p["validation_score"].get<double>();
    program.provenance.trial_count = p.value("trial_count", std::size_t{0});
    for (const auto& t : p.value("trials", json::array()))
      program.provenance.trials.push_back(trial_from_json(t));
    program.provenance.warnings =
        p.value("warnings", std::vector<std::string>{});
  }

  if (doc.contains("knn_policy")) {
    KnnPolicy policy;
    policy.index_path = doc["knn_policy"].value("index_path", "");
    policy.records_path = doc["knn_policy"].value("records_path", "");
    policy.k = doc["knn_policy"].value("k", 8);
    policy.dim = doc["knn_policy"].value("dim", std::size_t{256});
    program.knn_policy = policy;

    auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      return path.is_absolute() ? path : base_dir / path;
    };
    auto index = std::make_shared<ExampleIndex>(ExampleIndex::load(resolve(policy.index_path)));
    auto records = std::make_shared<std::map<std::string, Record>>();
    for (const auto& r : read_records(resolve(policy.records_path))) (*records)[r.id] = r;
    program.knn_index = std::move(index);
    program.knn_records = std::move(records);
    program.knn_embedder = std::make_shared<LocalEmbedder>(policy.dim);
  }

  for (const auto& m : doc.value("members", json::array()))
    program.members.push_back(program_from_json_doc(m, base_dir));

  return program;
}

}  // namespace

std::string program_to_json(const CompiledProgram& program) {
  return program_to_json_doc(program).dump(2) + "\n";
}

void save_program(const CompiledProgram& program, const std::filesystem::path& path) {
  write_file_atomic(path, program_to_json(program));
}

CompiledProgram load_program(const std::filesystem::path& path) {
  json doc = json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded()) throw Error::parse("malformed program file: " + path.string());
  return program_from_json_doc(doc, path.parent_path());
}

}  // namespace promptopt
