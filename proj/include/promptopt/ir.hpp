#pragma once

#include <map>
#include <string>
#include <vector>

#include "promptopt/lm.hpp"

namespace promptopt {

enum class FieldRole { input, output };

enum class Label { pass, fail, invalid };

std::string to_string(Label label);

// Accepts PASS/Pass/pass/1/true and FAIL/Fail/fail/0/false; anything else throws.
Label parse_gold_label(const std::string& text);

struct FieldSpec {
  std::string name;
  std::string description;
  FieldRole role = FieldRole::input;
};

// Declarative I/O contract of a predictor: instruction plus ordered fields.
struct Signature {
  std::string instruction;
  std::vector<FieldSpec> fields;

  std::vector<FieldSpec> input_fields() const;
  std::vector<FieldSpec> output_fields() const;

  // Nonempty unique names, at least one input and one output field.
  void validate() const;
};

// The faithfulness judge contract: DOCUMENT/ANSWER in, REASONING/SCORE out.
// `include_question` adds a QUESTION input field between them.
Signature faithfulness_signature(bool include_question = false);

// One input/output example pair embedded in the prompt.
struct Demo {
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> outputs;
};

enum class ParseStatus { ok, parse_failure };

struct Prediction {
  std::map<std::string, std::string> outputs;
  std::string raw_completion;
  ParseStatus parse_status = ParseStatus::parse_failure;
  Label label = Label::invalid;
};

// Instruction, demo blocks in list order, the query block, then the
// output-format directive. With zero demos this is exactly the baseline
// prompt template with the input values substituted.
std::string render_prompt(const Signature& signature, const std::vector<Demo>& demos,
                          const std::map<std::string, std::string>& inputs);

// The JSON object a demo's outputs render to inside the prompt; also the
// shape the model is asked to emit.
std::string render_demo_outputs(const Signature& signature,
                                const std::map<std::string, std::string>& outputs);

// Non-overlapping balanced {...} regions that parse as JSON objects, in text
// order. The scanner behind parse_prediction and the mock judge's demo-block
// counting.
std::vector<std::string> extract_json_objects(const std::string& text);

// Lenient extraction: strips code fences, takes the first balanced JSON
// object, reads SCORE case-insensitively. Never throws; failures are encoded
// in parse_status.
Prediction parse_prediction(const std::string& raw_completion, const Signature& signature);

// render -> complete -> parse. Transport errors surface as Error{backend},
// distinct from a parse failure.
Prediction predict(const Signature& signature, const std::vector<Demo>& demos,
                   const std::map<std::string, std::string>& inputs, LM& lm,
                   const LMParams& params);

}  // namespace promptopt
