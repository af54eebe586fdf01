#include "promptopt/ir.hpp"

#include <set>

#include <json.hpp>

#include "promptopt/error.hpp"
#include "promptopt/util.hpp"

namespace promptopt {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string to_string(Label label) {
  switch (label) {
    case Label::pass: return "PASS";
    case Label::fail: return "FAIL";
    case Label::invalid: return "INVALID";
  }
  return "INVALID";
}

Label parse_gold_label(const std::string& text) {
  const std::string t = to_lower(trim(text));
  if (t == "pass" || t == "1" || t == "true") return Label::pass;
  if (t == "fail" || t == "0" || t == "false") return Label::fail;
  throw Error::parse("unrecognized gold label: '" + text + "'");
}

std::vector<FieldSpec> Signature::input_fields() const {
  std::vector<FieldSpec> out;
  for (const auto& f : fields)
    if (f.role == FieldRole::input) out.push_back(f);
  return out;
}

std::vector<FieldSpec> Signature::output_fields() const {
  std::vector<FieldSpec> out;
  for (const auto& f : fields)
    if (f.role == FieldRole::output) out.push_back(f);
  return out;
}

void Signature::validate() const {
  std::set<std::string> seen;
  bool has_input = false;
  bool has_output = false;
  for (const auto& f : fields) {
    if (f.name.empty()) throw Error::invalid_argument("signature field with empty name");
    if (!seen.insert(f.name).second)
      throw Error::invalid_argument("duplicate signature field: " + f.name);
    (f.role == FieldRole::input ? has_input : has_output) = true;
  }
  if (!has_input || !has_output)
    throw Error::invalid_argument("signature needs at least one input and one output field");
}

Signature faithfulness_signature(bool include_question) {
  Signature sig;
  sig.instruction =
      "Given the following DOCUMENT and ANSWER, determine whether the ANSWER is "
      "faithful to the contents of the DOCUMENT. The ANSWER must not offer new "
      "information beyond the context provided in the DOCUMENT. It must also not "
      "contradict the DOCUMENT.";
  sig.fields.push_back({"DOCUMENT", "the source document", FieldRole::input});
  if (include_question) sig.fields.push_back({"QUESTION", "the question asked", FieldRole::input});
  sig.fields.push_back({"ANSWER", "the answer under evaluation", FieldRole::input});
  sig.fields.push_back({"REASONING", "your reasoning as bullet points", FieldRole::output});
  sig.fields.push_back(
      {"SCORE", "\"PASS\" if the answer is faithful, \"FAIL\" if it is not", FieldRole::output});
  return sig;
}

namespace {

std::string render_input_block(const Signature& signature,
                               const std::map<std::string, std::string>& values) {
  std::string out;
  for (const auto& field : signature.fields) {
    if (field.role != FieldRole::input) continue;
    auto it = values.find(field.name);
    if (it == values.end())
      throw Error::invalid_argument("missing input field: " + field.name);
    out += field.name;
    out += ":\n";
    out += it->second;
    out += "\n\n";
  }
  return out;
}

std::string render_format_directive(const Signature& signature) {
  const auto outputs = signature.output_fields();
  std::string keys;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (i > 0) keys += (i + 1 == outputs.size()) ? " and " : ", ";
    keys += "\"" + outputs[i].name + "\"";
  }
  std::string out = "Your output should be in JSON format with the keys:\n" + keys + ".\n\n{\n";
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    out += "  \"" + outputs[i].name + "\": <" + outputs[i].description + ">";
    out += (i + 1 == outputs.size()) ? "\n" : ",\n";
  }
  out += "}";
  return out;
}

}  // namespace

std::string render_demo_outputs(const Signature& signature,
                                const std::map<std::string, std::string>& outputs) {
  ordered_json obj = ordered_json::object();
  for (const auto& field : signature.fields) {
    if (field.role != FieldRole::output) continue;
    auto it = outputs.find(field.name);
    if (it == outputs.end())
      throw Error::invalid_argument("demo missing output field: " + field.name);
    // Values that are themselves JSON (a REASONING bullet array) embed as-is;
    // everything else becomes a JSON string.
    if (json::accept(it->second)) {
      obj[field.name] = ordered_json::parse(it->second);
    } else {
      obj[field.name] = it->second;
    }
  }
  return obj.dump(2);
}

std::string render_prompt(const Signature& signature, const std::vector<Demo>& demos,
                          const std::map<std::string, std::string>& inputs) {
  std::string out = signature.instruction + "\n\n";
  for (const auto& demo : demos) {
    out += render_input_block(signature, demo.inputs);
    out += render_demo_outputs(signature, demo.outputs);
    out += "\n\n";
  }
  out += render_input_block(signature, inputs);
  out += render_format_directive(signature);
  return out;
}

namespace {

// Strips a surrounding ``` fence pair (with optional language tag).
std::string strip_code_fence(const std::string& text) {
  std::string t = trim(text);
  if (t.rfind("```", 0) != 0) return t;
  std::size_t body_start = t.find('\n');
  if (body_start == std::string::npos) return t;
  ++body_start;
  std::size_t fence_end = t.rfind("```");
  if (fence_end <= body_start) return t;
  return trim(t.substr(body_start, fence_end - body_start));
}

}  // namespace

std::vector<std::string> extract_json_objects(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = text.find('{');
  while (start != std::string::npos) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    std::size_t next = start + 1;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}') {
        if (--depth == 0) {
          std::string candidate = text.substr(start, i - start + 1);
          if (json::accept(candidate)) {
            out.push_back(std::move(candidate));
            next = i + 1;  // skip past the accepted region
          }
          break;
        }
      }
    }
    start = text.find('{', next);
  }
  return out;
}

Prediction parse_prediction(const std::string& raw_completion, const Signature& signature) {
  Prediction pred;
  pred.raw_completion = raw_completion;

  const auto objects = extract_json_objects(strip_code_fence(raw_completion));
  if (objects.empty()) return pred;
  const json obj = json::parse(objects.front());

  // Case-insensitive key lookup over the parsed object.
  auto find_key = [&](const std::string& name) -> const json* {
    const std::string want = to_lower(name);
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (to_lower(it.key()) == want) return &it.value();
    }
    return nullptr;
  };

  const json* score = find_key("SCORE");
  if (score == nullptr || !score->is_string()) return pred;
  const std::string verdict = to_lower(trim(score->get<std::string>()));
  if (verdict != "pass" && verdict != "fail") return pred;

  pred.parse_status = ParseStatus::ok;
  pred.label = verdict == "pass" ? Label::pass : Label::fail;
  for (const auto& field : signature.output_fields()) {
    if (const json* value = find_key(field.name)) {
      pred.outputs[field.name] = value->is_string() ? value->get<std::string>() : value->dump();
    }
  }
  return pred;
}

Prediction predict(const Signature& signature, const std::vector<Demo>& demos,
                   const std::map<std::string, std::string>& inputs, LM& lm,
                   const LMParams& params) {
  const std::string prompt = render_prompt(signature, demos, inputs);
  return parse_prediction(lm.complete(prompt, params), signature);
}

}  // namespace promptopt
