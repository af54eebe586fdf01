#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "promptopt/ir.hpp"

namespace promptopt {

// Binary PASS/FAIL confusion counts with INVALID tracked separately. An
// INVALID prediction counts as a false negative for the gold class and a
// false positive for no class, so abstentions never pollute precision.
class ConfusionMatrix {
 public:
  void add(Label predicted, Label gold);
  void add(Label predicted, Label gold, std::size_t count);

  std::size_t cell(Label gold, Label predicted) const;
  std::size_t tp(Label c) const;
  std::size_t fp(Label c) const;
  std::size_t fn(Label c) const;
  std::size_t support(Label c) const;  // gold count
  std::size_t invalid_count() const;
  std::size_t total() const;
  std::size_t correct() const;

 private:
  // rows: gold pass/fail; cols: predicted pass/fail/invalid
  std::array<std::array<std::size_t, 3>, 2> cells_{};
};

// 1 iff the predicted label equals the gold label; INVALID never matches.
int exact_match(Label predicted, Label gold);

struct F1Scores {
  double micro = 0.0;
  double macro = 0.0;
  double weighted = 0.0;
};

// Micro = pooled counts, macro = unweighted class mean, weighted =
// support-weighted class mean. Zero-denominator precision/recall/F1 are 0.
F1Scores f1_scores(const std::vector<Label>& predictions, const std::vector<Label>& golds);
F1Scores f1_scores(const ConfusionMatrix& m);

double accuracy(const ConfusionMatrix& m);

struct SourceMetrics {
  std::size_t n = 0;
  double accuracy = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
};

struct ScoredSample {
  Label predicted = Label::invalid;
  Label gold = Label::pass;
  std::string source;
};

struct EvalReport {
  std::string name;  // model/optimizer row label
  std::size_t n = 0;
  double accuracy = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  std::size_t parse_failures = 0;
  ConfusionMatrix confusion;
  std::map<std::string, SourceMetrics> per_source;

  std::string to_json() const;
  static EvalReport from_json(const std::string& text);
};

// Aggregates overall and per-source metrics; per-source values are computed
// on that source's subset only.
EvalReport build_report(const std::vector<ScoredSample>& samples, const std::string& name);

}  // namespace promptopt
