#include "promptopt/metrics.hpp"

#include <json.hpp>

#include "promptopt/error.hpp"
#include "promptopt/util.hpp"

namespace promptopt {

using nlohmann::json;

namespace {

int row_of(Label gold) {
  switch (gold) {
    case Label::pass: return 0;
    case Label::fail: return 1;
    default: throw Error::invalid_argument("gold label must be PASS or FAIL");
  }
}

int col_of(Label predicted) {
  switch (predicted) {
    case Label::pass: return 0;
    case Label::fail: return 1;
    case Label::invalid: return 2;
  }
  return 2;
}

}  // namespace

void ConfusionMatrix::add(Label predicted, Label gold) { add(predicted, gold, 1); }

void ConfusionMatrix::add(Label predicted, Label gold, std::size_t count) {
  cells_[row_of(gold)][col_of(predicted)] += count;
}

std::size_t ConfusionMatrix::cell(Label gold, Label predicted) const {
  return cells_[row_of(gold)][col_of(predicted)];
}

std::size_t ConfusionMatrix::tp(Label c) const {
  const int i = row_of(c);
  return cells_[i][i];
}

std::size_t ConfusionMatrix::fp(Label c) const {
  const int i = row_of(c);
  return cells_[1 - i][i];  // INVALID predictions never land in a class column
}

std::size_t ConfusionMatrix::fn(Label c) const {
  const int i = row_of(c);
  return cells_[i][1 - i] + cells_[i][2];
}

std::size_t ConfusionMatrix::support(Label c) const {
  const int i = row_of(c);
  return cells_[i][0] + cells_[i][1] + cells_[i][2];
}

std::size_t ConfusionMatrix::invalid_count() const { return cells_[0][2] + cells_[1][2]; }

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (const auto& row : cells_)
    for (std::size_t cell : row) n += cell;
  return n;
}

std::size_t ConfusionMatrix::correct() const { return cells_[0][0] + cells_[1][1]; }

int exact_match(Label predicted, Label gold) {
  row_of(gold);  // validates the precondition
  return predicted == gold ? 1 : 0;
}

namespace {

double class_f1(const ConfusionMatrix& m, Label c) {
  const double tp = static_cast<double>(m.tp(c));
  const double fp = static_cast<double>(m.fp(c));
  const double fn = static_cast<double>(m.fn(c));
  const double precision = (tp + fp) > 0 ? tp / (tp + fp) : 0.0;
  const double recall = (tp + fn) > 0 ? tp / (tp + fn) : 0.0;
  return (precision + recall) > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
}

}  // namespace

F1Scores f1_scores(const ConfusionMatrix& m) {
  if (m.total() == 0) throw Error::invalid_argument("f1_scores over empty input");

  const double tp_sum = static_cast<double>(m.tp(Label::pass) + m.tp(Label::fail));
  const double fp_sum = static_cast<double>(m.fp(Label::pass) + m.fp(Label::fail));
  const double fn_sum = static_cast<double>(m.fn(Label::pass) + m.fn(Label::fail));

  F1Scores scores;
  const double denom = 2 * tp_sum + fp_sum + fn_sum;
  scores.micro = denom > 0 ? 2 * tp_sum / denom : 0.0;

  const double f1_pass = class_f1(m, Label::pass);
  const double f1_fail = class_f1(m, Label::fail);
  scores.macro = (f1_pass + f1_fail) / 2.0;

  const double n = static_cast<double>(m.total());
  scores.weighted = (static_cast<double>(m.support(Label::pass)) * f1_pass +
                     static_cast<double>(m.support(Label::fail)) * f1_fail) /
                    n;
  return scores;
}

F1Scores f1_scores(const std::vector<Label>& predictions, const std::vector<Label>& golds) {
  if (predictions.size() != golds.size())
    throw Error::invalid_argument("predictions and golds differ in length");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < golds.size(); ++i) m.add(predictions[i], golds[i]);
  return f1_scores(m);
}

double accuracy(const ConfusionMatrix& m) {
  if (m.total() == 0) throw Error::invalid_argument("accuracy over empty input");
  return static_cast<double>(m.correct()) / static_cast<double>(m.total());
}

EvalReport build_report(const std::vector<ScoredSample>& samples, const std::string& name) {
  if (samples.empty()) throw Error::invalid_argument("build_report over empty input");

  EvalReport report;
  report.name = name;
  report.n = samples.size();

  std::map<std::string, ConfusionMatrix> by_source;
  for (const auto& s : samples) {
    report.confusion.add(s.predicted, s.gold);
    by_source[s.source].add(s.predicted, s.gold);
    if (s.predicted == Label::invalid) ++report.parse_failures;
  }

  report.accuracy = accuracy(report.confusion);
  const F1Scores overall = f1_scores(report.confusion);
  report.micro_f1 = overall.micro;
  report.macro_f1 = overall.macro;
  report.weighted_f1 = overall.weighted;

  for (const auto& [source, m] : by_source) {
    SourceMetrics sm;
    sm.n = m.total();
    sm.accuracy = accuracy(m);
    const F1Scores f = f1_scores(m);
    sm.micro_f1 = f.micro;
    sm.macro_f1 = f.macro;
    sm.weighted_f1 = f.weighted;
    report.per_source[source] = sm;
  }
  return report;
}

std::string EvalReport::to_json() const {
  // Raw gold x predicted cells; every derived count is recoverable.
  json confusion_json = json::object();
  for (Label gold : {Label::pass, Label::fail}) {
    json row = json::object();
    for (Label pred : {Label::pass, Label::fail, Label::invalid}) {
      row[to_lower(to_string(pred))] = confusion.cell(gold, pred);
    }
    confusion_json[to_lower(to_string(gold))] = row;
  }

  json per_source_json = json::object();
  for (const auto& [source, sm] : per_source) {
    per_source_json[source] = {{"n", sm.n},
                               {"accuracy", sm.accuracy},
                               {"micro_f1", sm.micro_f1},
                               {"macro_f1", sm.macro_f1},
                               {"weighted_f1", sm.weighted_f1}};
  }

  json doc{{"version", 1},
           {"name", name},
           {"n", n},
           {"accuracy", accuracy},
           {"micro_f1", micro_f1},
           {"macro_f1", macro_f1},
           {"weighted_f1", weighted_f1},
           {"parse_failures", parse_failures},
           {"confusion", confusion_json},
           {"per_source", per_source_json}};
  return doc.dump(2) + "\n";
}

EvalReport EvalReport::from_json(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw Error::parse("malformed report JSON");
  if (doc.value("version", 0) != 1)
    throw Error::parse("unsupported report version: " + std::to_string(doc.value("version", 0)));

  EvalReport report;
  report.name = doc.value("name", "");
  report.n = doc.value("n", std::size_t{0});
  report.accuracy = doc.value("accuracy", 0.0);
  report.micro_f1 = doc.value("micro_f1", 0.0);
  report.macro_f1 = doc.value("macro_f1", 0.0);
  report.weighted_f1 = doc.value("weighted_f1", 0.0);
  report.parse_failures = doc.value("parse_failures", std::size_t{0});

  if (doc.contains("confusion")) {
    const auto& c = doc["confusion"];
    for (Label gold : {Label::pass, Label::fail}) {
      const std::string gold_key = to_lower(to_string(gold));
      if (!c.contains(gold_key)) continue;
      for (Label pred : {Label::pass, Label::fail, Label::invalid}) {
        report.confusion.add(pred, gold,
                             c[gold_key].value(to_lower(to_string(pred)), std::size_t{0}));
      }
    }
  }

  if (doc.contains("per_source")) {
    for (auto it = doc["per_source"].begin(); it != doc["per_source"].end(); ++it) {
      SourceMetrics sm;
      sm.n = it.value().value("n", std::size_t{0});
      sm.accuracy = it.value().value("accuracy", 0.0);
      sm.micro_f1 = it.value().value("micro_f1", 0.0);
      sm.macro_f1 = it.value().value("macro_f1", 0.0);
      sm.weighted_f1 = it.value().value("weighted_f1", 0.0);
      report.per_source[it.key()] = sm;
    }
  }
  return report;
}

}  // namespace promptopt
