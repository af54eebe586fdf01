#include "promptopt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "promptopt/error.hpp"
#include "promptopt/util.hpp"

namespace promptopt {

using nlohmann::json;

namespace {

// Alias table for ingest; first present key wins.
const std::vector<std::string> kIdAliases{"id", "_id", "uid", "sample_id"};
const std::vector<std::string> kContextAliases{"context", "passage", "document", "doc"};
const std::vector<std::string> kQuestionAliases{"question", "query"};
const std::vector<std::string> kAnswerAliases{"answer", "response", "output"};
const std::vector<std::string> kLabelAliases{"label", "gold", "ground_truth", "verdict"};
const std::vector<std::string> kSourceAliases{"source", "source_ds", "dataset", "subset"};

std::optional<std::string> pick_alias(const json& obj, const std::vector<std::string>& aliases) {
  for (const auto& key : aliases) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) continue;
    if (it->is_string()) return it->get<std::string>();
    return it->dump();
  }
  return std::nullopt;
}

Record parse_record_line(const json& obj) {
  Record r;
  auto id = pick_alias(obj, kIdAliases);
  if (!id || id->empty()) throw Error::parse("missing id");
  r.id = *id;
  auto context = pick_alias(obj, kContextAliases);
  if (!context) throw Error::parse("missing context/passage/document");
  r.context = *context;
  r.question = pick_alias(obj, kQuestionAliases);
  auto answer = pick_alias(obj, kAnswerAliases);
  if (!answer) throw Error::parse("missing answer");
  r.answer = *answer;
  auto label = pick_alias(obj, kLabelAliases);
  if (!label) throw Error::parse("missing label");
  r.label = parse_gold_label(*label);
  r.source = pick_alias(obj, kSourceAliases).value_or("unknown");
  return r;
}

}  // namespace

IngestResult ingest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error::io("cannot open dataset: " + path.string());

  IngestResult result;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      result.issues.push_back({line_number, "not a JSON object"});
      continue;
    }
    try {
      result.records.push_back(parse_record_line(obj));
    } catch (const Error& e) {
      result.issues.push_back({line_number, e.what()});
    }
  }

  if (result.records.empty())
    throw Error::parse("no valid records in " + path.string() + " (" +
                       std::to_string(result.issues.size()) + " malformed lines)");

  std::map<std::string, std::size_t> id_counts;
  for (const auto& r : result.records) ++id_counts[r.id];
  std::string duplicates;
  for (const auto& [id, n] : id_counts) {
    if (n > 1) duplicates += (duplicates.empty() ? "" : ", ") + id;
  }
  if (!duplicates.empty()) throw Error::parse("duplicate record ids: " + duplicates);

  return result;
}

CleanResult clean(const std::vector<Record>& records) {
  CleanResult result;
  for (const auto& r : records) {
    if (split_whitespace(r.answer).size() <= 3) {
      ++result.dropped;
    } else {
      result.kept.push_back(r);
    }
  }
  return result;
}

void SplitSpec::validate() const {
  if (train_fraction <= 0 || validation_fraction <= 0 || test_fraction <= 0)
    throw Error::invalid_argument("split fractions must be positive");
  const double sum = train_fraction + validation_fraction + test_fraction;
  if (std::abs(sum - 1.0) > 1e-9)
    throw Error::invalid_argument("split fractions must sum to 1");
  for (const auto& key : strata_keys) {
    if (key != "source" && key != "label")
      throw Error::invalid_argument("unknown stratum key: " + key);
  }
}

std::string stratum_key_of(const Record& record, const std::vector<std::string>& strata_keys) {
  std::string key;
  for (const auto& k : strata_keys) {
    if (!key.empty()) key += "|";
    key += (k == "source") ? record.source : to_string(record.label);
  }
  return key.empty() ? "all" : key;
}

namespace {

// Largest-remainder apportionment of n over the three fractions; each part
// deviates from exact proportionality by at most one.
std::array<std::size_t, 3> apportion(std::size_t n, const SplitSpec& spec) {
  const std::array<double, 3> fractions{spec.train_fraction, spec.validation_fraction,
                                        spec.test_fraction};
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainders{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = fractions[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    remainders[i] = exact - std::floor(exact);
    assigned += counts[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return remainders[a] > remainders[b]; });
  for (std::size_t leftover = n - assigned, i = 0; i < leftover; ++i) ++counts[order[i]];
  return counts;
}

}  // namespace

SplitResult stratified_split(const std::vector<Record>& records, const SplitSpec& spec) {
  spec.validate();

  // Strata in deterministic (sorted) key order; record order kept per stratum.
  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < records.size(); ++i)
    strata[stratum_key_of(records[i], spec.strata_keys)].push_back(i);

  SplitResult result;

  // Undersized strata skip the partitioning and go to train whole.
  std::vector<std::string> eligible;
  std::size_t n_eligible = 0;
  for (auto& [key, indices] : strata) {
    if (indices.size() < 3) {
      result.warnings.push_back("stratum '" + key + "' has only " +
                                std::to_string(indices.size()) +
                                " records; assigning all to train");
      for (std::size_t i : indices) result.train.push_back(records[i]);
      result.stratum_counts[key] = {indices.size(), 0, 0};
    } else {
      eligible.push_back(key);
      n_eligible += indices.size();
    }
  }
  if (eligible.empty()) return result;

  // Global split sizes first (largest remainder over the whole eligible
  // count), then per-stratum floors, then the per-stratum leftover records
  // are matched to whichever split still runs a global deficit, preferring
  // the locally largest remainder. Each stratum bumps a split at most once,
  // so per-stratum counts stay within one of exact proportionality while the
  // global sizes land exactly on target.
  const std::array<std::size_t, 3> target = apportion(n_eligible, spec);
  const std::array<double, 3> fractions{spec.train_fraction, spec.validation_fraction,
                                        spec.test_fraction};

  std::map<std::string, std::array<std::size_t, 3>> counts;
  std::map<std::string, std::array<double, 3>> remainders;
  std::array<std::size_t, 3> assigned{};
  std::map<std::string, std::size_t> leftover;
  for (const auto& key : eligible) {
    const std::size_t n = strata[key].size();
    std::size_t base_total = 0;
    for (int p = 0; p < 3; ++p) {
      const double exact = fractions[p] * static_cast<double>(n);
      counts[key][p] = static_cast<std::size_t>(std::floor(exact));
      remainders[key][p] = exact - std::floor(exact);
      assigned[p] += counts[key][p];
      base_total += counts[key][p];
    }
    leftover[key] = n - base_total;
  }

  std::array<std::size_t, 3> deficit{};
  for (int p = 0; p < 3; ++p) deficit[p] = target[p] - assigned[p];

  // Matching the leftover records to splits is a bipartite degree-sequence
  // realization: stratum s needs leftover[s] distinct splits, split p needs
  // deficit[p] bumps in total. Largest-degree-first (Gale-Ryser) always
  // realizes it, so no split is ever bumped twice within one stratum and the
  // per-stratum deviation stays within one.
  std::vector<std::string> pending = eligible;
  while (true) {
    std::string* stratum = nullptr;
    for (auto& key : pending) {
      if (leftover[key] == 0) continue;
      if (stratum == nullptr || leftover[key] > leftover[*stratum]) stratum = &key;
    }
    if (stratum == nullptr) break;

    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      if (deficit[a] != deficit[b]) return deficit[a] > deficit[b];
      return remainders[*stratum][a] > remainders[*stratum][b];
    });
    const std::size_t need = leftover[*stratum];
    for (std::size_t l = 0; l < need; ++l) {
      const int pick = order[l];
      if (deficit[pick] == 0)
        throw Error::internal("stratified split leftover matching ran out of capacity");
      counts[*stratum][pick] += 1;
      deficit[pick] -= 1;
    }
    leftover[*stratum] = 0;
  }

  for (const auto& key : eligible) {
    auto& indices = strata[key];
    std::mt19937_64 rng(derive_seed(spec.seed, key));
    std::shuffle(indices.begin(), indices.end(), rng);
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < counts[key][0]; ++i)
      result.train.push_back(records[indices[cursor++]]);
    for (std::size_t i = 0; i < counts[key][1]; ++i)
      result.validation.push_back(records[indices[cursor++]]);
    for (std::size_t i = 0; i < counts[key][2]; ++i)
      result.test.push_back(records[indices[cursor++]]);
    result.stratum_counts[key] = counts[key];
  }
  return result;
}

std::vector<Record> proportional_subsample(const std::vector<Record>& records,
                                           std::size_t target_n, std::uint64_t seed,
                                           const std::vector<std::string>& strata_keys) {
  if (target_n >= records.size()) return records;

  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < records.size(); ++i)
    strata[stratum_key_of(records[i], strata_keys)].push_back(i);

  // Largest-remainder across strata for the per-stratum quotas.
  std::vector<std::string> keys;
  for (const auto& [key, _] : strata) keys.push_back(key);
  std::vector<std::size_t> quotas(keys.size(), 0);
  std::vector<double> remainders(keys.size(), 0.0);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const double exact = static_cast<double>(target_n) *
                         static_cast<double>(strata[keys[i]].size()) /
                         static_cast<double>(records.size());
    quotas[i] = static_cast<std::size_t>(std::floor(exact));
    remainders[i] = exact - std::floor(exact);
    assigned += quotas[i];
  }
  std::vector<std::size_t> order(keys.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t leftover = target_n - assigned, i = 0; i < leftover && i < order.size(); ++i)
    ++quotas[order[i]];

  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    auto& indices = strata[keys[i]];
    std::mt19937_64 rng(derive_seed(seed, "subsample|" + keys[i]));
    std::shuffle(indices.begin(), indices.end(), rng);
    const std::size_t take = std::min(quotas[i], indices.size());
    chosen.insert(chosen.end(), indices.begin(), indices.begin() + static_cast<long>(take));
  }
  std::sort(chosen.begin(), chosen.end());  // restore input order

  std::vector<Record> out;
  out.reserve(chosen.size());
  for (std::size_t i : chosen) out.push_back(records[i]);
  return out;
}

std::string record_to_json_line(const Record& record) {
  json obj{{"id", record.id},
           {"context", record.context},
           {"answer", record.answer},
           {"label", to_string(record.label)},
           {"source", record.source}};
  if (record.question) obj["question"] = *record.question;
  return obj.dump();
}

void write_records(const std::filesystem::path& path, const std::vector<Record>& records) {
  std::string content;
  for (const auto& r : records) {
    content += record_to_json_line(r);
    content += "\n";
  }
  write_file_atomic(path, content);
}

std::vector<Record> read_records(const std::filesystem::path& path) {
  return ingest(path).records;
}

}  // namespace promptopt
