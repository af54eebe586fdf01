#include "promptopt/synth.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "promptopt/util.hpp"

namespace promptopt {

namespace {

const std::vector<std::string> kSources{"covidqa", "drop",     "financebench",
                                        "halueval", "pubmedqa", "ragtruth"};

// All entries are 4+ characters so every word counts as a content token.
const std::vector<std::string> kVocabulary{
    "market",   "protein",  "vaccine",  "revenue",  "patient",  "study",    "trial",
    "sample",   "variant",  "antibody", "quarter",  "earnings", "profit",   "margin",
    "treatment", "dosage",  "cohort",   "baseline", "outcome",  "measure",  "signal",
    "report",   "figure",   "table",    "growth",   "decline",  "increase", "decrease",
    "infection", "immunity", "genome",  "sequence", "analysis", "result",   "evidence",
    "therapy",  "clinical", "symptom",  "diagnosis", "balance", "asset",    "liability",
    "equity",   "dividend", "forecast", "estimate", "capital",  "expense",  "income",
    "volume",   "density",  "pressure", "reaction", "compound", "molecule", "receptor",
    "enzyme",   "membrane", "tissue",   "organism", "bacteria", "culture",  "placebo",
    "control",  "random",   "double",   "blind",    "phase",    "approval", "agency",
    "region",   "country",  "period",   "annual",   "monthly",  "weekly",   "daily",
    "average",  "median",   "minimum",  "maximum",  "total",    "partial",  "segment",
    "division", "product",  "service",  "customer", "supplier", "contract", "agreement",
    "policy",   "guidance", "standard", "method",   "approach", "model",    "framework",
    "system",   "network",  "cluster",  "factor",   "element",  "component", "structure",
    "function", "process",  "cycle",    "stage",    "level",    "index",    "ratio",
    "score",    "metric",   "value",    "amount",   "number",   "portion",  "fraction",
};

}  // namespace

std::vector<Record> generate_synthetic_records(std::size_t n, std::uint64_t seed) {
  std::vector<Record> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(derive_seed(seed, "synth-record-" + std::to_string(i)));
    std::uniform_int_distribution<std::size_t> vocab_pick(0, kVocabulary.size() - 1);

    // Document: 20..32 vocabulary words.
    const std::size_t doc_len = 20 + rng() % 13;
    std::vector<std::string> doc_words;
    for (std::size_t w = 0; w < doc_len; ++w) doc_words.push_back(kVocabulary[vocab_pick(rng)]);
    std::string context = "The report states:";
    for (const auto& w : doc_words) context += " " + w;
    context += ".";

    // Token set via the judge's own tokenizer, so labels and rule agree.
    const auto context_tokens = alnum_tokens(context);
    const std::set<std::string> doc_set(context_tokens.begin(), context_tokens.end());

    // Answer: 5..9 words drawn from the document.
    const std::size_t ans_len = 5 + rng() % 5;
    std::vector<std::string> ans_words;
    std::uniform_int_distribution<std::size_t> doc_pick(0, doc_words.size() - 1);
    for (std::size_t w = 0; w < ans_len; ++w) ans_words.push_back(doc_words[doc_pick(rng)]);

    const bool is_fail = (i / kSources.size()) % 2 == 1;
    if (is_fail) {
      // Swap in 1..2 words the document does not contain.
      std::vector<std::string> outside;
      for (const auto& word : kVocabulary)
        if (!doc_set.count(word)) outside.push_back(word);
      const std::size_t swaps = 1 + rng() % std::min<std::size_t>(2, outside.size());
      for (std::size_t s = 0; s < swaps; ++s)
        ans_words[rng() % ans_words.size()] = outside[rng() % outside.size()];
    }

    Record r;
    r.id = "syn-" + std::to_string(i);
    r.context = context;
    std::string answer;
    for (const auto& w : ans_words) answer += (answer.empty() ? "" : " ") + w;
    r.answer = answer;
    r.question = "What does the report say about " + doc_words.front() + "?";
    r.label = is_fail ? Label::fail : Label::pass;
    r.source = kSources[i % kSources.size()];
    records.push_back(std::move(r));
  }
  return records;
}

void write_synthetic_dataset(const std::filesystem::path& path, std::size_t n,
                             std::uint64_t seed) {
  write_records(path, generate_synthetic_records(n, seed));
}

}  // namespace promptopt
