#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace promptopt {

enum class EvalKind { minibatch, full };

// One optimization trial: a categorical parameter assignment and its score.
struct TrialRecord {
  std::map<std::string, std::string> assignment;
  double score = 0.0;
  EvalKind eval_kind = EvalKind::full;
};

// Categorical search space: parameter name -> ordered choice list.
using SearchSpace = std::map<std::string, std::vector<std::string>>;

struct TpeOptions {
  std::size_t n_startup = 5;   // uniform random draws before density modeling
  double gamma = 0.25;         // top quantile that defines the "good" set
  std::size_t n_candidates = 24;
};

// Tree-structured Parzen estimator step for categorical spaces. Below
// n_startup history entries this is a seeded uniform draw; afterwards it
// splits history at the top-gamma quantile, fits per-parameter categorical
// densities l (good) and g (bad) with add-one smoothing, draws n_candidates
// assignments from l and returns the one maximizing the l/g likelihood
// ratio, preferring assignments not yet present in the history (re-running a
// known assignment yields no new information on a deterministic objective).
std::map<std::string, std::string> tpe_suggest(const std::vector<TrialRecord>& history,
                                               const SearchSpace& space, std::uint64_t seed,
                                               const TpeOptions& options = {});

// Seeded uniform assignment over the space; the random-search counterpart
// used for budget-matched comparisons.
std::map<std::string, std::string> uniform_suggest(const SearchSpace& space, std::uint64_t seed);

}  // namespace promptopt
