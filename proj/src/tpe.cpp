#include "promptopt/tpe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "promptopt/error.hpp"
#include "promptopt/util.hpp"

namespace promptopt {

namespace {

void check_space(const SearchSpace& space) {
  for (const auto& [name, domain] : space) {
    if (domain.empty()) throw Error::invalid_argument("empty domain for parameter: " + name);
  }
}

std::map<std::string, std::string> draw_uniform(const SearchSpace& space, std::mt19937_64& rng) {
  std::map<std::string, std::string> assignment;
  for (const auto& [name, domain] : space) {
    std::uniform_int_distribution<std::size_t> pick(0, domain.size() - 1);
    assignment[name] = domain[pick(rng)];
  }
  return assignment;
}

}  // namespace

std::map<std::string, std::string> uniform_suggest(const SearchSpace& space, std::uint64_t seed) {
  check_space(space);
  std::mt19937_64 rng(seed);
  return draw_uniform(space, rng);
}

std::map<std::string, std::string> tpe_suggest(const std::vector<TrialRecord>& history,
                                               const SearchSpace& space, std::uint64_t seed,
                                               const TpeOptions& options) {
  check_space(space);
  std::mt19937_64 rng(seed);
  if (history.size() < options.n_startup) return draw_uniform(space, rng);

  // Split at the top-gamma quantile by score; stable so ties keep history order.
  std::vector<std::size_t> order(history.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return history[a].score > history[b].score;
  });
  const std::size_t n_good = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(options.gamma * static_cast<double>(history.size()))));

  // Per-parameter categorical densities with add-one smoothing.
  struct Density {
    std::map<std::string, double> l;  // good
    std::map<std::string, double> g;  // bad
    std::vector<std::string> choices;
    std::vector<double> l_weights;  // sampling weights aligned with choices
  };
  std::map<std::string, Density> densities;
  for (const auto& [name, domain] : space) {
    Density d;
    d.choices = domain;
    std::map<std::string, std::size_t> good_counts;
    std::map<std::string, std::size_t> bad_counts;
    std::size_t n_bad = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      const auto& trial = history[order[rank]];
      auto it = trial.assignment.find(name);
      if (it == trial.assignment.end()) continue;
      if (rank < n_good) {
        ++good_counts[it->second];
      } else {
        ++bad_counts[it->second];
        ++n_bad;
      }
    }
    const double l_denom = static_cast<double>(n_good + domain.size());
    const double g_denom = static_cast<double>(n_bad + domain.size());
    for (const auto& choice : domain) {
      d.l[choice] = (static_cast<double>(good_counts[choice]) + 1.0) / l_denom;
      d.g[choice] = (static_cast<double>(bad_counts[choice]) + 1.0) / g_denom;
      d.l_weights.push_back(d.l[choice]);
    }
    densities[name] = std::move(d);
  }

  // Draw candidates from l and rank by likelihood ratio (first draw wins
  // ties). Candidates whose assignment was already evaluated are deprioritized:
  // re-running a known assignment spends budget without information, and the
  // drawn set nearly always contains an untried combination of good-density
  // coordinates. When every drawn candidate is known, fall back to the plain
  // ratio argmax.
  std::set<std::map<std::string, std::string>> evaluated;
  for (const auto& trial : history) evaluated.insert(trial.assignment);

  std::map<std::string, std::string> best_any;
  std::map<std::string, std::string> best_new;
  double best_any_ratio = -std::numeric_limits<double>::infinity();
  double best_new_ratio = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < options.n_candidates; ++c) {
    std::map<std::string, std::string> candidate;
    double log_ratio = 0.0;
    for (auto& [name, d] : densities) {
      std::discrete_distribution<std::size_t> pick(d.l_weights.begin(), d.l_weights.end());
      const std::string& choice = d.choices[pick(rng)];
      candidate[name] = choice;
      log_ratio += std::log(d.l[choice]) - std::log(d.g[choice]);
    }
    if (log_ratio > best_any_ratio) {
      best_any_ratio = log_ratio;
      best_any = candidate;
    }
    if (!evaluated.count(candidate) && log_ratio > best_new_ratio) {
      best_new_ratio = log_ratio;
      best_new = std::move(candidate);
    }
  }
  return best_new.empty() ? best_any : best_new;
}

}  // namespace promptopt
