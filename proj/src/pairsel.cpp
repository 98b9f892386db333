#include "gem/pairsel.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "gem/error.hpp"
#include "gem/rng.hpp"

namespace gem {
namespace {

void require_classes(std::size_t k) {
  if (k < 2) throw ConfigError("pair selection needs at least 2 classes, got " + std::to_string(k));
}

ClassPair make_pair(std::size_t i, std::size_t j) {
  return {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)};
}

}  // namespace

std::string_view to_string(PairStrategy s) {
  switch (s) {
    case PairStrategy::all:
      return "all";
    case PairStrategy::hypercube:
      return "hypercube";
    case PairStrategy::random:
      return "random";
    case PairStrategy::stratified:
      return "stratified";
    case PairStrategy::listed:
      return "listed";
  }
  return "unknown";
}

PairStrategy parse_pair_strategy(std::string_view text) {
  for (auto s : {PairStrategy::all, PairStrategy::hypercube, PairStrategy::random, PairStrategy::stratified,
                 PairStrategy::listed}) {
    if (text == to_string(s)) return s;
  }
  throw ConfigError("unknown pair strategy '" + std::string(text) + "'");
}

PairPlan all_pairs(std::size_t k) {
  require_classes(k);
  PairPlan plan;
  plan.strategy = PairStrategy::all;
  plan.pairs.reserve(k * (k - 1));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i != j) plan.pairs.push_back(make_pair(i, j));
    }
  }
  return plan;
}

PairPlan hypercube_pairs(std::size_t k, std::uint64_t seed) {
  require_classes(k);
  const unsigned bits = static_cast<unsigned>(std::bit_width(k - 1));
  const std::size_t vertices = std::size_t{1} << bits;

  std::vector<std::size_t> place(vertices);
  std::iota(place.begin(), place.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span(place));

  constexpr std::size_t kEmpty = static_cast<std::size_t>(-1);
  std::vector<std::size_t> occupant(vertices, kEmpty);
  for (std::size_t label = 0; label < k; ++label) occupant[place[label]] = label;

  std::set<ClassPair> pairs;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t v = place[i];
    bool linked = false;
    for (unsigned b = 0; b < bits; ++b) {
      const std::size_t j = occupant[v ^ (std::size_t{1} << b)];
      if (j != kEmpty) {
        pairs.insert(make_pair(i, j));
        pairs.insert(make_pair(j, i));
        linked = true;
      }
    }
    if (linked) continue;
    std::size_t best = kEmpty;
    int best_distance = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j == i) continue;
      const int distance = std::popcount(v ^ place[j]);
      if (best == kEmpty || distance < best_distance) {
        best = j;
        best_distance = distance;
      }
    }
    pairs.insert(make_pair(i, best));
    pairs.insert(make_pair(best, i));
  }

  PairPlan plan;
  plan.strategy = PairStrategy::hypercube;
  plan.seed = seed;
  plan.pairs.assign(pairs.begin(), pairs.end());
  return plan;
}

PairPlan random_pairs(std::size_t k, std::size_t count, std::uint64_t seed, bool stratified) {
  require_classes(k);
  const std::size_t total = k * (k - 1);
  if (count < 1 || count > total) {
    throw ConfigError("pair count " + std::to_string(count) + " outside [1, " + std::to_string(total) + "]");
  }
  Rng rng(seed);
  PairPlan plan;
  plan.seed = seed;
  plan.strategy = stratified ? PairStrategy::stratified : PairStrategy::random;

  if (!stratified) {
    auto candidates = all_pairs(k).pairs;
    for (std::size_t i = 0; i < count; ++i) {
      std::swap(candidates[i], candidates[i + rng.below(total - i)]);
    }
    candidates.resize(count);
    std::sort(candidates.begin(), candidates.end());
    plan.pairs = std::move(candidates);
    return plan;
  }

  // Each cyclic shift of a random class order pairs every class once as
  // numerator and once as denominator; distinct shifts give distinct pairs.
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span(order));
  std::vector<std::size_t> shifts(k - 1);
  std::iota(shifts.begin(), shifts.end(), 1);
  rng.shuffle(std::span(shifts));

  const std::size_t full = count / k;
  const std::size_t rest = count % k;
  for (std::size_t s = 0; s < full; ++s) {
    for (std::size_t t = 0; t < k; ++t) plan.pairs.push_back(make_pair(order[t], order[(t + shifts[s]) % k]));
  }
  for (std::size_t t = 0; t < rest; ++t) plan.pairs.push_back(make_pair(order[t], order[(t + shifts[full]) % k]));
  std::sort(plan.pairs.begin(), plan.pairs.end());
  return plan;
}

void write_plan(std::ostream& out, const PairPlan& plan) {
  for (const auto& p : plan.pairs) out << (p.numerator + 1) << ' ' << (p.denominator + 1) << '\n';
}

PairPlan read_plan(std::istream& in, std::size_t k) {
  require_classes(k);
  std::set<ClassPair> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    long long i = 0, j = 0;
    if (!(fields >> i)) continue;
    std::string extra;
    if (!(fields >> j) || (fields >> extra)) throw FormatError("expected 'i j' in pair plan", lineno);
    if (i < 1 || j < 1 || static_cast<std::size_t>(i) > k || static_cast<std::size_t>(j) > k) {
      throw FormatError("class index outside [1, " + std::to_string(k) + "] in pair plan", lineno);
    }
    if (i == j) throw FormatError("pair plan contains a self pair", lineno);
    if (!seen.insert(make_pair(i - 1, j - 1)).second) throw FormatError("duplicate pair in pair plan", lineno);
  }
  if (seen.empty()) throw FormatError("pair plan is empty");
  PairPlan plan;
  plan.strategy = PairStrategy::listed;
  plan.pairs.assign(seen.begin(), seen.end());
  return plan;
}

PairPlan make_plan(const PairSpec& spec, std::size_t k) {
  switch (spec.strategy) {
    case PairStrategy::all:
      return all_pairs(k);
    case PairStrategy::hypercube:
      return hypercube_pairs(k, spec.seed);
    case PairStrategy::random:
    case PairStrategy::stratified:
      return random_pairs(k, spec.count ? spec.count : k, spec.seed, spec.strategy == PairStrategy::stratified);
    case PairStrategy::listed: {
      require_classes(k);
      std::set<ClassPair> pairs;
      for (const auto& p : spec.listed) {
        if (p.numerator >= k || p.denominator >= k || p.numerator == p.denominator) {
          throw ConfigError("listed pair outside the class range");
        }
        pairs.insert(p);
      }
      if (pairs.empty()) throw ConfigError("listed pair plan is empty");
      PairPlan plan;
      plan.strategy = PairStrategy::listed;
      plan.pairs.assign(pairs.begin(), pairs.end());
      return plan;
    }
  }
  throw ConfigError("unknown pair strategy");
}

}  // namespace gem
