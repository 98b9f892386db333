#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace gem {

/// Ordered class pair (numerator, denominator), 0-based.
struct ClassPair {
  std::uint32_t numerator = 0;
  std::uint32_t denominator = 0;

  friend auto operator<=>(const ClassPair&, const ClassPair&) = default;
};

enum class PairStrategy : std::uint32_t { all = 0, hypercube = 1, random = 2, stratified = 3, listed = 4 };

std::string_view to_string(PairStrategy s);
PairStrategy parse_pair_strategy(std::string_view text);

/// The ordered class pairs whose generalized eigenvectors are extracted.
/// Pairs are unique and sorted lexicographically.
struct PairPlan {
  std::vector<ClassPair> pairs;
  PairStrategy strategy = PairStrategy::all;
  std::uint64_t seed = 0;

  std::size_t size() const { return pairs.size(); }
  friend bool operator==(const PairPlan&, const PairPlan&) = default;
};

/// All k(k-1) ordered pairs.
PairPlan all_pairs(std::size_t k);

/// Labels placed on random distinct vertices of the ceil(log2 k)-cube;
/// both orientations of every Hamming-distance-1 edge. An occupied vertex
/// without an occupied neighbor is linked to its nearest occupied vertex
/// (lowest label on ties).
PairPlan hypercube_pairs(std::size_t k, std::uint64_t seed);

/// `count` distinct ordered pairs. In stratified mode every class appears
/// floor(count/k) or ceil(count/k) times as numerator and as denominator.
PairPlan random_pairs(std::size_t k, std::size_t count, std::uint64_t seed, bool stratified);

/// Text form: one "i j" line per pair with 1-based class indices; blank
/// lines and '#' comments are ignored.
void write_plan(std::ostream& out, const PairPlan& plan);
PairPlan read_plan(std::istream& in, std::size_t k);

/// How a plan is produced from the class count.
struct PairSpec {
  PairStrategy strategy = PairStrategy::all;
  std::uint64_t seed = 0;
  std::size_t count = 0;            // random / stratified; 0 means k
  std::vector<ClassPair> listed;    // explicit plan

  friend bool operator==(const PairSpec&, const PairSpec&) = default;
};

PairPlan make_plan(const PairSpec& spec, std::size_t k);

}  // namespace gem
