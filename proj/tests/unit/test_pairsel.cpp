#include <doctest.h>

#include <bit>
#include <numeric>
#include <set>
#include <sstream>

#include "gem/error.hpp"
#include "gem/pairsel.hpp"
#include "gem/rng.hpp"

using namespace gem;

namespace {

bool symmetric(const PairPlan& plan) {
  std::set<ClassPair> s(plan.pairs.begin(), plan.pairs.end());
  for (const auto& p : plan.pairs) {
    if (!s.contains({p.denominator, p.numerator})) return false;
  }
  return true;
}

bool covers(const PairPlan& plan, std::size_t k) {
  std::vector<bool> seen(k);
  for (const auto& p : plan.pairs) seen[p.numerator] = seen[p.denominator] = true;
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

bool valid(const PairPlan& plan, std::size_t k) {
  std::set<ClassPair> s(plan.pairs.begin(), plan.pairs.end());
  if (s.size() != plan.pairs.size()) return false;
  for (const auto& p : plan.pairs) {
    if (p.numerator >= k || p.denominator >= k || p.numerator == p.denominator) return false;
  }
  return std::is_sorted(plan.pairs.begin(), plan.pairs.end());
}

/// Re-derives the vertex assignment from the seed and counts Hamming-1
/// neighbors plus isolated-vertex fallbacks by exhaustive scan.
std::size_t brute_hypercube_size(std::size_t k, std::uint64_t seed) {
  const unsigned bits = static_cast<unsigned>(std::bit_width(k - 1));
  std::vector<std::size_t> place(std::size_t{1} << bits);
  std::iota(place.begin(), place.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span(place));
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < k; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < k; ++j) {
      if (i != j && std::popcount(place[i] ^ place[j]) == 1) {
        pairs.insert({i, j});
        pairs.insert({j, i});
        any = true;
      }
    }
    if (!any) {
      std::size_t best = k;
      for (std::size_t j = 0; j < k; ++j) {
        if (j == i) continue;
        if (best == k || std::popcount(place[i] ^ place[j]) < std::popcount(place[i] ^ place[best])) best = j;
      }
      pairs.insert({i, best});
      pairs.insert({best, i});
    }
  }
  return pairs.size();
}

}  // namespace

TEST_SUITE("pairsel") {
  TEST_CASE("all pairs") {
    const auto p3 = all_pairs(3);
    const std::vector<ClassPair> want = {{0, 1}, {0, 2}, {1, 0}, {1, 2}, {2, 0}, {2, 1}};
    CHECK(p3.pairs == want);
    CHECK(all_pairs(2).size() == 2);
    CHECK(all_pairs(10).size() == 90);
    CHECK_THROWS_AS(all_pairs(1), ConfigError);
  }

  TEST_CASE("hypercube sizes for powers of two") {
    for (std::uint64_t seed : {0u, 1u, 2u, 99u}) {
      CHECK(hypercube_pairs(4, seed).size() == 8);
      CHECK(hypercube_pairs(8, seed).size() == 24);
      CHECK(hypercube_pairs(16, seed).size() == 64);
      CHECK(hypercube_pairs(2, seed).size() == 2);
    }
  }

  TEST_CASE("hypercube with unoccupied vertices matches an exhaustive scan") {
    for (std::size_t k : {3u, 5u, 6u, 7u, 11u, 13u, 183u}) {
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto plan = hypercube_pairs(k, seed);
        CAPTURE(k);
        CAPTURE(seed);
        CHECK(plan.size() == brute_hypercube_size(k, seed));
        CHECK(symmetric(plan));
        CHECK(covers(plan, k));
        CHECK(valid(plan, k));
        CHECK(plan.strategy == PairStrategy::hypercube);
      }
    }
    // Frozen from the scan above: k = 5, seed = 0.
    CHECK(hypercube_pairs(5, 0).size() == brute_hypercube_size(5, 0));
  }

  TEST_CASE("hypercube is deterministic and seed dependent") {
    CHECK(hypercube_pairs(16, 7) == hypercube_pairs(16, 7));
    CHECK(hypercube_pairs(16, 7).pairs != hypercube_pairs(16, 8).pairs);
  }

  TEST_CASE("random pairs") {
    const auto full = random_pairs(5, 20, 3, false);
    CHECK(full.pairs == all_pairs(5).pairs);
    const auto some = random_pairs(6, 11, 4, false);
    CHECK(some.size() == 11);
    CHECK(valid(some, 6));
    CHECK(random_pairs(6, 11, 4, false) == some);
    CHECK_THROWS_AS(random_pairs(4, 0, 0, false), ConfigError);
    CHECK_THROWS_AS(random_pairs(4, 13, 0, false), ConfigError);
  }

  TEST_CASE("stratified pairs balance numerators and denominators") {
    const auto four = random_pairs(4, 4, 1, true);
    std::vector<int> num(4), den(4);
    for (const auto& p : four.pairs) {
      ++num[p.numerator];
      ++den[p.denominator];
    }
    for (int c = 0; c < 4; ++c) {
      CHECK(num[c] == 1);
      CHECK(den[c] == 1);
    }
    for (std::size_t k : {3u, 5u, 9u}) {
      for (std::size_t count = 1; count <= k * (k - 1); ++count) {
        const auto plan = random_pairs(k, count, count * 31 + k, true);
        REQUIRE(plan.size() == count);
        CHECK(valid(plan, k));
        std::vector<std::size_t> n(k), d(k);
        for (const auto& p : plan.pairs) {
          ++n[p.numerator];
          ++d[p.denominator];
        }
        const auto [nlo, nhi] = std::minmax_element(n.begin(), n.end());
        const auto [dlo, dhi] = std::minmax_element(d.begin(), d.end());
        CHECK(*nhi - *nlo <= 1);
        CHECK(*dhi - *dlo <= 1);
      }
    }
  }

  TEST_CASE("text plans round trip") {
    const auto plan = hypercube_pairs(7, 5);
    std::stringstream s;
    write_plan(s, plan);
    const auto back = read_plan(s, 7);
    CHECK(back.pairs == plan.pairs);
    CHECK(back.strategy == PairStrategy::listed);

    std::istringstream comment("# header\n1 2\n\n2 1 # back\n");
    CHECK(read_plan(comment, 2).size() == 2);
    std::istringstream dup("1 2\n1 2\n");
    CHECK_THROWS_AS(read_plan(dup, 3), FormatError);
    std::istringstream self("2 2\n");
    CHECK_THROWS_AS(read_plan(self, 3), FormatError);
    std::istringstream range("1 4\n");
    CHECK_THROWS_AS(read_plan(range, 3), FormatError);
  }

  TEST_CASE("make_plan dispatches on the strategy") {
    PairSpec spec;
    CHECK(make_plan(spec, 4) == all_pairs(4));
    spec.strategy = PairStrategy::hypercube;
    spec.seed = 3;
    CHECK(make_plan(spec, 8) == hypercube_pairs(8, 3));
    spec.strategy = PairStrategy::stratified;
    CHECK(make_plan(spec, 8).size() == 8);
    spec.strategy = PairStrategy::listed;
    spec.listed = {{1, 0}, {0, 1}};
    CHECK(make_plan(spec, 2).size() == 2);
    CHECK(parse_pair_strategy("hypercube") == PairStrategy::hypercube);
    CHECK_THROWS_AS(parse_pair_strategy("nearest"), ConfigError);
  }
}
