#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "../support.hpp"
#include "caged/eval/metrics.hpp"
#include "doctest.h"

using namespace caged;

namespace {

// Exhaustive reference: rank every unmasked item by (score desc, index asc)
// by checking all pairwise orderings, then count hits position by position.
struct Brute {
  double recall;
  double ndcg;
};

Brute brute_force(const std::vector<double>& scores, const std::set<std::uint32_t>& masked,
                  const std::set<std::uint32_t>& relevant, std::size_t k) {
  std::vector<std::uint32_t> items;
  for (std::uint32_t i = 0; i < scores.size(); ++i)
    if (!masked.count(i)) items.push_back(i);
  // Rank of item i = number of items that beat it.
  std::vector<std::pair<std::size_t, std::uint32_t>> ranked;
  for (std::uint32_t i : items) {
    std::size_t beaten_by = 0;
    for (std::uint32_t j : items)
      if (scores[j] > scores[i] || (scores[j] == scores[i] && j < i)) ++beaten_by;
    ranked.emplace_back(beaten_by, i);
  }
  double hits = 0.0, dcg = 0.0;
  for (const auto& [rank, item] : ranked) {
    if (rank < k && relevant.count(item)) {
      hits += 1.0;
      dcg += 1.0 / std::log2(static_cast<double>(rank) + 2.0);
    }
  }
  double idcg = 0.0;
  for (std::size_t p = 0; p < std::min(k, relevant.size()); ++p) idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  return {hits / static_cast<double>(relevant.size()), dcg / idcg};
}

}  // namespace

TEST_CASE("topk basics") {
  const std::vector<double> s = {0.9, 0.1, 0.5};
  CHECK(eval::topk_scores(s, 2, {}) == std::vector<std::uint32_t>{0, 2});
  const std::vector<std::uint32_t> all = {0, 1, 2};
  CHECK(eval::topk_scores(s, 2, all).empty());
  const std::vector<double> tied = {0.5, 0.7, 0.5, 0.7};
  CHECK(eval::topk_scores(tied, 3, {}) == std::vector<std::uint32_t>{1, 3, 0});
  CHECK(eval::topk_scores(tied, 10, {}).size() == 4);
}

TEST_CASE("recall and ndcg hand values") {
  const std::vector<std::uint32_t> ranked = {5, 3, 9, 1};
  CHECK(eval::recall_at_k(ranked, std::vector<std::uint32_t>{3, 9}, 20) == 1.0);
  CHECK(eval::recall_at_k(ranked, std::vector<std::uint32_t>{7, 8}, 20) == 0.0);
  CHECK(eval::recall_at_k(ranked, std::vector<std::uint32_t>{3, 8}, 20) == 0.5);
  CHECK(eval::ndcg_at_k(ranked, std::vector<std::uint32_t>{5}, 20) == 1.0);
  CHECK(std::abs(eval::ndcg_at_k(ranked, std::vector<std::uint32_t>{3}, 20) - 1.0 / std::log2(3.0)) <= 1e-12);
  CHECK(eval::ndcg_at_k(ranked, std::vector<std::uint32_t>{8}, 20) == 0.0);
  CHECK(eval::recall_at_k(ranked, std::vector<std::uint32_t>{9}, 2) == 0.0);
  CHECK_THROWS(eval::recall_at_k(ranked, {}, 20));
}

TEST_CASE("metrics match exhaustive enumeration") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> n_items(2, 10);
  std::uniform_int_distribution<int> score_level(0, 4);  // coarse levels force ties
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = static_cast<std::size_t>(n_items(rng));
    std::vector<double> s(n);
    for (double& v : s) v = 0.25 * score_level(rng);
    std::set<std::uint32_t> masked, relevant;
    for (std::uint32_t i = 0; i < n; ++i) {
      const int r = score_level(rng);
      if (r == 0) masked.insert(i);
      else if (r <= 2) relevant.insert(i);
    }
    if (relevant.empty()) relevant.insert(static_cast<std::uint32_t>(n - 1)), masked.erase(static_cast<std::uint32_t>(n - 1));
    const std::size_t k = 1 + static_cast<std::size_t>(t % 5);
    const std::vector<std::uint32_t> mask(masked.begin(), masked.end());
    const std::vector<std::uint32_t> rel(relevant.begin(), relevant.end());
    const auto ranked = eval::topk_scores(s, k, mask);
    const auto ref = brute_force(s, masked, relevant, k);
    CHECK(eval::recall_at_k(ranked, rel, k) == ref.recall);
    CHECK(eval::ndcg_at_k(ranked, rel, k) == doctest::Approx(ref.ndcg).epsilon(1e-15));
  }
}

TEST_CASE("popularity split") {
  // Items 0..9 with distinct degrees 1..10 (item i has i+1 users).
  std::vector<data::Interaction> edges;
  for (std::uint32_t i = 0; i < 10; ++i)
    for (std::uint32_t u = 0; u <= i; ++u) edges.push_back({u, i});
  const graph::InteractionGraph g(10, 10, edges);
  const auto split = eval::popularity_split(g);
  CHECK(split.popular == std::vector<std::uint32_t>{8, 9});
  CHECK(split.niche.size() == 8);

  std::vector<data::Interaction> flat = {{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}};
  const graph::InteractionGraph gf(5, 5, flat);
  CHECK(eval::popularity_split(gf).popular == std::vector<std::uint32_t>{0});
}

TEST_CASE("stratified evaluation skips empty strata") {
  // Item 0 is popular (degree 3); items 1..4 are niche.
  std::vector<data::Interaction> train = {{0, 0}, {1, 0}, {2, 0}, {0, 1}, {1, 2}, {2, 3}, {0, 4}};
  const graph::InteractionGraph g(3, 5, train);
  Matrix pooled(8, 2);
  std::mt19937_64 rng(1);
  pooled = testing::random_matrix(8, 2, rng);
  const std::vector<data::Interaction> test = {{1, 3}, {2, 4}};
  const auto report = eval::evaluate(g, pooled, test, 20, 10);
  CHECK(report.all.users == 2);
  CHECK(report.niche.users == 2);
  CHECK(report.popular.users == 0);
  CHECK(report.popular.recall == 0.0);
  // Every unmasked item fits in the top-20.
  CHECK(report.all.recall == 1.0);
}

TEST_CASE("evaluate masks train items") {
  std::vector<data::Interaction> train = {{0, 0}, {0, 1}, {1, 2}};
  const graph::InteractionGraph g(2, 3, train);
  Matrix pooled(5, 1, 1.0);
  pooled(2, 0) = 100.0;  // item 0 scores highest but is a train item of user 0
  const std::vector<data::Interaction> test = {{0, 2}};
  const auto report = eval::evaluate(g, pooled, test, 1, 10);
  CHECK(report.all.recall == 1.0);
  CHECK(eval::mean_recall(g, pooled, test, 1) == 1.0);
}

TEST_CASE("iip and histograms") {
  std::vector<data::Interaction> edges = {{0, 0}, {0, 1}, {1, 1}, {2, 1}, {3, 1}};
  const graph::InteractionGraph g(4, 2, edges);
  CHECK(eval::iip(g, 0) == 1.0);
  CHECK(eval::iip(g, 1) == 0.5);
  double prev = 2.0;
  for (double d = 1; d < 1e6; d *= 3) {
    const double v = 1.0 / std::sqrt(d);
    CHECK(v < prev);
    prev = v;
  }
  const auto h = eval::iip_histogram(g, 2);
  CHECK(h.counts == std::vector<std::size_t>{1, 1});

  std::vector<data::Interaction> ones = {{0, 0}, {1, 1}, {2, 2}};
  const graph::InteractionGraph g1(3, 3, ones);
  const auto h1 = eval::iip_histogram(g1, 10);
  CHECK(h1.counts.back() == 3);
  CHECK(h1.total() == 3);

  CHECK(eval::histogram_bin(0.5, 2) == 0);
  CHECK(eval::histogram_bin(0.51, 2) == 1);
  CHECK(eval::histogram_bin(1.0, 2) == 1);
  CHECK(eval::histogram_bin(3.0, 2) == 1);
  CHECK(eval::histogram_bin(1e-9, 4) == 0);

  // At the initial weights the edge view reduces to 1/sqrt(deg(item)) per edge.
  const auto he = eval::edge_iip_histogram(g, graph::normalized_adjacency(g), 2);
  CHECK(he.counts == std::vector<std::size_t>{4, 1});
  CHECK(he.mass_at_or_above(0.5) == 1);
}

TEST_CASE("report json layout") {
  eval::EvalReport r;
  r.k = 5;
  r.all = {0.5, 0.25, 3};
  r.iip_histogram.bins = 2;
  r.iip_histogram.counts = {1, 2};
  const std::string json = eval::report_to_json(r);
  CHECK(json.find("\"k\": 5") != std::string::npos);
  CHECK(json.find("\"niche\"") != std::string::npos);
  CHECK(json.find("\"iip_histogram\"") != std::string::npos);
}
