#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "caged/core/matrix.hpp"
#include "caged/data/ingest.hpp"
#include "caged/graph/aggregation.hpp"
#include "caged/graph/graph.hpp"

namespace caged::eval {

/// Indices of the k highest scores, excluding `masked` items. Ties go to the
/// lower index. Returns fewer than k items when not enough remain.
std::vector<std::uint32_t> topk_scores(std::span<const double> scores, std::size_t k,
                                       std::span<const std::uint32_t> masked);
std::vector<std::uint32_t> topk(ConstMatrixView pooled, std::size_t num_users, std::uint32_t user, std::size_t k,
                                std::span<const std::uint32_t> masked);

/// |top-k ∩ relevant| / |relevant|. `relevant` must be non-empty.
double recall_at_k(std::span<const std::uint32_t> ranked, std::span<const std::uint32_t> relevant, std::size_t k);
/// DCG / IDCG with 1/log2(p + 1) gains at 1-based positions.
double ndcg_at_k(std::span<const std::uint32_t> ranked, std::span<const std::uint32_t> relevant, std::size_t k);

struct PopularitySplit {
  std::vector<std::uint32_t> popular;  // ascending item index
  std::vector<std::uint32_t> niche;    // ascending item index
  std::vector<char> is_popular;        // per item; 0 for degree-0 items
};

/// Top ceil(20%) of items with train degree >= 1 by degree (ties: lower index) are popular.
PopularitySplit popularity_split(const graph::InteractionGraph& graph);

/// 1 / sqrt(train degree). Throws std::domain_error at degree 0.
double iip(const graph::InteractionGraph& graph, std::uint32_t item);

struct Histogram {
  std::size_t bins = 0;
  std::vector<std::size_t> counts;

  double bin_left(std::size_t b) const { return static_cast<double>(b) / static_cast<double>(bins); }
  double bin_right(std::size_t b) const { return static_cast<double>(b + 1) / static_cast<double>(bins); }
  std::size_t total() const;
  // Mass in bins whose left edge is >= threshold.
  std::size_t mass_at_or_above(double threshold) const;

  friend bool operator==(const Histogram&, const Histogram&) = default;
};

/// Bin index for v in equal-width right-closed bins over (0, 1]; values above
/// 1 land in the last bin.
std::size_t histogram_bin(double v, std::size_t bins);

/// IIP of every item with train degree >= 1.
Histogram iip_histogram(const graph::InteractionGraph& graph, std::size_t bins);

/// IIP as seen through the current aggregation weights: for each user row u and
/// item x, weights[u, x] * sqrt(deg(u)). At D^{-1/2} A D^{-1/2} this is
/// 1 / sqrt(deg(x)) for every edge.
Histogram edge_iip_histogram(const graph::InteractionGraph& graph, const graph::AggregationMatrix& weights,
                             std::size_t bins);

struct StratumMetrics {
  double recall = 0.0;
  double ndcg = 0.0;
  std::size_t users = 0;  // users with a non-empty relevant set in this stratum
};

struct EvalReport {
  std::size_t k = 20;
  StratumMetrics all;
  StratumMetrics niche;
  StratumMetrics popular;
  // Per eligible user (all-items stratum), ascending user index.
  std::vector<std::uint32_t> users;
  std::vector<double> user_recall;
  std::vector<double> user_ndcg;
  Histogram iip_histogram;
};

/// Ranks every item for every user holding relevant pairs, masking the user's
/// train items and zero-degree items. Strata restrict the relevant set only.
EvalReport evaluate(const graph::InteractionGraph& graph, ConstMatrixView pooled,
                    std::span<const data::Interaction> relevant, std::size_t k, std::size_t bins);

/// All-items Recall@k only (validation gate).
double mean_recall(const graph::InteractionGraph& graph, ConstMatrixView pooled,
                   std::span<const data::Interaction> relevant, std::size_t k);

/// {"k", "all", "niche", "popular", "iip_histogram"} as documented in the README.
std::string report_to_json(const EvalReport& report);
/// CSV header bin_left,bin_right,count.
void write_histogram_csv(const Histogram& hist, const std::filesystem::path& file);

}  // namespace caged::eval
