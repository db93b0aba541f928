#include "caged/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "caged/simd/kernels.hpp"
#include "json.hpp"

namespace caged::eval {

std::vector<std::uint32_t> topk_scores(std::span<const double> scores, std::size_t k,
                                       std::span<const std::uint32_t> masked) {
  if (k == 0) throw std::invalid_argument("topk: k must be >= 1");
  std::vector<char> skip(scores.size(), 0);
  for (auto i : masked)
    if (i < skip.size()) skip[i] = 1;
  std::vector<std::uint32_t> cand;
  cand.reserve(scores.size());
  for (std::uint32_t i = 0; i < scores.size(); ++i)
    if (!skip[i]) cand.push_back(i);
  const auto better = [&](std::uint32_t a, std::uint32_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  const std::size_t n = std::min(k, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(n), cand.end(), better);
  cand.resize(n);
  return cand;
}

std::vector<std::uint32_t> topk(ConstMatrixView pooled, std::size_t num_users, std::uint32_t user, std::size_t k,
                                std::span<const std::uint32_t> masked) {
  const std::size_t num_items = pooled.rows() - num_users;
  std::vector<double> scores(num_items);
  const auto& kern = simd::active();
  const auto u = pooled.row(user);
  for (std::size_t i = 0; i < num_items; ++i) scores[i] = kern.dot(u.data(), pooled.row(num_users + i).data(), u.size());
  return topk_scores(scores, k, masked);
}

namespace {

std::size_t count_hits(std::span<const std::uint32_t> ranked, std::span<const std::uint32_t> relevant, std::size_t k,
                       double* dcg) {
  std::size_t hits = 0;
  const std::size_t n = std::min(k, ranked.size());
  for (std::size_t p = 0; p < n; ++p) {
    if (std::find(relevant.begin(), relevant.end(), ranked[p]) != relevant.end()) {
      ++hits;
      if (dcg) *dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
    }
  }
  return hits;
}

}  // namespace

double recall_at_k(std::span<const std::uint32_t> ranked, std::span<const std::uint32_t> relevant, std::size_t k) {
  if (relevant.empty()) throw std::invalid_argument("recall_at_k: relevant set is empty");
  return static_cast<double>(count_hits(ranked, relevant, k, nullptr)) / static_cast<double>(relevant.size());
}

double ndcg_at_k(std::span<const std::uint32_t> ranked, std::span<const std::uint32_t> relevant, std::size_t k) {
  if (relevant.empty()) throw std::invalid_argument("ndcg_at_k: relevant set is empty");
  double dcg = 0.0;
  count_hits(ranked, relevant, k, &dcg);
  double idcg = 0.0;
  const std::size_t ideal = std::min(k, relevant.size());
  for (std::size_t p = 0; p < ideal; ++p) idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  return dcg / idcg;
}

PopularitySplit popularity_split(const graph::InteractionGraph& graph) {
  const std::size_t n = graph.num_items();
  std::vector<std::uint32_t> active;
  for (std::uint32_t i = 0; i < n; ++i)
    if (graph.item_degree(i) > 0) active.push_back(i);
  std::stable_sort(active.begin(), active.end(), [&](std::uint32_t a, std::uint32_t b) {
    return graph.item_degree(a) > graph.item_degree(b);
  });
  const auto n_pop = static_cast<std::size_t>(std::ceil(0.2 * static_cast<double>(active.size()) - 1e-9));
  PopularitySplit s;
  s.is_popular.assign(n, 0);
  for (std::size_t r = 0; r < active.size(); ++r) {
    if (r < n_pop) {
      s.popular.push_back(active[r]);
      s.is_popular[active[r]] = 1;
    } else {
      s.niche.push_back(active[r]);
    }
  }
  std::sort(s.popular.begin(), s.popular.end());
  std::sort(s.niche.begin(), s.niche.end());
  return s;
}

double iip(const graph::InteractionGraph& graph, std::uint32_t item) {
  const std::size_t d = graph.item_degree(item);
  if (d == 0) throw std::domain_error("iip: item has no train interactions");
  return 1.0 / std::sqrt(static_cast<double>(d));
}

std::size_t Histogram::total() const {
  std::size_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

std::size_t Histogram::mass_at_or_above(double threshold) const {
  std::size_t t = 0;
  for (std::size_t b = 0; b < bins; ++b)
    if (bin_left(b) >= threshold - 1e-12) t += counts[b];
  return t;
}

std::size_t histogram_bin(double v, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("histogram: bins must be >= 1");
  const double scaled = std::ceil(v * static_cast<double>(bins)) - 1.0;
  if (!(scaled > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(scaled), bins - 1);
}

Histogram iip_histogram(const graph::InteractionGraph& graph, std::size_t bins) {
  Histogram h{bins, std::vector<std::size_t>(bins, 0)};
  for (std::uint32_t i = 0; i < graph.num_items(); ++i) {
    if (graph.item_degree(i) == 0) continue;
    h.counts[histogram_bin(iip(graph, i), bins)] += 1;
  }
  return h;
}

Histogram edge_iip_histogram(const graph::InteractionGraph& graph, const graph::AggregationMatrix& weights,
                             std::size_t bins) {
  Histogram h{bins, std::vector<std::size_t>(bins, 0)};
  const auto& p = graph.pattern();
  for (graph::Node u = 0; u < graph.num_users(); ++u) {
    const double scale = std::sqrt(static_cast<double>(graph.degree(u)));
    for (std::size_t e = p.offsets[u]; e < p.offsets[u + 1]; ++e)
      h.counts[histogram_bin(weights.values()[e] * scale, bins)] += 1;
  }
  return h;
}

namespace {

// relevant pairs grouped by user, item lists sorted.
std::vector<std::vector<std::uint32_t>> group_by_user(std::size_t num_users, std::span<const data::Interaction> pairs) {
  std::vector<std::vector<std::uint32_t>> g(num_users);
  for (const auto& p : pairs) g.at(p.user).push_back(p.item);
  for (auto& v : g) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return g;
}

std::vector<std::uint32_t> user_mask(const graph::InteractionGraph& graph, std::uint32_t u,
                                     std::span<const std::uint32_t> zero_degree) {
  std::vector<std::uint32_t> mask(zero_degree.begin(), zero_degree.end());
  const auto m = static_cast<graph::Node>(graph.num_users());
  for (graph::Node x : graph.neighbors(graph.user_node(u))) mask.push_back(x - m);
  return mask;
}

void accumulate(StratumMetrics& s, double r, double n) {
  s.recall += r;
  s.ndcg += n;
  s.users += 1;
}

void finish(StratumMetrics& s) {
  if (s.users == 0) return;
  s.recall /= static_cast<double>(s.users);
  s.ndcg /= static_cast<double>(s.users);
}

}  // namespace

EvalReport evaluate(const graph::InteractionGraph& graph, ConstMatrixView pooled,
                    std::span<const data::Interaction> relevant, std::size_t k, std::size_t bins) {
  if (pooled.rows() != graph.num_nodes()) throw std::invalid_argument("evaluate: embedding rows do not match graph");
  EvalReport r;
  r.k = k;
  const auto split = popularity_split(graph);
  std::vector<std::uint32_t> zero_degree;
  for (std::uint32_t i = 0; i < graph.num_items(); ++i)
    if (graph.item_degree(i) == 0) zero_degree.push_back(i);
  const auto by_user = group_by_user(graph.num_users(), relevant);
  for (std::uint32_t u = 0; u < graph.num_users(); ++u) {
    const auto& rel = by_user[u];
    if (rel.empty()) continue;
    const auto mask = user_mask(graph, u, zero_degree);
    const auto ranked = topk(pooled, graph.num_users(), u, k, mask);
    const double rc = recall_at_k(ranked, rel, k);
    const double nd = ndcg_at_k(ranked, rel, k);
    accumulate(r.all, rc, nd);
    r.users.push_back(u);
    r.user_recall.push_back(rc);
    r.user_ndcg.push_back(nd);

    std::vector<std::uint32_t> pop, niche;
    for (auto i : rel) {
      if (split.is_popular[i]) pop.push_back(i);
      else if (graph.item_degree(i) > 0) niche.push_back(i);
    }
    if (!pop.empty()) accumulate(r.popular, recall_at_k(ranked, pop, k), ndcg_at_k(ranked, pop, k));
    if (!niche.empty()) accumulate(r.niche, recall_at_k(ranked, niche, k), ndcg_at_k(ranked, niche, k));
  }
  finish(r.all);
  finish(r.niche);
  finish(r.popular);
  r.iip_histogram = iip_histogram(graph, bins);
  return r;
}

double mean_recall(const graph::InteractionGraph& graph, ConstMatrixView pooled,
                   std::span<const data::Interaction> relevant, std::size_t k) {
  std::vector<std::uint32_t> zero_degree;
  for (std::uint32_t i = 0; i < graph.num_items(); ++i)
    if (graph.item_degree(i) == 0) zero_degree.push_back(i);
  const auto by_user = group_by_user(graph.num_users(), relevant);
  double sum = 0.0;
  std::size_t users = 0;
  for (std::uint32_t u = 0; u < graph.num_users(); ++u) {
    if (by_user[u].empty()) continue;
    const auto ranked = topk(pooled, graph.num_users(), u, k, user_mask(graph, u, zero_degree));
    sum += recall_at_k(ranked, by_user[u], k);
    ++users;
  }
  return users == 0 ? 0.0 : sum / static_cast<double>(users);
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["k"] = report.k;
  auto stratum = [](const StratumMetrics& s) {
    nlohmann::ordered_json o;
    o["recall"] = s.recall;
    o["ndcg"] = s.ndcg;
    o["users"] = s.users;
    return o;
  };
  j["all"] = stratum(report.all);
  j["niche"] = stratum(report.niche);
  j["popular"] = stratum(report.popular);
  j["iip_histogram"] = {{"bins", report.iip_histogram.bins}, {"counts", report.iip_histogram.counts}};
  return j.dump(2);
}

void write_histogram_csv(const Histogram& hist, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "bin_left,bin_right,count\n";
  for (std::size_t b = 0; b < hist.bins; ++b) out << hist.bin_left(b) << ',' << hist.bin_right(b) << ',' << hist.counts[b] << '\n';
}

}  // namespace caged::eval
