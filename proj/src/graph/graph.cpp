#include "caged/graph/graph.hpp"

#include <algorithm>
#include <stdexcept>

namespace caged::graph {

std::size_t SparsePattern::find(Node v, Node x) const {
  const auto r = row(v);
  const auto it = std::lower_bound(r.begin(), r.end(), x);
  if (it == r.end() || *it != x) return nnz();
  return offsets[v] + static_cast<std::size_t>(it - r.begin());
}

InteractionGraph::InteractionGraph(std::size_t num_users, std::size_t num_items,
                                   std::span<const data::Interaction> edges) {
  auto p = std::make_shared<SparsePattern>();
  p->num_users = num_users;
  p->num_items = num_items;
  const std::size_t n = num_users + num_items;

  std::vector<std::vector<Node>> adj(n);
  for (const auto& e : edges) {
    if (e.user >= num_users || e.item >= num_items) throw std::out_of_range("build_graph: index out of range");
    const Node u = e.user;
    const Node i = static_cast<Node>(num_users + e.item);
    adj[u].push_back(i);
    adj[i].push_back(u);
  }
  p->offsets.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) {
    auto& row = adj[v];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    p->offsets[v + 1] = p->offsets[v] + row.size();
  }
  p->cols.reserve(p->offsets[n]);
  for (auto& row : adj) p->cols.insert(p->cols.end(), row.begin(), row.end());

  p->reverse.resize(p->cols.size());
  for (Node v = 0; v < n; ++v) {
    for (std::size_t e = p->offsets[v]; e < p->offsets[v + 1]; ++e) p->reverse[e] = p->find(p->cols[e], v);
  }
  pattern_ = std::move(p);
}

InteractionGraph build_graph(const data::IndexedDataset& dataset) {
  return InteractionGraph(dataset.num_users, dataset.num_items, dataset.train);
}

}  // namespace caged::graph
