#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "caged/core/matrix.hpp"
#include "caged/data/ingest.hpp"
#include "caged/graph/aggregation.hpp"
#include "caged/graph/graph.hpp"

namespace caged::testing {

// Random bipartite edge list over M users and N items; every user gets at
// least one edge so the graph has no isolated user rows.
inline std::vector<data::Interaction> random_edges(std::size_t m, std::size_t n, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(density);
  std::uniform_int_distribution<std::uint32_t> any_item(0, static_cast<std::uint32_t>(n - 1));
  std::set<data::Interaction> edges;
  for (std::uint32_t u = 0; u < m; ++u) {
    for (std::uint32_t i = 0; i < n; ++i)
      if (keep(rng)) edges.insert({u, i});
    edges.insert({u, any_item(rng)});
  }
  return {edges.begin(), edges.end()};
}

inline graph::InteractionGraph random_graph(std::size_t m, std::size_t n, double density, std::mt19937_64& rng) {
  const auto edges = random_edges(m, n, density, rng);
  return graph::InteractionGraph(m, n, edges);
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix out(rows, cols);
  for (double& v : out.flat()) v = g(rng);
  return out;
}

// Dense (M+N) x (M+N) copy of a sparse aggregation matrix.
inline Matrix to_dense(const graph::AggregationMatrix& w) {
  const std::size_t n = w.num_nodes();
  Matrix d(n, n);
  for (graph::Node v = 0; v < n; ++v) {
    const auto cols = w.pattern().row(v);
    const auto vals = w.row_values(v);
    for (std::size_t j = 0; j < cols.size(); ++j) d(v, cols[j]) = vals[j];
  }
  return d;
}

inline Matrix dense_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k)
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += a(i, k) * b(k, j);
  return c;
}

inline double max_abs_diff(ConstMatrixView a, ConstMatrixView b) {
  double worst = 0.0;
  const auto fa = a.flat();
  const auto fb = b.flat();
  for (std::size_t i = 0; i < fa.size(); ++i) worst = std::max(worst, std::abs(fa[i] - fb[i]));
  return worst;
}

}  // namespace caged::testing
