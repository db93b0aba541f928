#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "caged/core/matrix.hpp"
#include "caged/core/rng.hpp"
#include "caged/graph/aggregation.hpp"
#include "caged/graph/graph.hpp"
#include "caged/optim/param_store.hpp"

namespace caged::gcn {

/// One BPR training example: user, a train positive, a sampled negative (item indices).
struct Triplet {
  std::uint32_t user;
  std::uint32_t pos;
  std::uint32_t neg;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

/// Throws std::invalid_argument unless every pos is a train neighbour of its
/// user and every neg is not.
void validate_batch(const graph::InteractionGraph& graph, std::span<const Triplet> batch);

/// Layer snapshots E^(0..L) with E^(l) = W E^(l-1).
std::vector<Matrix> propagate(const graph::AggregationMatrix& weights, ConstMatrixView e0, int layers);

/// Arithmetic mean over layer snapshots.
Matrix pool(std::span<const Matrix> snapshots);

/// Convenience: pool(propagate(weights, e0, layers)).
Matrix pooled_embeddings(const graph::AggregationMatrix& weights, ConstMatrixView e0, int layers);

/// Inner product of user row u and item row M + i.
double score(ConstMatrixView pooled, std::size_t num_users, std::uint32_t user, std::uint32_t item);

/// -ln sigmoid(x), evaluated without overflow.
double neg_log_sigmoid(double x);

/// sum over triplets of -ln sigmoid(s(u,i) - s(u,j)) + gamma * ||theta||^2.
double bpr_loss(std::span<const Triplet> batch, ConstMatrixView pooled, std::size_t num_users, double gamma,
                const optim::ParamStore& theta);

struct BprGradient {
  double loss = 0.0;  // same value bpr_loss reports, regulariser included
  Matrix grad_e0;
};

/// Analytic gradient of the full chain loss -> pooling -> L propagation steps
/// -> E^(0). Only E^(0) is regularised. The backward pass applies W^T per layer.
BprGradient bpr_backward(std::span<const Triplet> batch, ConstMatrixView e0, const graph::AggregationMatrix& weights,
                         int layers, double gamma);

/// Zero-mean Gaussian initial embeddings, (M+N) x K.
Matrix init_embeddings(std::size_t num_nodes, std::size_t dim, double stddev, Rng& rng);

/// One uniform negative per positive, rejection-sampled against the user's
/// train neighbours. Positives whose user has interacted with every item are skipped.
std::vector<Triplet> sample_triplets(const graph::InteractionGraph& graph, std::span<const data::Interaction> positives,
                                     Rng& rng);

}  // namespace caged::gcn
