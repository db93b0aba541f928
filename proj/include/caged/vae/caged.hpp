#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "caged/core/matrix.hpp"
#include "caged/core/rng.hpp"
#include "caged/graph/aggregation.hpp"
#include "caged/graph/graph.hpp"
#include "caged/optim/param_store.hpp"

namespace caged::vae {

inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;

/// Widths of an n-layer MLP from `in` to `out`: hidden widths double from
/// `base` up to the midpoint and halve back down. For n = 3 and base = 2K this
/// gives 2K -> 4K -> 2K -> out.
std::vector<std::size_t> mlp_widths(std::size_t in, std::size_t out, std::size_t base, int layers);

/// Encoder 2K -> ... -> 2K (mu | log_var) and decoder 2K -> ... -> K, ReLU
/// between affine layers and none on the outputs. Weights are out x in.
class CagedParams {
 public:
  // All-zero parameters.
  explicit CagedParams(std::size_t dim, int layers = 3);
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  static CagedParams random(std::size_t dim, int layers, Rng& rng);
  // Adopts a stored record; throws if names or shapes do not match (dim, layers).
  static CagedParams from_store(optim::ParamStore store);

  std::size_t dim() const { return dim_; }
  int layers() const { return layers_; }
  const std::vector<std::size_t>& encoder_widths() const { return enc_widths_; }
  const std::vector<std::size_t>& decoder_widths() const { return dec_widths_; }

  optim::ParamStore& store() { return store_; }
  const optim::ParamStore& store() const { return store_; }

  std::size_t encoder_weight(int l) const { return static_cast<std::size_t>(2 * l); }
  std::size_t encoder_bias(int l) const { return static_cast<std::size_t>(2 * l + 1); }
  std::size_t decoder_weight(int l) const { return static_cast<std::size_t>(2 * (layers_ + l)); }
  std::size_t decoder_bias(int l) const { return static_cast<std::size_t>(2 * (layers_ + l) + 1); }

  friend bool operator==(const CagedParams&, const CagedParams&) = default;

 private:
  std::size_t dim_;
  int layers_;
  std::vector<std::size_t> enc_widths_;
  std::vector<std::size_t> dec_widths_;
  optim::ParamStore store_;
};

struct Encoded {
  std::vector<double> mu;
  std::vector<double> log_var;  // clamped to [kLogVarMin, kLogVarMax]
};

struct ElboTerms {
  double recon = 0.0;
  double kl = 0.0;
  double total = 0.0;
};

/// Forward pass of the encoder on (e_x || e_u).
Encoded encode(std::span<const double> e_x, std::span<const double> e_u, const CagedParams& params);
/// z = mu + tau * exp(log_var / 2).
std::vector<double> reparameterize(std::span<const double> mu, std::span<const double> log_var,
                                   std::span<const double> tau);
/// Forward pass of the decoder on (z || e_u).
std::vector<double> decode(std::span<const double> z, std::span<const double> e_u, const CagedParams& params);

/// beta * sum_k 0.5 (mu_k^2 + sigma_k^2 - log sigma_k^2 - 1).
double kl_term(std::span<const double> mu, std::span<const double> log_var, double beta);
/// lambda * ||e_x - x_hat||^2 (no averaging over K).
double recon_term(std::span<const double> e_x, std::span<const double> x_hat, double lambda);

ElboTerms elbo_loss(std::span<const double> e_x, std::span<const double> e_u, const CagedParams& params,
                    std::span<const double> tau, double lambda, double beta);

/// F(v) * exp(-L_ELBO(e_x, e_v)) with the mean latent (tau = 0).
double edge_weight(const graph::InteractionGraph& graph, graph::Node center, graph::Node neighbor,
                   ConstMatrixView pooled, const CagedParams& params, double lambda, double beta);

/// Weight for every directed edge of the adjacency pattern; both directions
/// are evaluated independently, so the result is generally asymmetric.
graph::AggregationMatrix generate_weight_matrix(const graph::InteractionGraph& graph, ConstMatrixView pooled,
                                                const CagedParams& params, double lambda, double beta);

struct DirectedEdge {
  graph::Node center;
  graph::Node neighbor;
};

struct CagedGradient {
  double mean_elbo = 0.0;
  optim::Gradients grads;
};

/// Gradient of the batch-mean ELBO w.r.t. encoder and decoder parameters.
/// `taus` holds one K-vector of noise per edge; pooled embeddings are constants.
CagedGradient caged_backward(std::span<const DirectedEdge> edges, ConstMatrixView pooled, const CagedParams& params,
                             ConstMatrixView taus, double lambda, double beta);

void write_caged(const CagedParams& params, const std::filesystem::path& file);
CagedParams read_caged(const std::filesystem::path& file);

}  // namespace caged::vae
