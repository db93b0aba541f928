#include "caged/vae/caged.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "caged/simd/kernels.hpp"

namespace caged::vae {
namespace {

std::string layer_name(const char* part, int l, const char* kind) {
  return std::string(part) + "." + std::to_string(l) + "." + kind;
}

// Activations of every layer boundary: acts[0] is the input, acts[l + 1] the
// output of layer l (post-ReLU for hidden layers, raw for the last).
struct MlpTrace {
  std::vector<std::vector<double>> acts;
};

void mlp_forward(const optim::ParamStore& store, std::size_t first_param, int layers, std::vector<double> input,
                 MlpTrace& trace) {
  const auto& k = simd::active();
  trace.acts.resize(static_cast<std::size_t>(layers) + 1);
  trace.acts[0] = std::move(input);
  for (int l = 0; l < layers; ++l) {
    const auto& w = store[first_param + 2 * l];
    const auto& b = store[first_param + 2 * l + 1];
    const std::size_t out = w.shape[0];
    const std::size_t in = w.shape[1];
    const auto& x = trace.acts[l];
    if (x.size() != in) throw std::invalid_argument("MLP input width mismatch");
    auto& y = trace.acts[l + 1];
    y.resize(out);
    const bool hidden = l + 1 < layers;
    for (std::size_t j = 0; j < out; ++j) {
      const double pre = k.dot(w.value.data() + j * in, x.data(), in) + b.value[j];
      y[j] = hidden ? std::max(pre, 0.0) : pre;
    }
  }
}

// Accumulates parameter gradients for output gradient `dy`; returns d input.
std::vector<double> mlp_backward(const optim::ParamStore& store, std::size_t first_param, int layers,
                                 const MlpTrace& trace, std::vector<double> dy, optim::Gradients& grads) {
  const auto& k = simd::active();
  for (int l = layers - 1; l >= 0; --l) {
    const std::size_t wi = first_param + 2 * l;
    const auto& w = store[wi];
    const std::size_t out = w.shape[0];
    const std::size_t in = w.shape[1];
    const auto& x = trace.acts[l];
    auto& gw = grads.values[wi];
    auto& gb = grads.values[wi + 1];
    std::vector<double> dx(in, 0.0);
    for (std::size_t j = 0; j < out; ++j) {
      const double g = dy[j];
      if (g == 0.0) continue;
      gb[j] += g;
      k.axpy(g, x.data(), gw.data() + j * in, in);
      k.axpy(g, w.value.data() + j * in, dx.data(), in);
    }
    if (l > 0) {
      // ReLU: the stored activation is positive exactly where the pre-activation was.
      for (std::size_t c = 0; c < in; ++c)
        if (x[c] <= 0.0) dx[c] = 0.0;
    }
    dy = std::move(dx);
  }
  return dy;
}

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
  std::vector<double> v;
  v.reserve(a.size() + b.size());
  v.insert(v.end(), a.begin(), a.end());
  v.insert(v.end(), b.begin(), b.end());
  return v;
}

void check_dim(std::span<const double> v, std::size_t dim, const char* what) {
  if (v.size() != dim) throw std::invalid_argument(std::string(what) + ": expected a vector of the embedding dimension");
}

struct EdgeForward {
  MlpTrace enc;
  MlpTrace dec;
  std::vector<double> log_var_raw;
  std::vector<double> mu;
  std::vector<double> log_var;
  std::vector<double> sigma;
  std::vector<double> z;
  ElboTerms terms;
};

void edge_forward(std::span<const double> e_x, std::span<const double> e_u, const CagedParams& params,
                  std::span<const double> tau, double lambda, double beta, EdgeForward& f) {
  const std::size_t dim = params.dim();
  const int layers = params.layers();
  mlp_forward(params.store(), params.encoder_weight(0), layers, concat(e_x, e_u), f.enc);
  const auto& o = f.enc.acts.back();
  f.mu.assign(o.begin(), o.begin() + static_cast<std::ptrdiff_t>(dim));
  f.log_var_raw.assign(o.begin() + static_cast<std::ptrdiff_t>(dim), o.end());
  f.log_var.resize(dim);
  f.sigma.resize(dim);
  f.z.resize(dim);
  for (std::size_t c = 0; c < dim; ++c) {
    f.log_var[c] = std::clamp(f.log_var_raw[c], kLogVarMin, kLogVarMax);
    f.sigma[c] = std::exp(0.5 * f.log_var[c]);
    f.z[c] = f.mu[c] + tau[c] * f.sigma[c];
  }
  mlp_forward(params.store(), params.decoder_weight(0), layers, concat(f.z, e_u), f.dec);
  f.terms.recon = recon_term(e_x, f.dec.acts.back(), lambda);
  f.terms.kl = kl_term(f.mu, f.log_var, beta);
  f.terms.total = f.terms.recon + f.terms.kl;
}

}  // namespace

std::vector<std::size_t> mlp_widths(std::size_t in, std::size_t out, std::size_t base, int layers) {
  if (layers < 1) throw std::invalid_argument("mlp_widths: need at least one layer");
  const int hidden = layers - 1;
  const int up = (hidden + 1) / 2;
  std::vector<std::size_t> w{in};
  for (int j = 1; j <= hidden; ++j) {
    const int e = j <= up ? j : 2 * up - j;
    w.push_back(base << e);
  }
  w.push_back(out);
  return w;
}

CagedParams::CagedParams(std::size_t dim, int layers)
    : dim_(dim),
      layers_(layers),
      enc_widths_(mlp_widths(2 * dim, 2 * dim, 2 * dim, layers)),
      dec_widths_(mlp_widths(2 * dim, dim, 2 * dim, layers)) {
  if (dim == 0) throw std::invalid_argument("CagedParams: dim must be >= 1");
  for (int l = 0; l < layers; ++l) {
    store_.add(layer_name("encoder", l, "weight"), {enc_widths_[l + 1], enc_widths_[l]});
    store_.add(layer_name("encoder", l, "bias"), {enc_widths_[l + 1]});
  }
  for (int l = 0; l < layers; ++l) {
    store_.add(layer_name("decoder", l, "weight"), {dec_widths_[l + 1], dec_widths_[l]});
    store_.add(layer_name("decoder", l, "bias"), {dec_widths_[l + 1]});
  }
}

CagedParams CagedParams::random(std::size_t dim, int layers, Rng& rng) {
  CagedParams p(dim, layers);
  for (std::size_t i = 0; i < p.store_.size(); i += 2) {
    auto& w = p.store_[i];
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.shape[1]));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& x : w.value) x = u(rng);
    for (double& x : p.store_[i + 1].value) x = u(rng);
  }
  return p;
}

CagedParams CagedParams::from_store(optim::ParamStore store) {
  if (store.size() < 2 || store.size() % 4 != 0) throw std::invalid_argument("CAGED record: unexpected parameter count");
  const int layers = static_cast<int>(store.size() / 4);
  const std::size_t dim = store[2 * layers + 2 * (layers - 1)].shape[0];
  CagedParams p(dim, layers);
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (store[i].name != p.store_[i].name || store[i].shape != p.store_[i].shape)
      throw std::invalid_argument("CAGED record: parameter '" + store[i].name + "' does not match the expected layout");
  }
  p.store_ = std::move(store);
  return p;
}

Encoded encode(std::span<const double> e_x, std::span<const double> e_u, const CagedParams& params) {
  check_dim(e_x, params.dim(), "encode");
  check_dim(e_u, params.dim(), "encode");
  MlpTrace t;
  mlp_forward(params.store(), params.encoder_weight(0), params.layers(), concat(e_x, e_u), t);
  const auto& o = t.acts.back();
  const auto dim = static_cast<std::ptrdiff_t>(params.dim());
  Encoded e;
  e.mu.assign(o.begin(), o.begin() + dim);
  e.log_var.assign(o.begin() + dim, o.end());
  for (double& v : e.log_var) v = std::clamp(v, kLogVarMin, kLogVarMax);
  return e;
}

std::vector<double> reparameterize(std::span<const double> mu, std::span<const double> log_var,
                                   std::span<const double> tau) {
  if (mu.size() != log_var.size() || mu.size() != tau.size())
    throw std::invalid_argument("reparameterize: size mismatch");
  std::vector<double> z(mu.size());
  for (std::size_t c = 0; c < z.size(); ++c) z[c] = mu[c] + tau[c] * std::exp(0.5 * log_var[c]);
  return z;
}

std::vector<double> decode(std::span<const double> z, std::span<const double> e_u, const CagedParams& params) {
  check_dim(z, params.dim(), "decode");
  check_dim(e_u, params.dim(), "decode");
  MlpTrace t;
  mlp_forward(params.store(), params.decoder_weight(0), params.layers(), concat(z, e_u), t);
  return std::move(t.acts.back());
}

double kl_term(std::span<const double> mu, std::span<const double> log_var, double beta) {
  if (beta < 0.0) throw std::invalid_argument("kl_term: beta must be >= 0");
  if (mu.size() != log_var.size()) throw std::invalid_argument("kl_term: size mismatch");
  double s = 0.0;
  for (std::size_t c = 0; c < mu.size(); ++c) s += 0.5 * (mu[c] * mu[c] + std::exp(log_var[c]) - log_var[c] - 1.0);
  return beta * s;
}

double recon_term(std::span<const double> e_x, std::span<const double> x_hat, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("recon_term: lambda must be >= 0");
  if (e_x.size() != x_hat.size()) throw std::invalid_argument("recon_term: size mismatch");
  return lambda * simd::squared_distance(e_x, x_hat);
}

ElboTerms elbo_loss(std::span<const double> e_x, std::span<const double> e_u, const CagedParams& params,
                    std::span<const double> tau, double lambda, double beta) {
  check_dim(e_x, params.dim(), "elbo_loss");
  check_dim(e_u, params.dim(), "elbo_loss");
  check_dim(tau, params.dim(), "elbo_loss");
  EdgeForward f;
  edge_forward(e_x, e_u, params, tau, lambda, beta, f);
  return f.terms;
}

double edge_weight(const graph::InteractionGraph& graph, graph::Node center, graph::Node neighbor,
                   ConstMatrixView pooled, const CagedParams& params, double lambda, double beta) {
  if (!graph.has_edge(center, neighbor)) throw std::domain_error("edge_weight: not a neighbour of the center");
  const double f = graph::normalizer(graph, center);
  const std::vector<double> zero(params.dim(), 0.0);
  const auto terms = elbo_loss(pooled.row(neighbor), pooled.row(center), params, zero, lambda, beta);
  // exp(-total) underflows past ~745; keep the entry a positive normal number.
  return std::max(f * std::exp(-terms.total), std::numeric_limits<double>::min());
}

graph::AggregationMatrix generate_weight_matrix(const graph::InteractionGraph& graph, ConstMatrixView pooled,
                                                const CagedParams& params, double lambda, double beta) {
  if (pooled.rows() != graph.num_nodes() || pooled.cols() != params.dim())
    throw std::invalid_argument("generate_weight_matrix: embedding shape mismatch");
  const auto& p = graph.pattern();
  std::vector<double> values(p.nnz());
  const std::vector<double> zero(params.dim(), 0.0);
  EdgeForward f;
  for (graph::Node v = 0; v < p.num_nodes(); ++v) {
    if (graph.degree(v) == 0) continue;
    const double fv = graph::normalizer(graph, v);
    for (std::size_t e = p.offsets[v]; e < p.offsets[v + 1]; ++e) {
      edge_forward(pooled.row(p.cols[e]), pooled.row(v), params, zero, lambda, beta, f);
      values[e] = std::max(fv * std::exp(-f.terms.total), std::numeric_limits<double>::min());
    }
  }
  return graph::AggregationMatrix(graph.shared_pattern(), std::move(values));
}

CagedGradient caged_backward(std::span<const DirectedEdge> edges, ConstMatrixView pooled, const CagedParams& params,
                             ConstMatrixView taus, double lambda, double beta) {
  const std::size_t dim = params.dim();
  if (taus.rows() != edges.size() || taus.cols() != dim) throw std::invalid_argument("caged_backward: noise shape mismatch");
  if (pooled.cols() != dim) throw std::invalid_argument("caged_backward: embedding width mismatch");
  const int layers = params.layers();
  CagedGradient out;
  out.grads = optim::Gradients::zeros_like(params.store());
  if (edges.empty()) return out;
  const double inv_b = 1.0 / static_cast<double>(edges.size());

  EdgeForward f;
  double sum = 0.0;
  for (std::size_t b = 0; b < edges.size(); ++b) {
    const auto e_x = pooled.row(edges[b].neighbor);
    const auto e_u = pooled.row(edges[b].center);
    const auto tau = taus.row(b);
    edge_forward(e_x, e_u, params, tau, lambda, beta, f);
    sum += f.terms.total;
    if (lambda == 0.0 && beta == 0.0) continue;

    // d recon / d x_hat = 2 lambda (x_hat - e_x)
    const auto& x_hat = f.dec.acts.back();
    std::vector<double> d_xhat(dim);
    for (std::size_t c = 0; c < dim; ++c) d_xhat[c] = inv_b * 2.0 * lambda * (x_hat[c] - e_x[c]);
    const auto d_dec_in = mlp_backward(params.store(), params.decoder_weight(0), layers, f.dec, std::move(d_xhat),
                                       out.grads);

    std::vector<double> d_enc_out(2 * dim);
    for (std::size_t c = 0; c < dim; ++c) {
      const double dz = d_dec_in[c];
      d_enc_out[c] = dz + inv_b * beta * f.mu[c];
      // z = mu + tau exp(lv / 2); KL: beta/2 (exp(lv) - 1)
      double dlv = dz * tau[c] * 0.5 * f.sigma[c] + inv_b * beta * 0.5 * (std::exp(f.log_var[c]) - 1.0);
      const double raw = f.log_var_raw[c];
      if (raw <= kLogVarMin || raw >= kLogVarMax) dlv = 0.0;
      d_enc_out[dim + c] = dlv;
    }
    mlp_backward(params.store(), params.encoder_weight(0), layers, f.enc, std::move(d_enc_out), out.grads);
  }
  out.mean_elbo = sum * inv_b;
  return out;
}

void write_caged(const CagedParams& params, const std::filesystem::path& file) {
  optim::write_params(params.store(), file);
}

CagedParams read_caged(const std::filesystem::path& file) {
  return CagedParams::from_store(optim::read_params(file));
}

}  // namespace caged::vae
