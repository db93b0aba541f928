#include "caged/optim/adam.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "caged/core/error.hpp"
#include "caged/core/rng.hpp"

namespace caged::optim {

AdamState AdamState::for_params(const ParamStore& store) {
  AdamState s;
  for (const auto& p : store) {
    s.m.emplace_back(p.size(), 0.0);
    s.v.emplace_back(p.size(), 0.0);
  }
  return s;
}

void adam_step(ParamStore& params, const Gradients& grads, AdamState& state, double lr) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("adam_step: learning rate must be finite and >= 0");
  if (grads.values.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw std::invalid_argument("adam_step: gradient/state layout does not match params");
  for (std::size_t p = 0; p < params.size(); ++p) {
    const auto& g = grads.values[p];
    if (g.size() != params[p].size() || state.m[p].size() != g.size() || state.v[p].size() != g.size())
      throw std::invalid_argument("adam_step: shape mismatch for '" + params[p].name + "'");
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i])) {
        std::ostringstream os;
        os << "adam_step: non-finite gradient " << g[i] << " in '" << params[p].name << "' at flat index " << i;
        throw NonFiniteGradient(os.str());
      }
    }
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& theta = params[p].value;
    auto& m = state.m[p];
    auto& v = state.v[p];
    const auto& g = grads.values[p];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      theta[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

double finite_diff_check(const LossFn& loss, const ParamStore& params, const Gradients& analytic,
                         std::size_t probe_count, double h, std::uint64_t seed) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_check: h must be positive");
  const std::size_t total = params.total_size();
  if (total == 0) return 0.0;
  ParamStore probe = params;
  Rng rng = make_rng(seed, Stream::kProbe);
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  double worst = 0.0;
  for (std::size_t k = 0; k < probe_count; ++k) {
    std::size_t flat = pick(rng);
    std::size_t p = 0;
    while (flat >= probe[p].size()) flat -= probe[p++].size();
    double& x = probe[p].value[flat];
    const double saved = x;
    x = saved + h;
    const double fp = loss(probe);
    x = saved - h;
    const double fm = loss(probe);
    x = saved;
    const double numeric = (fp - fm) / (2.0 * h);
    const double a = analytic.values[p][flat];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

}  // namespace caged::optim
