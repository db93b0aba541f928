#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "caged/optim/param_store.hpp"

namespace caged::optim {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  static AdamState for_params(const ParamStore& store);

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam step. Gradients are validated before anything is
/// touched: a non-finite entry throws NonFiniteGradient naming the parameter
/// and leaves params and state unchanged.
void adam_step(ParamStore& params, const Gradients& grads, AdamState& state, double lr);

using LossFn = std::function<double(const ParamStore&)>;

/// Central-difference probe of `probe_count` random coordinates. Returns the
/// max relative error |a - n| / max(|a|, |n|, 1e-8).
double finite_diff_check(const LossFn& loss, const ParamStore& params, const Gradients& analytic,
                         std::size_t probe_count, double h, std::uint64_t seed = 0);

}  // namespace caged::optim
