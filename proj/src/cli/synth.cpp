#include "caged/cli/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_set>

#include "caged/core/rng.hpp"

namespace caged::cli {
namespace {

std::vector<double> zipf_weights(std::size_t n, double exponent) {
  std::vector<double> w(n);
  for (std::size_t r = 0; r < n; ++r) w[r] = std::pow(static_cast<double>(r + 1), -exponent);
  return w;
}

}  // namespace

std::vector<data::RawInteraction> synthesize(const SynthSpec& spec) {
  if (spec.users == 0 || spec.items == 0 || spec.interactions == 0)
    throw std::invalid_argument("synth: counts must be >= 1");
  if (!(spec.zipf_exponent > 0.0)) throw std::invalid_argument("synth: zipf exponent must be > 0");
  if (spec.interactions > spec.users * spec.items)
    throw std::invalid_argument("synth: more interactions requested than user-item pairs exist");

  Rng rng = make_rng(spec.seed, Stream::kSynth);

  // Popularity rank -> item id; groups alternate along the rank order so both
  // groups share the same long-tail profile.
  std::vector<std::uint32_t> item_of_rank(spec.items);
  std::iota(item_of_rank.begin(), item_of_rank.end(), 0u);
  std::shuffle(item_of_rank.begin(), item_of_rank.end(), rng);
  const auto item_w = zipf_weights(spec.items, spec.zipf_exponent);
  std::vector<std::uint32_t> group_items[2];
  std::vector<double> group_w[2];
  for (std::size_t r = 0; r < spec.items; ++r) {
    group_items[r % 2].push_back(item_of_rank[r]);
    group_w[r % 2].push_back(item_w[r]);
  }

  std::vector<std::uint32_t> user_of_rank(spec.users);
  std::iota(user_of_rank.begin(), user_of_rank.end(), 0u);
  std::shuffle(user_of_rank.begin(), user_of_rank.end(), rng);
  const auto user_w = zipf_weights(spec.users, spec.user_skew);
  std::vector<int> user_group(spec.users);
  for (std::size_t r = 0; r < spec.users; ++r) user_group[user_of_rank[r]] = static_cast<int>(r % 2);

  std::discrete_distribution<std::size_t> pick_user_rank(user_w.begin(), user_w.end());
  std::discrete_distribution<std::size_t> pick_item[2] = {
      std::discrete_distribution<std::size_t>(group_w[0].begin(), group_w[0].end()),
      std::discrete_distribution<std::size_t>(group_w[1].begin(), group_w[1].end())};
  std::bernoulli_distribution own_group(spec.in_group);

  std::unordered_set<std::uint64_t> seen;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  pairs.reserve(spec.interactions);
  const std::size_t max_attempts = 200 * spec.interactions;
  for (std::size_t a = 0; a < max_attempts && pairs.size() < spec.interactions; ++a) {
    const std::uint32_t u = user_of_rank[pick_user_rank(rng)];
    int g = user_group[u];
    if (!own_group(rng) || group_items[g].empty()) g = 1 - g;
    if (group_items[g].empty()) continue;
    const std::uint32_t i = group_items[g][pick_item[g](rng)];
    if (seen.insert(static_cast<std::uint64_t>(u) * spec.items + i).second) pairs.emplace_back(u, i);
  }
  if (pairs.size() < spec.interactions) {
    // Near-saturated request: top up uniformly from the unused pairs.
    std::vector<std::uint64_t> rest;
    for (std::uint64_t key = 0; key < spec.users * spec.items; ++key)
      if (!seen.count(key)) rest.push_back(key);
    std::shuffle(rest.begin(), rest.end(), rng);
    for (std::size_t j = 0; pairs.size() < spec.interactions; ++j)
      pairs.emplace_back(static_cast<std::uint32_t>(rest[j] / spec.items), static_cast<std::uint32_t>(rest[j] % spec.items));
  }

  std::vector<data::RawInteraction> out;
  out.reserve(pairs.size());
  for (const auto& [u, i] : pairs) out.push_back({"u" + std::to_string(u), "i" + std::to_string(i), std::nullopt, std::nullopt});
  return out;
}

void write_interactions(const std::vector<data::RawInteraction>& records, const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  for (const auto& r : records) {
    out << r.user_id << '\t' << r.item_id;
    if (r.rating) out << '\t' << *r.rating;
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

}  // namespace caged::cli
