#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "caged/data/ingest.hpp"

namespace caged::cli {

struct SynthSpec {
  std::size_t users = 500;
  std::size_t items = 300;
  std::size_t interactions = 15000;
  double zipf_exponent = 1.2;
  std::uint64_t seed = 1;
  // Probability that a draw comes from the user's own latent group.
  double in_group = 0.85;
  // Zipf exponent of user activity ("mild" skew).
  double user_skew = 0.5;
};

/// Long-tail implicit-feedback interactions: item popularity follows a Zipf
/// law, user activity is mildly skewed, and users and items fall into two
/// latent groups with users preferring their own group. Deduplicated to
/// exactly `interactions` records. Throws std::invalid_argument when
/// interactions > users * items or a count is zero.
std::vector<data::RawInteraction> synthesize(const SynthSpec& spec);

/// Tab-separated "user<TAB>item" lines.
void write_interactions(const std::vector<data::RawInteraction>& records, const std::filesystem::path& file);

}  // namespace caged::cli
