#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "caged/core/error.hpp"
#include "caged/data/ingest.hpp"
#include "doctest.h"

using namespace caged;
using data::RawInteraction;

namespace {

std::vector<RawInteraction> implicit_records(std::size_t users, std::size_t per_user) {
  std::vector<RawInteraction> out;
  for (std::size_t u = 0; u < users; ++u)
    for (std::size_t i = 0; i < per_user; ++i)
      out.push_back({"u" + std::to_string(u), "i" + std::to_string(i * 7 + u), std::nullopt, std::nullopt});
  return out;
}

}  // namespace

TEST_CASE("parse full record") {
  std::istringstream in("u1\ti9\t5\t100\n");
  const auto recs = data::parse_interactions(in);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0] == RawInteraction{"u1", "i9", 5.0, 100});
}

TEST_CASE("parse edge cases") {
  std::istringstream empty("");
  CHECK(data::parse_interactions(empty).empty());

  std::istringstream one_field("u1\n");
  try {
    data::parse_interactions(one_field);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
  }

  std::istringstream ml("1::1193::5::978300760\n1::661::3::978302109\n");
  const auto recs = data::parse_interactions(ml, "::");
  REQUIRE(recs.size() == 2);
  CHECK(recs[1].item_id == "661");
  CHECK(recs[1].rating == 3.0);

  std::istringstream bad_rating("u\ti\tfive\n");
  CHECK_THROWS_AS(data::parse_interactions(bad_rating), ParseError);

  CHECK_THROWS(data::load_interactions("/nonexistent/file.tsv"));
}

TEST_CASE("binarize") {
  std::vector<RawInteraction> recs = {{"a", "x", 5.0, {}}, {"a", "y", 4.0, {}}, {"b", "x", 5.0, {}}};
  CHECK(data::binarize(recs, 5.0).size() == 2);
  CHECK(data::binarize(recs, 0.0).size() == 3);
  const auto implicit = implicit_records(2, 3);
  CHECK(data::binarize(implicit, 5.0).size() == implicit.size());
}

TEST_CASE("deduplicate keeps first occurrence") {
  std::vector<RawInteraction> recs = {{"a", "x", 1.0, {}}, {"a", "x", 5.0, {}}, {"b", "x", 2.0, {}}};
  const auto out = data::deduplicate(recs);
  REQUIRE(out.size() == 2);
  CHECK(out[0].rating == 1.0);
}

TEST_CASE("split sizes") {
  CHECK(data::split_sizes(10, {}) == std::vector<std::size_t>{7, 1, 2});
  for (std::size_t n = 0; n < 200; ++n) {
    const auto s = data::split_sizes(n, {});
    CHECK(s[0] + s[1] + s[2] == n);
    const double share[] = {0.7, 0.1, 0.2};
    for (int k = 0; k < 3; ++k) CHECK(std::abs(static_cast<double>(s[k]) - share[k] * static_cast<double>(n)) <= 1.0);
  }
}

TEST_CASE("split of ten records") {
  const auto recs = implicit_records(1, 10);
  const auto ds = data::split(recs, {}, 3);
  CHECK(ds.train.size() == 7);
  CHECK(ds.validation.size() == 1);
  CHECK(ds.test.size() == 2);
  CHECK(ds.num_users == 1);
  CHECK(ds.num_items == 10);
  CHECK(data::split(recs, {}, 3) == ds);
}

TEST_CASE("split rejects duplicates and empty input") {
  CHECK_THROWS(data::split({}, {}, 1));
  std::vector<RawInteraction> dup = {{"a", "x", {}, {}}, {"a", "x", {}, {}}};
  CHECK_THROWS(data::split(dup, {}, 1));
}

TEST_CASE("coverage repair keeps every user in train") {
  // 2 users x 10 records; check every seed against a brute-force oracle:
  // each user must own at least one train record and the split must be a
  // partition of the input.
  const auto recs = implicit_records(2, 10);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto ds = data::split(recs, {}, seed);
    std::set<std::uint32_t> train_users;
    for (const auto& e : ds.train) train_users.insert(e.user);
    CHECK(train_users.size() == 2);
    std::set<data::Interaction> all;
    for (const auto* part : {&ds.train, &ds.validation, &ds.test}) all.insert(part->begin(), part->end());
    CHECK(all.size() == recs.size());
  }

  // A user whose single record lands outside train is repaired.
  std::vector<RawInteraction> skewed = implicit_records(1, 30);
  skewed.push_back({"lonely", "i0", {}, {}});
  bool saw_repair = false;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto ds = data::split(skewed, {}, seed);
    const auto lonely = ds.user_index().at("lonely");
    CHECK(std::any_of(ds.train.begin(), ds.train.end(), [&](const auto& e) { return e.user == lonely; }));
    saw_repair = saw_repair || !ds.repaired_users.empty();
  }
  CHECK(saw_repair);
}

TEST_CASE("dataset round trip on disk") {
  const auto dir = std::filesystem::temp_directory_path() / "caged_ingest_roundtrip";
  std::filesystem::remove_all(dir);
  const auto ds = data::split(implicit_records(5, 8), {}, 11);
  data::save_dataset(ds, dir);
  const auto back = data::load_dataset(dir);
  CHECK(back.train == ds.train);
  CHECK(back.validation == ds.validation);
  CHECK(back.test == ds.test);
  CHECK(back.user_ids == ds.user_ids);
  CHECK(back.item_ids == ds.item_ids);
  std::filesystem::remove_all(dir);
}
