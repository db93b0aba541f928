#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "caged/cli/app.hpp"
#include "caged/cli/synth.hpp"
#include "caged/data/ingest.hpp"
#include "caged/graph/graph.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using namespace caged;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("caged_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("usage errors") {
  CHECK(invoke({}).code == cli::kExitUsage);
  CHECK(invoke({"frobnicate"}).code == cli::kExitUsage);
  CHECK(invoke({"--help"}).code == cli::kExitOk);
  CHECK(invoke({"train", "--data", "x"}).code == cli::kExitUsage);
  const auto r = invoke({"prepare", "--input", "/nonexistent/ratings.dat", "--out", "/tmp/never"});
  CHECK(r.code != 0);
  CHECK(r.err.find("not found") != std::string::npos);
}

TEST_CASE("synth degree shape") {
  cli::SynthSpec spec;
  const auto recs = cli::synthesize(spec);
  CHECK(recs.size() == 15000);
  std::map<std::string, std::size_t> deg;
  for (const auto& r : recs) ++deg[r.item_id];
  std::vector<std::size_t> d;
  for (const auto& [id, c] : deg) d.push_back(c);
  std::sort(d.rbegin(), d.rend());
  std::size_t head = 0;
  for (std::size_t i = 0; i < 60; ++i) head += d[i];
  CHECK(static_cast<double>(head) > 0.6 * 15000.0);

  cli::SynthSpec flat;
  flat.users = 1000;
  flat.items = 100;
  flat.interactions = 10000;
  flat.zipf_exponent = 1e-6;
  std::map<std::string, std::size_t> fdeg;
  for (const auto& r : cli::synthesize(flat)) ++fdeg[r.item_id];
  std::size_t lo = SIZE_MAX, hi = 0;
  for (const auto& [id, c] : fdeg) {
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  CHECK(fdeg.size() == 100);
  CHECK(static_cast<double>(hi) / static_cast<double>(lo) < 3.0);

  cli::SynthSpec too_many;
  too_many.users = 2;
  too_many.items = 2;
  too_many.interactions = 5;
  CHECK_THROWS(cli::synthesize(too_many));
  CHECK(invoke({"synth", "--zipf", "0", "--out", "/tmp/never.tsv"}).code == cli::kExitUsage);

  CHECK(cli::synthesize(spec) == recs);
  spec.seed = 2;
  CHECK_FALSE(cli::synthesize(spec) == recs);
}

TEST_CASE("prepare is reproducible and reports density") {
  const auto dir = scratch("prepare");
  std::ofstream(dir / "in.tsv") << "a\tx\nb\tx\nb\ty\nc\tz\n";
  const auto r1 = invoke({"prepare", "--input", (dir / "in.tsv").string(), "--out", (dir / "d1").string()});
  const auto r2 = invoke({"prepare", "--input", (dir / "in.tsv").string(), "--out", (dir / "d2").string()});
  REQUIRE(r1.code == 0);
  CHECK(r1.out.find("users=3 items=3 interactions=4 density=0.44444") != std::string::npos);
  for (const char* f : {"train.tsv", "validation.tsv", "test.tsv", "index_map.json"})
    CHECK(slurp(dir / "d1" / f) == slurp(dir / "d2" / f));
  fs::remove_all(dir);
}

TEST_CASE("train, evaluate and report end to end") {
  const auto dir = scratch("e2e");
  REQUIRE(invoke({"synth", "--users", "40", "--items", "30", "--interactions", "400", "--seed", "3", "--out",
                  (dir / "syn.tsv").string()})
              .code == 0);
  REQUIRE(invoke({"prepare", "--input", (dir / "syn.tsv").string(), "--out", (dir / "ds").string()}).code == 0);

  const std::vector<std::string> train = {"train", "--data", (dir / "ds").string(), "--dim", "4", "--layers", "2",
                                          "--epochs", "3", "--batch-size", "64", "--eta1", "1e-2", "--beta", "0.1"};
  auto a = train;
  a.insert(a.end(), {"--out", (dir / "a").string()});
  auto b = train;
  b.insert(b.end(), {"--out", (dir / "b").string()});
  REQUIRE(invoke(a).code == 0);
  REQUIRE(invoke(b).code == 0);
  CHECK(slurp(dir / "a" / "progress.jsonl") == slurp(dir / "b" / "progress.jsonl"));
  CHECK(slurp(dir / "a" / "report.json") == slurp(dir / "b" / "report.json"));
  CHECK(fs::exists(dir / "a" / "checkpoints" / "epoch_0000" / "aggregation.bin"));
  CHECK(fs::exists(dir / "a" / "checkpoints" / "epoch_0001" / "caged.bin"));
  CHECK(slurp(dir / "a" / "config.txt").find("beta=0.1") != std::string::npos);

  const auto e1 = invoke({"evaluate", "--checkpoint", (dir / "a" / "best").string(), "--data", (dir / "ds").string()});
  const auto e2 = invoke({"evaluate", "--checkpoint", (dir / "a" / "best").string(), "--data", (dir / "ds").string()});
  REQUIRE(e1.code == 0);
  CHECK(e1.out == e2.out);
  CHECK(e1.out == slurp(dir / "a" / "report.json"));

  const auto init = invoke({"evaluate", "--checkpoint", (dir / "a" / "checkpoints" / "epoch_0000").string(), "--data",
                            (dir / "ds").string(), "--k", "5", "--out", (dir / "ev").string()});
  CHECK(init.code == 0);
  CHECK(init.out.find("\"k\": 5") != std::string::npos);
  CHECK(fs::exists(dir / "ev" / "iip_histogram.csv"));

  const auto rep = invoke({"report", "--run", (dir / "a").string()});
  REQUIRE(rep.code == 0);
  CHECK(rep.out.rfind("kind,stage,epoch,train_loss,val_recall,updated,bin_left,bin_right,count", 0) == 0);
  CHECK(rep.out.find("iip,before,0,") != std::string::npos);

  // Zero epochs: empty log and only the initial checkpoint.
  auto z = train;
  z[8] = "0";
  z.insert(z.end(), {"--out", (dir / "z").string()});
  REQUIRE(invoke(z).code == 0);
  CHECK(slurp(dir / "z" / "progress.jsonl").empty());
  std::size_t ckpts = 0;
  for (const auto& e : fs::directory_iterator(dir / "z" / "checkpoints")) ckpts += e.is_directory() ? 1 : 0;
  CHECK(ckpts == 1);

  // Config precedence: file < --set < named flag; unknown keys are usage errors.
  std::ofstream(dir / "cfg.txt") << "lambda=0.3\ngamma=0.2\n";
  auto c = train;
  c.insert(c.end(), {"--out", (dir / "c").string(), "--config", (dir / "cfg.txt").string(), "--set", "gamma=0.5",
                     "--set", "epsilon=0.5", "--epsilon", "0.25"});
  c[8] = "1";
  REQUIRE(invoke(c).code == 0);
  const auto cfg = slurp(dir / "c" / "config.txt");
  CHECK(cfg.find("lambda=0.3\n") != std::string::npos);
  CHECK(cfg.find("gamma=0.5\n") != std::string::npos);
  CHECK(cfg.find("epsilon=0.25\n") != std::string::npos);
  auto bad = train;
  bad.insert(bad.end(), {"--out", (dir / "bad").string(), "--set", "nope=1"});
  const auto rb = invoke(bad);
  CHECK(rb.code == cli::kExitUsage);
  CHECK(rb.err.find("valid keys") != std::string::npos);
  auto bad_eps = train;
  bad_eps.insert(bad_eps.end(), {"--out", (dir / "bad").string(), "--epsilon", "2"});
  CHECK(invoke(bad_eps).code == cli::kExitUsage);
  fs::remove_all(dir);
}

TEST_CASE("movielens binarization through prepare") {
  const auto dir = scratch("ml");
  std::ofstream(dir / "ratings.dat") << "1::10::5::1\n1::11::4::2\n2::10::5::3\n2::12::3::4\n3::12::5::5\n";
  const auto r = invoke({"prepare", "--input", (dir / "ratings.dat").string(), "--format", "movielens", "--threshold",
                         "5", "--out", (dir / "ds").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("interactions=3") != std::string::npos);
  fs::remove_all(dir);
}
